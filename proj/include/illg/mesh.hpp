#pragma once

// Two-dimensional conforming triangulations: construction, ASCII I/O, and
// shape metrics (h, h_min, nodal patch diameters).

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace illg {

using Point2 = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by load_mesh; carries the 1-based line number of the offending line.
class MeshParseError : public MeshError {
public:
    MeshParseError(std::size_t line, const std::string& what)
        : MeshError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline double triangle_signed_area(const Point2& a, const Point2& b, const Point2& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

/// Immutable triangulation. The constructor validates connectivity, flips
/// clockwise triangles to counterclockwise order and computes the shape
/// metrics; a constructed Mesh always satisfies its invariants.
class Mesh {
public:
    Mesh(std::vector<Point2> vertices, std::vector<Triangle> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles))
    {
        validate();
        compute_metrics();
    }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }

    const std::vector<Point2>& vertices() const noexcept { return vertices_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const Point2& vertex(std::size_t i) const { return vertices_[i]; }
    const Triangle& triangle(std::size_t t) const { return triangles_[t]; }

    /// Maximum element diameter.
    double h() const noexcept { return h_; }
    /// Minimum element diameter.
    double h_min() const noexcept { return h_min_; }
    /// Diameter of the union of the triangles sharing vertex z.
    const std::vector<double>& patch_diameters() const noexcept { return patch_diameters_; }

    double area(std::size_t t) const
    {
        const auto& tri = triangles_[t];
        return triangle_signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    }

    double diameter(std::size_t t) const
    {
        const auto& tri = triangles_[t];
        double d = 0.0;
        for (int e = 0; e < 3; ++e) {
            d = std::max(d, (vertices_[tri[e]] - vertices_[tri[(e + 1) % 3]]).norm());
        }
        return d;
    }

    double total_area() const
    {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            a += area(t);
        }
        return a;
    }

private:
    void validate()
    {
        if (vertices_.empty() || triangles_.empty()) {
            throw MeshError("mesh must contain at least one triangle");
        }
        const int nv = static_cast<int>(vertices_.size());
        std::vector<char> used(vertices_.size(), 0);
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            auto& tri = triangles_[t];
            for (int v : tri) {
                if (v < 0 || v >= nv) {
                    throw MeshError("triangle " + std::to_string(t) + " references vertex "
                                    + std::to_string(v) + " out of range");
                }
                used[v] = 1;
            }
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
                throw MeshError("triangle " + std::to_string(t) + " repeats a vertex");
            }
            const double a = triangle_signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
            if (a < 0.0) {
                std::swap(tri[1], tri[2]);
            }
            const double scale = (vertices_[tri[1]] - vertices_[tri[0]]).squaredNorm()
                                 + (vertices_[tri[2]] - vertices_[tri[0]]).squaredNorm();
            if (!(std::abs(a) > 1e-14 * scale)) {
                throw MeshError("triangle " + std::to_string(t) + " is degenerate");
            }
        }
        for (std::size_t v = 0; v < used.size(); ++v) {
            if (!used[v]) {
                throw MeshError("vertex " + std::to_string(v) + " belongs to no triangle");
            }
        }

        // With consistent counterclockwise orientation, an interior edge is
        // traversed once in each direction; a directed edge seen twice means
        // overlapping or inconsistently glued elements.
        std::map<std::pair<int, int>, int> directed;
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& tri = triangles_[t];
            for (int e = 0; e < 3; ++e) {
                auto key = std::make_pair(tri[e], tri[(e + 1) % 3]);
                if (!directed.emplace(key, static_cast<int>(t)).second) {
                    throw MeshError("non-conforming mesh: edge (" + std::to_string(key.first) + ","
                                    + std::to_string(key.second) + ") shared by triangles "
                                    + std::to_string(directed[key]) + " and " + std::to_string(t));
                }
            }
        }

        // Hanging nodes show up as a vertex lying inside a boundary edge.
        std::vector<std::pair<int, int>> boundary;
        std::vector<int> boundary_vertices;
        for (const auto& [edge, t] : directed) {
            if (!directed.count({edge.second, edge.first})) {
                boundary.push_back(edge);
                boundary_vertices.push_back(edge.first);
            }
        }
        for (const auto& [a, b] : boundary) {
            const Point2& pa = vertices_[a];
            const Point2& pb = vertices_[b];
            const Point2 d = pb - pa;
            const double len2 = d.squaredNorm();
            for (int v : boundary_vertices) {
                if (v == a || v == b) {
                    continue;
                }
                const Point2 r = vertices_[v] - pa;
                const double s = r.dot(d) / len2;
                const double cross = d.x() * r.y() - d.y() * r.x();
                if (s > 1e-12 && s < 1.0 - 1e-12 && std::abs(cross) <= 1e-12 * len2) {
                    throw MeshError("non-conforming mesh: vertex " + std::to_string(v)
                                    + " hangs on edge (" + std::to_string(a) + ","
                                    + std::to_string(b) + ")");
                }
            }
        }
    }

    void compute_metrics()
    {
        h_ = 0.0;
        h_min_ = std::numeric_limits<double>::infinity();
        std::vector<std::vector<int>> patch(vertices_.size());
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const double d = diameter(t);
            h_ = std::max(h_, d);
            h_min_ = std::min(h_min_, d);
            for (int v : triangles_[t]) {
                for (int w : triangles_[t]) {
                    patch[v].push_back(w);
                }
            }
        }
        patch_diameters_.assign(vertices_.size(), 0.0);
        for (std::size_t z = 0; z < vertices_.size(); ++z) {
            auto& p = patch[z];
            std::sort(p.begin(), p.end());
            p.erase(std::unique(p.begin(), p.end()), p.end());
            double d = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                for (std::size_t j = i + 1; j < p.size(); ++j) {
                    d = std::max(d, (vertices_[p[i]] - vertices_[p[j]]).norm());
                }
            }
            patch_diameters_[z] = d;
        }
    }

    std::vector<Point2> vertices_;
    std::vector<Triangle> triangles_;
    double h_ = 0.0;
    double h_min_ = 0.0;
    std::vector<double> patch_diameters_;
};

enum class DiagonalPattern {
    /// every cell cut from lower-left to upper-right
    fixed,
    /// cells with odd i + j cut along the other diagonal
    alternating,
};

/// Uniform mesh of (-1/2, 1/2)^2 with 2^(2*level+1) right triangles.
/// Vertices are numbered row-major starting at (-1/2, -1/2).
inline Mesh generate_uniform_square(int level, DiagonalPattern pattern = DiagonalPattern::fixed)
{
    if (level < 1 || level > 14) {
        throw MeshError("uniform square level must be in [1, 14]");
    }
    const int n = 1 << level;
    const int np = n + 1;
    const double s = 1.0 / n;
    std::vector<Point2> vertices;
    vertices.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            vertices.emplace_back(-0.5 + i * s, -0.5 + j * s);
        }
    }
    auto vid = [np](int i, int j) { return j * np + i; };
    std::vector<Triangle> triangles;
    triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
            if (pattern == DiagonalPattern::alternating && (i + j) % 2 == 1) {
                triangles.push_back({v00, v10, v01});
                triangles.push_back({v10, v11, v01});
            } else {
                triangles.push_back({v00, v10, v11});
                triangles.push_back({v00, v11, v01});
            }
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

/// Ring triangulation of the ellipse x^2/a^2 + y^2/b^2 < 1: ring j carries 6j
/// vertices, adjacent rings are zipped by angle, giving 6 * rings^2 triangles.
inline Mesh generate_ellipse(double semi_a, double semi_b, int rings)
{
    if (!(semi_a > 0.0) || !(semi_b > 0.0) || rings < 1) {
        throw MeshError("ellipse needs positive semiaxes and at least one ring");
    }
    std::vector<Point2> vertices;
    vertices.emplace_back(0.0, 0.0);
    std::vector<int> ring_start{0};
    for (int j = 1; j <= rings; ++j) {
        ring_start.push_back(static_cast<int>(vertices.size()));
        const double r = static_cast<double>(j) / rings;
        const int count = 6 * j;
        for (int i = 0; i < count; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / count;
            vertices.emplace_back(semi_a * r * std::cos(theta), semi_b * r * std::sin(theta));
        }
    }
    std::vector<Triangle> triangles;
    for (int j = 1; j <= rings; ++j) {
        const int inner_count = j == 1 ? 1 : 6 * (j - 1);
        const int outer_count = 6 * j;
        const int inner0 = ring_start[j - 1];
        const int outer0 = ring_start[j];
        if (j == 1) {
            for (int i = 0; i < outer_count; ++i) {
                triangles.push_back({inner0, outer0 + i, outer0 + (i + 1) % outer_count});
            }
            continue;
        }
        // Advance whichever ring's next vertex has the smaller angle.
        int a = 0, b = 0;
        while (a < inner_count || b < outer_count) {
            const double next_inner = static_cast<double>(a + 1) / inner_count;
            const double next_outer = static_cast<double>(b + 1) / outer_count;
            const int ia = inner0 + a % inner_count;
            const int ob = outer0 + b % outer_count;
            if (b < outer_count && (a >= inner_count || next_outer <= next_inner)) {
                triangles.push_back({ia, ob, outer0 + (b + 1) % outer_count});
                ++b;
            } else {
                triangles.push_back({ia, ob, inner0 + (a + 1) % inner_count});
                ++a;
            }
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

/// Reads the ASCII format: header `nv nt`, nv lines `x y`, nt lines `i j k`
/// (0-based). Lines starting with `#` and blank lines are skipped.
inline Mesh read_mesh(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](const char* what) -> std::istringstream {
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') {
                continue;
            }
            return std::istringstream(line);
        }
        throw MeshParseError(lineno + 1, std::string("unexpected end of file, expected ") + what);
    };
    auto expect_end = [&](std::istringstream& ls) {
        std::string rest;
        if (ls >> rest) {
            throw MeshParseError(lineno, "trailing token '" + rest + "'");
        }
    };

    long long nv = 0, nt = 0;
    {
        auto ls = next_line("header 'nv nt'");
        if (!(ls >> nv >> nt) || nv <= 0 || nt <= 0) {
            throw MeshParseError(lineno, "malformed header, expected positive 'nv nt'");
        }
        expect_end(ls);
    }
    std::vector<Point2> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        auto ls = next_line("vertex 'x y'");
        double x = 0.0, y = 0.0;
        if (!(ls >> x >> y) || !std::isfinite(x) || !std::isfinite(y)) {
            throw MeshParseError(lineno, "malformed vertex, expected 'x y'");
        }
        expect_end(ls);
        vertices.emplace_back(x, y);
    }
    std::vector<Triangle> triangles;
    triangles.reserve(static_cast<std::size_t>(nt));
    for (long long t = 0; t < nt; ++t) {
        auto ls = next_line("triangle 'i j k'");
        long long i = 0, j = 0, k = 0;
        if (!(ls >> i >> j >> k)) {
            throw MeshParseError(lineno, "malformed triangle, expected 'i j k'");
        }
        expect_end(ls);
        for (long long v : {i, j, k}) {
            if (v < 0 || v >= nv) {
                throw MeshParseError(lineno, "vertex index " + std::to_string(v) + " out of range");
            }
        }
        triangles.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)});
    }
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos && line[first] != '#') {
            throw MeshParseError(lineno, "unexpected content after last triangle");
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

inline Mesh load_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw MeshError("cannot open mesh file '" + path + "'");
    }
    return read_mesh(in);
}

inline void write_mesh(std::ostream& out, const Mesh& mesh)
{
    out.precision(17);
    out << "# illg mesh: " << mesh.num_vertices() << " vertices, " << mesh.num_triangles()
        << " triangles\n";
    out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
    for (const auto& p : mesh.vertices()) {
        out << p.x() << ' ' << p.y() << '\n';
    }
    for (const auto& t : mesh.triangles()) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
}

inline void save_mesh(const std::string& path, const Mesh& mesh)
{
    std::ofstream out(path);
    if (!out) {
        throw MeshError("cannot write mesh file '" + path + "'");
    }
    write_mesh(out, mesh);
    if (!out) {
        throw MeshError("error while writing '" + path + "'");
    }
}

} // namespace illg
