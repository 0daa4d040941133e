#pragma once

// Observable rows, CSV emission and parsing, VTK legacy snapshots.

#include "illg/fem.hpp"
#include "illg/mesh.hpp"

#include <array>
#include <cmath>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace illg {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ObservableRow {
    double t = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double exchange = 0.0;
    /// (tau / 2) ||aux||_h^2 with aux = v (TPS) or w (AMM)
    double kinetic = 0.0;
    double tot = 0.0;
    double w1infty = 0.0;
    /// fixed-point sweeps (AMM) or Krylov iterations (TPS) of the step ending at t
    int iters = 0;

    bool all_finite() const
    {
        for (double x : {t, m1, m2, m3, exchange, kinetic, tot, w1infty}) {
            if (!std::isfinite(x)) {
                return false;
            }
        }
        return true;
    }
};

inline constexpr const char* kCsvHeader = "t,m1,m2,m3,exchange,kinetic,tot,W1infty,iters";

/// Shortest representation that parses back to the same double.
inline std::string format_double(double x)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

inline void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

inline void write_csv_row(std::ostream& out, const ObservableRow& r)
{
    out << format_double(r.t) << ',' << format_double(r.m1) << ',' << format_double(r.m2) << ','
        << format_double(r.m3) << ',' << format_double(r.exchange) << ',' << format_double(r.kinetic) << ','
        << format_double(r.tot) << ',' << format_double(r.w1infty) << ',' << r.iters << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<ObservableRow>& rows)
{
    write_csv_header(out);
    for (const auto& r : rows) {
        write_csv_row(out, r);
    }
}

inline void write_csv(const std::string& path, const std::vector<ObservableRow>& rows)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    write_csv(out, rows);
    if (!out) {
        throw IoError("write to " + path + " failed");
    }
}

namespace detail {

template <class T>
T parse_number(const std::string& token, std::size_t line)
{
    T value{};
    const char* first = token.data();
    const char* last = first + token.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw IoError("csv line " + std::to_string(line) + ": bad number '" + token + "'");
    }
    return value;
}

} // namespace detail

inline std::vector<ObservableRow> read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw IoError("csv: missing or unexpected header");
    }
    std::vector<ObservableRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 9) {
            throw IoError("csv line " + std::to_string(lineno) + ": expected 9 fields, got "
                          + std::to_string(cells.size()));
        }
        ObservableRow r;
        double* fields[] = {&r.t, &r.m1, &r.m2, &r.m3, &r.exchange, &r.kinetic, &r.tot, &r.w1infty};
        for (int i = 0; i < 8; ++i) {
            *fields[i] = detail::parse_number<double>(cells[static_cast<std::size_t>(i)], lineno);
        }
        r.iters = detail::parse_number<int>(cells[8], lineno);
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<ObservableRow> read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return read_csv(in);
}

/// Legacy ASCII unstructured grid; the field is attached as point vectors "m".
inline void write_vtk(std::ostream& out, const Mesh& mesh, const NodalVectorField& m)
{
    if (m.size() != mesh.num_vertices()) {
        throw FieldError("vtk: field size does not match mesh");
    }
    const std::size_t nv = mesh.num_vertices();
    const std::size_t nt = mesh.num_triangles();
    out << "# vtk DataFile Version 3.0\nmagnetization\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (std::size_t z = 0; z < nv; ++z) {
        const Point2& p = mesh.vertex(z);
        out << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
    }
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangle(t);
        out << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
    out << "CELL_TYPES " << nt << '\n';
    for (std::size_t t = 0; t < nt; ++t) {
        out << "5\n";
    }
    out << "POINT_DATA " << nv << "\nVECTORS m double\n";
    for (std::size_t z = 0; z < nv; ++z) {
        const Vec3 v = m[z];
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
}

inline void write_vtk(const std::string& path, const Mesh& mesh, const NodalVectorField& m)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    write_vtk(out, mesh, m);
    if (!out) {
        throw IoError("write to " + path + " failed");
    }
}

} // namespace illg
