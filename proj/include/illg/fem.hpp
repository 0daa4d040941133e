#pragma once

// P1 finite-element machinery on a Mesh: lumped mass, stiffness, the
// mass-lumped inner product, the discrete effective-field mapping, tangent
// frames and vertexwise helpers.

#include "illg/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace illg {

using Vec3 = Eigen::Vector3d;

class FieldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One 3-vector per mesh vertex, stored row-major so each vertex value is contiguous.
class NodalVectorField {
public:
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

    NodalVectorField() = default;
    explicit NodalVectorField(std::size_t n) : values_(Matrix::Zero(static_cast<Eigen::Index>(n), 3)) {}
    explicit NodalVectorField(Matrix values) : values_(std::move(values)) {}

    static NodalVectorField constant(std::size_t n, const Vec3& value)
    {
        NodalVectorField f(n);
        f.values_.rowwise() = value.transpose();
        return f;
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }

    Vec3 operator[](std::size_t z) const { return values_.row(static_cast<Eigen::Index>(z)).transpose(); }
    void set(std::size_t z, const Vec3& value) { values_.row(static_cast<Eigen::Index>(z)) = value.transpose(); }

    Matrix& matrix() noexcept { return values_; }
    const Matrix& matrix() const noexcept { return values_; }

    bool all_finite() const { return values_.allFinite(); }

    NodalVectorField& operator+=(const NodalVectorField& o) { check(o); values_ += o.values_; return *this; }
    NodalVectorField& operator-=(const NodalVectorField& o) { check(o); values_ -= o.values_; return *this; }
    NodalVectorField& operator*=(double s) { values_ *= s; return *this; }

    friend NodalVectorField operator+(NodalVectorField a, const NodalVectorField& b) { return a += b; }
    friend NodalVectorField operator-(NodalVectorField a, const NodalVectorField& b) { return a -= b; }
    friend NodalVectorField operator*(double s, NodalVectorField a) { return a *= s; }
    friend NodalVectorField operator*(NodalVectorField a, double s) { return a *= s; }

private:
    void check(const NodalVectorField& o) const
    {
        if (o.size() != size()) {
            throw FieldError("nodal field size mismatch: " + std::to_string(size()) + " vs "
                             + std::to_string(o.size()));
        }
    }

    Matrix values_;
};

inline void require_same_size(const NodalVectorField& a, const NodalVectorField& b)
{
    if (a.size() != b.size()) {
        throw FieldError("nodal field size mismatch: " + std::to_string(a.size()) + " vs "
                         + std::to_string(b.size()));
    }
}

/// Vertex quadrature weights: one third of the patch area per vertex.
class LumpedMass {
public:
    LumpedMass() = default;
    explicit LumpedMass(Eigen::VectorXd weights) : weights_(std::move(weights)) {}

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
    double operator[](std::size_t z) const { return weights_[static_cast<Eigen::Index>(z)]; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double total() const { return weights_.sum(); }

private:
    Eigen::VectorXd weights_;
};

/// Square sparse matrix over vertex indices, compressed row storage with
/// sorted column indices. Acts componentwise on nodal vector fields.
class SparseOperator {
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    SparseOperator() = default;
    explicit SparseOperator(Matrix m) : matrix_(std::move(m)) { matrix_.makeCompressed(); }

    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
    const Matrix& matrix() const noexcept { return matrix_; }

    double coeff(std::size_t i, std::size_t j) const
    {
        return matrix_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    NodalVectorField apply(const NodalVectorField& f) const
    {
        if (f.size() != size()) {
            throw FieldError("operator of size " + std::to_string(size()) + " applied to field of size "
                             + std::to_string(f.size()));
        }
        return NodalVectorField(NodalVectorField::Matrix(matrix_ * f.matrix()));
    }

private:
    Matrix matrix_;
};

inline LumpedMass assemble_lumped_mass(const Mesh& mesh)
{
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double third = mesh.area(t) / 3.0;
        for (int v : mesh.triangle(t)) {
            w[v] += third;
        }
    }
    return LumpedMass(std::move(w));
}

/// Gradients of the three barycentric coordinates on triangle t.
inline std::array<Point2, 3> hat_gradients(const Mesh& mesh, std::size_t t)
{
    const auto& tri = mesh.triangle(t);
    const Point2& p0 = mesh.vertex(tri[0]);
    const Point2& p1 = mesh.vertex(tri[1]);
    const Point2& p2 = mesh.vertex(tri[2]);
    const double twice_area = 2.0 * mesh.area(t);
    // grad lambda_i = rot90(p_{i+2} - p_{i+1}) / (2|K|) for counterclockwise triangles
    auto g = [twice_area](const Point2& a, const Point2& b) -> Point2 {
        return Point2(a.y() - b.y(), b.x() - a.x()) / twice_area;
    };
    return {g(p1, p2), g(p2, p0), g(p0, p1)};
}

/// Entries (grad phi_z, grad phi_z') in L^2.
inline SparseOperator assemble_stiffness(const Mesh& mesh)
{
    std::vector<Eigen::Triplet<double, int>> triplets;
    triplets.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto grads = hat_gradients(mesh, t);
        const double area = mesh.area(t);
        const auto& tri = mesh.triangle(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                triplets.emplace_back(tri[i], tri[j], area * grads[i].dot(grads[j]));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    SparseOperator::Matrix s(n, n);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return SparseOperator(std::move(s));
}

/// Mesh, lumped mass and stiffness assembled together; immutable and shareable.
struct FemContext {
    Mesh mesh;
    LumpedMass mass;
    SparseOperator stiffness;

    explicit FemContext(Mesh m)
        : mesh(std::move(m)), mass(assemble_lumped_mass(mesh)), stiffness(assemble_stiffness(mesh)) {}

    std::size_t num_vertices() const noexcept { return mesh.num_vertices(); }
};

struct AngleConditionReport {
    std::size_t violations = 0;
    /// Largest off-diagonal entry found (may be negative when none violate).
    double worst_off_diagonal = -std::numeric_limits<double>::infinity();

    bool satisfied() const noexcept { return violations == 0; }
};

/// Counts positive off-diagonal stiffness entries (each unordered pair once).
inline AngleConditionReport check_angle_condition(const Mesh& mesh, const SparseOperator& stiffness,
                                                  double tolerance = 1e-12)
{
    if (stiffness.size() != mesh.num_vertices()) {
        throw FieldError("stiffness has " + std::to_string(stiffness.size()) + " rows but mesh has "
                         + std::to_string(mesh.num_vertices()) + " vertices");
    }
    AngleConditionReport report;
    const auto& s = stiffness.matrix();
    for (int row = 0; row < s.outerSize(); ++row) {
        for (SparseOperator::Matrix::InnerIterator it(s, row); it; ++it) {
            if (it.col() <= row) {
                continue;
            }
            report.worst_off_diagonal = std::max(report.worst_off_diagonal, it.value());
            if (it.value() > tolerance) {
                ++report.violations;
            }
        }
    }
    return report;
}

inline double inner_h(const LumpedMass& mass, const NodalVectorField& f, const NodalVectorField& g)
{
    require_same_size(f, g);
    if (f.size() != mass.size()) {
        throw FieldError("field size does not match the lumped mass");
    }
    return mass.weights().dot(f.matrix().cwiseProduct(g.matrix()).rowwise().sum());
}

inline double norm_h(const LumpedMass& mass, const NodalVectorField& f)
{
    return std::sqrt(inner_h(mass, f, f));
}

/// Dirichlet form (grad f, grad g) summed over the three components.
inline double stiffness_form(const SparseOperator& stiffness, const NodalVectorField& f,
                             const NodalVectorField& g)
{
    require_same_size(f, g);
    return (stiffness.apply(f).matrix().cwiseProduct(g.matrix())).sum();
}

/// P_h applied to the exchange field: nodal values -scale * (S m)(z) / weight(z).
inline NodalVectorField apply_ph_heff(const LumpedMass& mass, const SparseOperator& stiffness,
                                      const NodalVectorField& m, double scale = 1.0)
{
    NodalVectorField out = stiffness.apply(m);
    out.matrix().array().colwise() *= (-scale / mass.weights().array());
    return out;
}

/// Orthonormal basis (t1, t2) of the plane orthogonal to m at every vertex.
/// t1 is the normalized projection of the coordinate axis least aligned with
/// m(z) (lowest index on ties), t2 = m(z) x t1.
struct TangentFrame {
    NodalVectorField t1;
    NodalVectorField t2;

    std::size_t size() const noexcept { return t1.size(); }

    /// v(z) = a[2z] t1(z) + a[2z+1] t2(z).
    NodalVectorField lift(const Eigen::VectorXd& coefficients) const
    {
        NodalVectorField v(size());
        for (std::size_t z = 0; z < size(); ++z) {
            v.set(z, coefficients[2 * z] * t1[z] + coefficients[2 * z + 1] * t2[z]);
        }
        return v;
    }

    Eigen::VectorXd restrict(const NodalVectorField& v) const
    {
        Eigen::VectorXd a(2 * static_cast<Eigen::Index>(size()));
        for (std::size_t z = 0; z < size(); ++z) {
            const Vec3 vz = v[z];
            a[2 * z] = vz.dot(t1[z]);
            a[2 * z + 1] = vz.dot(t2[z]);
        }
        return a;
    }
};

inline constexpr double kUnitLengthTolerance = 1e-8;

inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& m)
{
    int axis = 0;
    for (int j = 1; j < 3; ++j) {
        if (std::abs(m[j]) < std::abs(m[axis])) {
            axis = j;
        }
    }
    Vec3 t1 = -m[axis] * m;
    t1[axis] += 1.0;
    t1.normalize();
    return {t1, m.cross(t1)};
}

inline TangentFrame tangent_frame(const NodalVectorField& m)
{
    TangentFrame frame{NodalVectorField(m.size()), NodalVectorField(m.size())};
    for (std::size_t z = 0; z < m.size(); ++z) {
        const Vec3 mz = m[z];
        const double len = mz.norm();
        if (!(std::abs(len - 1.0) <= kUnitLengthTolerance)) {
            throw FieldError("tangent frame: vertex " + std::to_string(z) + " has |m| = "
                             + std::to_string(len));
        }
        const auto [t1, t2] = tangent_basis(mz / len);
        frame.t1.set(z, t1);
        frame.t2.set(z, t2);
    }
    return frame;
}

/// Maximum over elements of max_j |d m / d x_j|, the Euclidean length of each
/// coordinate-direction derivative of the elementwise-constant gradient.
/// Over unit-length fields on the uniform square mesh of level l its largest
/// value is 2^(l+1), attained by two antipodal neighbours.
inline double seminorm_w1inf(const Mesh& mesh, const NodalVectorField& m)
{
    if (m.size() != mesh.num_vertices()) {
        throw FieldError("field size does not match mesh");
    }
    double result = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto grads = hat_gradients(mesh, t);
        const auto& tri = mesh.triangle(t);
        for (int j = 0; j < 2; ++j) {
            const Vec3 d = m[tri[0]] * grads[0][j] + m[tri[1]] * grads[1][j] + m[tri[2]] * grads[2][j];
            result = std::max(result, d.norm());
        }
    }
    return result;
}

// Vertexwise operations.

inline NodalVectorField cross(const NodalVectorField& a, const NodalVectorField& b)
{
    require_same_size(a, b);
    NodalVectorField out(a.size());
    for (std::size_t z = 0; z < a.size(); ++z) {
        out.set(z, a[z].cross(b[z]));
    }
    return out;
}

inline Eigen::VectorXd nodal_dot(const NodalVectorField& a, const NodalVectorField& b)
{
    require_same_size(a, b);
    return a.matrix().cwiseProduct(b.matrix()).rowwise().sum();
}

/// Spatial average |Omega|^-1 * integral of the P1 field (exact; coincides with
/// the lumped quadrature for P1 functions).
inline Vec3 average(const LumpedMass& mass, const NodalVectorField& m)
{
    if (m.size() != mass.size()) {
        throw FieldError("field size does not match the lumped mass");
    }
    return (m.matrix().transpose() * mass.weights()) / mass.total();
}

inline NodalVectorField normalize_nodes(const NodalVectorField& m)
{
    NodalVectorField out = m;
    out.matrix().rowwise().normalize();
    return out;
}

/// max_z | |m(z)| - 1 |
inline double unit_length_defect(const NodalVectorField& m)
{
    return (m.matrix().rowwise().norm().array() - 1.0).abs().maxCoeff();
}

/// max_z |m(z) . w(z)|
inline double orthogonality_defect(const NodalVectorField& m, const NodalVectorField& w)
{
    return nodal_dot(m, w).cwiseAbs().maxCoeff();
}

/// Largest eigenvalue of M^-1 S by power iteration on D^-1/2 S D^-1/2.
inline double max_eigenvalue_mass_stiffness(const LumpedMass& mass, const SparseOperator& stiffness,
                                            int max_iterations = 2000, double tolerance = 1e-10)
{
    const Eigen::VectorXd dinv = mass.weights().cwiseSqrt().cwiseInverse();
    const auto n = static_cast<Eigen::Index>(mass.size());
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i)));
    }
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd y = dinv.cwiseProduct(stiffness.matrix() * dinv.cwiseProduct(x));
        const double next = x.dot(y);
        const double norm = y.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        x = y / norm;
        if (std::abs(next - lambda) <= tolerance * std::abs(next)) {
            return next;
        }
        lambda = next;
    }
    return lambda;
}

/// Measured inverse-estimate constant: ||P_h h_eff[u]||_h <= C_inv^2 h_min^-2 ||u||_h.
inline double estimate_inverse_constant(const FemContext& ctx)
{
    return ctx.mesh.h_min() * std::sqrt(max_eigenvalue_mass_stiffness(ctx.mass, ctx.stiffness));
}

} // namespace illg
