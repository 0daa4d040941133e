#include "illg/fem.hpp"
#include "illg/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace illg;

namespace {

Mesh reference_triangle()
{
    return Mesh({Point2(0, 0), Point2(1, 0), Point2(0, 1)}, {Triangle{0, 1, 2}});
}

} // namespace

TEST(UniformSquare, CountsAndMeshSize)
{
    const Mesh m1 = generate_uniform_square(1);
    EXPECT_EQ(m1.num_triangles(), 8u);
    EXPECT_EQ(m1.num_vertices(), 9u);

    const Mesh m5 = generate_uniform_square(5);
    EXPECT_EQ(m5.num_triangles(), 2048u);
    EXPECT_NEAR(m5.h(), std::sqrt(2.0) / 32.0, 1e-15);
    EXPECT_NEAR(m5.h(), 0.04419, 5e-6);

    EXPECT_EQ(generate_uniform_square(7).num_triangles(), 32768u);
}

TEST(UniformSquare, VertexCountAndArea)
{
    for (int level = 1; level <= 6; ++level) {
        for (auto pattern : {DiagonalPattern::fixed, DiagonalPattern::alternating}) {
            const Mesh m = generate_uniform_square(level, pattern);
            const std::size_t np = (1u << level) + 1;
            EXPECT_EQ(m.num_vertices(), np * np);
            EXPECT_NEAR(m.total_area(), 1.0, 1e-12);
            EXPECT_LE(m.h_min(), m.h());
            for (std::size_t t = 0; t < m.num_triangles(); ++t) {
                EXPECT_GT(m.area(t), 0.0);
                EXPECT_LE(m.diameter(t), m.h() + 1e-15);
                EXPECT_GE(m.diameter(t), m.h_min() - 1e-15);
            }
        }
    }
}

TEST(UniformSquare, RowMajorNumberingAndDiagonal)
{
    const Mesh m = generate_uniform_square(2);
    EXPECT_EQ(m.vertex(0), Point2(-0.5, -0.5));
    EXPECT_EQ(m.vertex(1), Point2(-0.25, -0.5));
    EXPECT_EQ(m.vertex(5), Point2(-0.5, -0.25));
    EXPECT_EQ(m.vertex(24), Point2(0.5, 0.5));
    // the first cell is cut from (0) to (6)
    std::set<int> first(m.triangle(0).begin(), m.triangle(0).end());
    std::set<int> second(m.triangle(1).begin(), m.triangle(1).end());
    EXPECT_TRUE(first.count(0) && first.count(6));
    EXPECT_TRUE(second.count(0) && second.count(6));
}

TEST(UniformSquare, AlternatingPatternFlipsOddCells)
{
    const Mesh m = generate_uniform_square(2, DiagonalPattern::alternating);
    // cell (1, 0) has corners 1, 2, 6, 7 and is cut from 2 to 6
    std::set<int> a(m.triangle(2).begin(), m.triangle(2).end());
    std::set<int> b(m.triangle(3).begin(), m.triangle(3).end());
    EXPECT_TRUE(a.count(2) && a.count(6));
    EXPECT_TRUE(b.count(2) && b.count(6));
    EXPECT_FALSE(a.count(1) && a.count(7));
}

TEST(UniformSquare, RejectsBadLevel)
{
    EXPECT_THROW(generate_uniform_square(0), MeshError);
}

TEST(MeshMetrics, ReferenceTriangle)
{
    std::istringstream in("3 1\n0 0\n1 0\n0 1\n0 1 2\n");
    const Mesh m = read_mesh(in);
    EXPECT_NEAR(m.h(), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(m.h_min(), std::sqrt(2.0), 1e-15);
    for (double d : m.patch_diameters()) {
        EXPECT_NEAR(d, std::sqrt(2.0), 1e-15);
    }
}

TEST(MeshMetrics, PatchDiameterOfInteriorVertex)
{
    const Mesh m = generate_uniform_square(2);
    // vertex 12 = (0,0): its patch spans (-1/4,-1/4) .. (1/4,1/4)
    EXPECT_NEAR(m.patch_diameters()[12], std::sqrt(2.0) * 0.5, 1e-15);
    // corner (-1/2,-1/2) touches two triangles of one cell
    EXPECT_NEAR(m.patch_diameters()[0], std::sqrt(2.0) * 0.25, 1e-15);
}

TEST(MeshValidation, ClockwiseTrianglesAreReoriented)
{
    const Mesh m({Point2(0, 0), Point2(1, 0), Point2(0, 1)}, {Triangle{0, 2, 1}});
    EXPECT_GT(m.area(0), 0.0);
}

TEST(MeshValidation, Rejections)
{
    EXPECT_THROW(Mesh({Point2(0, 0), Point2(1, 0), Point2(2, 0)}, {Triangle{0, 1, 2}}), MeshError);
    EXPECT_THROW(Mesh({Point2(0, 0), Point2(1, 0), Point2(0, 1)}, {Triangle{0, 1, 3}}), MeshError);
    EXPECT_THROW(Mesh({Point2(0, 0), Point2(1, 0), Point2(0, 1)}, {Triangle{0, 1, 1}}), MeshError);
    // unused vertex
    EXPECT_THROW(Mesh({Point2(0, 0), Point2(1, 0), Point2(0, 1), Point2(5, 5)}, {Triangle{0, 1, 2}}), MeshError);
}

TEST(MeshValidation, DuplicateEdgeIsNonConforming)
{
    // two triangles stacked on the same side of edge 0-1
    std::istringstream in("4 2\n0 0\n1 0\n0 1\n0.2 0.5\n0 1 2\n0 1 3\n");
    EXPECT_THROW(read_mesh(in), MeshError);
}

TEST(MeshValidation, HangingNodeIsNonConforming)
{
    // big triangle next to two small ones that split its edge at (1, 0.5)
    std::istringstream in("5 3\n0 0\n1 0\n1 1\n1 0.5\n2 0.5\n0 1 2\n1 4 3\n3 4 2\n");
    EXPECT_THROW(read_mesh(in), MeshError);
}

TEST(MeshIo, ParseErrorsCarryLineNumbers)
{
    {
        std::istringstream in("# comment\n3 1\n0 0\n1 x\n0 1\n0 1 2\n");
        try {
            read_mesh(in);
            FAIL() << "expected a parse error";
        } catch (const MeshParseError& e) {
            EXPECT_EQ(e.line(), 4u);
        }
    }
    {
        std::istringstream in("3 1\n0 0\n1 0\n0 1\n0 1 2 7\n");
        try {
            read_mesh(in);
            FAIL() << "expected a parse error";
        } catch (const MeshParseError& e) {
            EXPECT_EQ(e.line(), 5u);
        }
    }
    {
        std::istringstream in("3 2\n0 0\n1 0\n0 1\n0 1 2\n");
        EXPECT_THROW(read_mesh(in), MeshParseError);
    }
    EXPECT_THROW(load_mesh("/nonexistent/mesh.txt"), MeshError);
}

TEST(MeshIo, RoundTripIsExact)
{
    const Mesh m = generate_ellipse(1.3, 0.7, 5);
    std::stringstream buf;
    write_mesh(buf, m);
    const Mesh back = read_mesh(buf);
    ASSERT_EQ(back.num_vertices(), m.num_vertices());
    ASSERT_EQ(back.num_triangles(), m.num_triangles());
    for (std::size_t z = 0; z < m.num_vertices(); ++z) {
        EXPECT_EQ(back.vertex(z), m.vertex(z));
    }
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        EXPECT_EQ(back.triangle(t), m.triangle(t));
    }
}

TEST(Ellipse, RingMeshIsConformingAndCoversTheEllipse)
{
    const int rings = 8;
    const Mesh m = generate_ellipse(2.0, 1.0, rings);
    EXPECT_EQ(m.num_triangles(), static_cast<std::size_t>(6 * rings * rings));
    EXPECT_EQ(m.num_vertices(), static_cast<std::size_t>(1 + 3 * rings * (rings + 1)));
    // inscribed polygon area approaches pi a b
    EXPECT_NEAR(m.total_area(), std::numbers::pi * 2.0, 0.05);
}

TEST(AngleCondition, UniformSquareHasNoViolations)
{
    for (int level = 1; level <= 5; ++level) {
        for (auto pattern : {DiagonalPattern::fixed, DiagonalPattern::alternating}) {
            const FemContext ctx(generate_uniform_square(level, pattern));
            EXPECT_TRUE(check_angle_condition(ctx.mesh, ctx.stiffness).satisfied());
        }
    }
}

TEST(AngleCondition, ReferenceTriangleOffDiagonals)
{
    const FemContext ctx(reference_triangle());
    const auto r = check_angle_condition(ctx.mesh, ctx.stiffness);
    EXPECT_EQ(r.violations, 0u);
    // entries between the right-angle vertex and the others are -1/2, the remaining one is 0
    EXPECT_NEAR(ctx.stiffness.coeff(0, 1), -0.5, 1e-15);
    EXPECT_NEAR(ctx.stiffness.coeff(0, 2), -0.5, 1e-15);
    EXPECT_NEAR(r.worst_off_diagonal, 0.0, 1e-15);
}

TEST(AngleCondition, ObtuseTriangleIsReported)
{
    // obtuse triangle (0,0),(4,0),(2,0.3) padded with a triangle below the long edge
    const Mesh m({Point2(0, 0), Point2(4, 0), Point2(2, 0.3), Point2(2, -2)},
                 {Triangle{0, 1, 2}, Triangle{0, 3, 1}});
    const FemContext ctx(m);
    const auto r = check_angle_condition(ctx.mesh, ctx.stiffness);
    EXPECT_GE(r.violations, 1u);
    EXPECT_GT(r.worst_off_diagonal, 0.0);
}

TEST(AngleCondition, DimensionMismatchThrows)
{
    const FemContext small(reference_triangle());
    const Mesh big = generate_uniform_square(1);
    EXPECT_THROW(check_angle_condition(big, small.stiffness), FieldError);
}
