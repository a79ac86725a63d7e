#include "lmor/fem.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace lmor;

TEST(Mesh, Counts)
{
    StructuredMesh m = build_mesh(4, 3, {0, 2, 0, 1});
    EXPECT_EQ(m.num_vertices(), 20);
    EXPECT_EQ(m.num_dofs(), 20 + 12);
    EXPECT_EQ(m.triangles.size(), 48u);
    double area = 0;
    for (size_t t = 0; t < m.triangles.size(); ++t) area += m.triangle_area(static_cast<int>(t));
    EXPECT_NEAR(area, 2.0, 1e-14);
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        auto c = m.cell_of(static_cast<int>(t));
        int k = m.centroid(c[0], c[1]);
        const auto& tri = m.triangles[t];
        EXPECT_TRUE(tri[0] == k || tri[1] == k || tri[2] == k);
    }
}

TEST(Assembly, StiffnessAnnihilatesConstants)
{
    StructuredMesh m = build_mesh(6, 5, {0, 1, 0, 1});
    SpMat K = assemble_stiffness(m);
    Vec one = Vec::Ones(m.num_dofs());
    EXPECT_LT((K * one).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((Mat(K) - Mat(K).transpose()).norm(), 1e-12);
}

TEST(Assembly, StiffnessEnergyOfLinearFunction)
{
    StructuredMesh m = build_mesh(5, 7, {0, 1, 0, 2});
    SpMat K = assemble_stiffness(m);
    Vec u(m.num_dofs());
    for (int i = 0; i < m.num_dofs(); ++i) u[i] = 3 * m.coords(i, 0) - 2 * m.coords(i, 1);
    // |grad u|^2 * area = 13 * 2
    EXPECT_NEAR(u.dot(K * u), 26.0, 1e-10);
}

TEST(Assembly, MassIntegratesOne)
{
    StructuredMesh m = build_mesh(3, 3, {0, 1, 0, 3});
    SpMat M = assemble_mass(m);
    Vec one = Vec::Ones(m.num_dofs());
    EXPECT_NEAR(one.dot(M * one), 3.0, 1e-13);
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(M), Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0);
    Vec load = assemble_load(m, Vec::Ones(m.triangles.size()));
    EXPECT_NEAR(load.sum(), 3.0, 1e-13);
}

TEST(Region, Fractions)
{
    StructuredMesh m = build_mesh(4, 4, {0, 1, 0, 1});
    Vec half = region_fraction(m, Region().add({0, .5, 0, 1}));
    double a = 0;
    for (size_t t = 0; t < m.triangles.size(); ++t) a += half[t] * m.triangle_area(static_cast<int>(t));
    EXPECT_NEAR(a, 0.5, 1e-14);

    // a rectangle not aligned with the mesh
    Rect r{.13, .61, .07, .33};
    Vec f = region_fraction(m, Region().add(r));
    a = 0;
    for (size_t t = 0; t < m.triangles.size(); ++t) a += f[t] * m.triangle_area(static_cast<int>(t));
    EXPECT_NEAR(a, r.area(), 1e-14);

    Vec none = region_fraction(m, Region().add(r).remove(r));
    EXPECT_EQ(none.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Solve, ThermalBlockMatchesDenseLU)
{
    StructuredMesh m = build_mesh(8, 8, {0, 1, 0, 1});
    Problem p = thermal_block(m);
    Param mu(4);
    mu << 0.1, 0.7, 0.3, 1.0;
    ASSERT_TRUE(p.form.admissible(mu));
    Vec u = solve_free(p.form, mu);
    Mat A = Mat(p.form.assemble_A(mu));
    Vec ref = A.partialPivLu().solve(p.form.assemble_f(mu));
    EXPECT_LT((u - ref).norm(), 1e-12 * ref.norm());
    EXPECT_GT(u.minCoeff(), 0);  // maximum principle for f = 1
}

TEST(Solve, ChannelsLiftingAndSymmetry)
{
    StructuredMesh m = build_mesh(20, 20, {0, 1, 0, 1});
    Problem p = thermal_channels(m, 1);
    Param mu = Param::Constant(1, 1.0);
    Vec u = solve_full(p, mu);
    for (int j = 0; j <= m.ny; ++j) {
        EXPECT_NEAR(u[m.vertex(0, j)], 1.0, 1e-14);
        EXPECT_NEAR(u[m.vertex(m.nx, j)], -1.0, 1e-14);
    }
    // point symmetric geometry and data: u(x, y) = -u(1 - x, 1 - y)
    for (int j = 0; j <= m.ny; ++j)
        for (int i = 0; i <= m.nx; ++i) EXPECT_NEAR(u[m.vertex(i, j)], -u[m.vertex(m.nx - i, m.ny - j)], 1e-10);
    EXPECT_LE(u.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(u.minCoeff(), -1.0 - 1e-12);
}

TEST(Solve, RectLaplaceIsLinearInX)
{
    RectProblem rp = rect_laplace(1, 1, 8, 0);
    auto& p = rp.problem;
    EXPECT_EQ(rp.gamma_in.size(), 9u);
    // x-linear Dirichlet data is reproduced exactly by P1
    Vec g = Vec::Zero(p.def.mesh.num_dofs());
    for (int d : rp.gamma_out) g[d] = p.def.mesh.coords(d, 0);
    Vec rhs = -gather(Vec(rp.A_full * g), p.def.free_dofs);
    Vec u = Mat(p.form.assemble_A(Param(0))).ldlt().solve(rhs);
    Vec full = g;
    for (int k = 0; k < p.def.num_free(); ++k) full[p.def.free_dofs[k]] += u[k];
    for (int i = 0; i < p.def.mesh.num_dofs(); ++i) EXPECT_NEAR(full[i], p.def.mesh.coords(i, 0), 1e-12);
}

TEST(Solve, ThermalBlockRejectsOddMesh)
{
    EXPECT_THROW(thermal_block(build_mesh(5, 6, {0, 1, 0, 1})), std::invalid_argument);
    EXPECT_THROW(channels_region(6), std::invalid_argument);
}
