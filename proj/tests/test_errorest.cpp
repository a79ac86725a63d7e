#include "lmor/enrich.hpp"
#include "lmor/errorest.hpp"
#include "lmor/rng.hpp"

#include <gtest/gtest.h>

using namespace lmor;

TEST(Relative, ValuesAndValidity)
{
    EXPECT_DOUBLE_EQ(rel_classic(0.1, 1.0), 0.2);
    EXPECT_DOUBLE_EQ(rel_new(0.2, 1.0), 0.25);
    EXPECT_DOUBLE_EQ(rel_classic(0.5, 1.0), rel_new(0.5, 1.0));
    EXPECT_THROW(rel_classic(0.6, 1.0), OutOfValidity);
    EXPECT_NO_THROW(rel_new(0.6, 1.0));
    EXPECT_THROW(rel_new(1.0, 1.0), OutOfValidity);
    auto rng = make_rng(1);
    std::uniform_real_distribution<double> d(0, 0.5);
    for (int i = 0; i < 1000; ++i) {
        double delta = d(rng);
        EXPECT_LE(rel_new(delta, 1.0), rel_classic(delta, 1.0) + 1e-15);
    }
}

TEST(Relative, BoundsTrueRelativeError)
{
    // ||u - u~|| <= Delta implies ||u - u~|| / ||u|| <= Delta / (||u~|| - Delta)
    auto rng = make_rng(2);
    for (int i = 0; i < 500; ++i) {
        Vec u = normal_vector(rng, 3), e = normal_vector(rng, 3);
        e *= 0.3 * u.norm() / e.norm() * std::uniform_real_distribution<double>(0, 1)(rng);
        Vec ut = u + e;
        double delta = e.norm() * 1.2;
        if (delta >= ut.norm()) continue;
        EXPECT_LE(e.norm() / u.norm(), rel_new(delta, ut.norm()) * (1 + 1e-14));
    }
}

TEST(GlobalEstimator, BoundsError)
{
    Problem p = thermal_block(build_mesh(12, 12, {0, 1, 0, 1}));
    InnerProduct V(p.def.h1, "H1");
    auto rng = make_rng(3);
    for (int t = 0; t < 10; ++t) {
        Param mu = uniform_vector(rng, 4, 0.1, 1.0);
        Vec u = solve_free(p.form, mu);
        Vec ut = u + 1e-2 * normal_vector(rng, u.size());
        double delta = global_delta(p.form, V, mu, ut, p.def.alpha_lb(mu));
        EXPECT_LE(V.norm(u - ut), delta);
        EXPECT_LE(delta, p.def.gamma_ub(mu) / p.def.alpha_lb(mu) * V.norm(u - ut) * (1 + 1e-10));
    }
}

TEST(LocalEstimator, DualNormsMatchDense)
{
    Problem p = thermal_block(build_mesh(12, 12, {0, 1, 0, 1}));
    PoUDecomposition pou = build_pou(p.def, make_coarse_grid(p.def.mesh, 3, 3));
    auto prods = patch_products(pou, p.def.h1);
    auto rng = make_rng(4);
    Vec R = normal_vector(rng, p.def.num_free());
    auto loc = local_dual_norms(R, pou, prods);
    ASSERT_EQ(static_cast<int>(loc.size()), pou.size());
    Mat H(p.def.h1);
    for (int i = 0; i < pou.size(); ++i) {
        const auto& d = pou.dofs[i];
        Mat Hi(d.size(), d.size());
        for (size_t a = 0; a < d.size(); ++a)
            for (size_t b = 0; b < d.size(); ++b) Hi(a, b) = H(d[a], d[b]);
        Vec Ri = gather(R, d);
        EXPECT_NEAR(loc[i], std::sqrt(Ri.dot(Hi.llt().solve(Ri))), 1e-10 * loc[i]);
    }
    double sum = 0;
    for (double l : loc) sum += l * l;
    EXPECT_NEAR(delta_loc_g(loc, 2.0, 0.5), 4.0 * std::sqrt(sum), 1e-12 * sum);
}

TEST(Constants, SinglePatchPartitionConstantIsOne)
{
    Problem p = thermal_block(build_mesh(8, 8, {0, 1, 0, 1}));
    PoUDecomposition pou = build_pou(p.def, make_coarse_grid(p.def.mesh, 2, 2));
    ASSERT_EQ(pou.size(), 1);
    EXPECT_NEAR(cpu_bruteforce(pou, p.def.h1), 1.0, 1e-10);
}

TEST(Constants, PartitionConstantBounds)
{
    Problem p = thermal_block(build_mesh(12, 12, {0, 1, 0, 1}));
    PoUDecomposition pou = build_pou(p.def, make_coarse_grid(p.def.mesh, 3, 3));
    double c = cpu_bruteforce(pou, p.def.h1);
    double cI = interpolation_constant(p.def, pou);
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, cpu_upper_bound_h1(cI, 1.0, pou.Hx, pou.c_ovl));
    // deflating more directions can only lower the constant
    auto rng = make_rng(5);
    Mat red(p.def.num_free(), 1);
    red.col(0) = normal_vector(rng, p.def.num_free());
    EXPECT_LE(cpu_bruteforce(pou, p.def.h1, red), c + 1e-10);
}

TEST(Constants, ReferenceContraction)
{
    EXPECT_NEAR(one_minus_c_rbe(81, 3.6013e7) / 1.714e-10, 1.0, 1e-3);
    EXPECT_NEAR(c_rbe(4, 1.5), std::sqrt(1 - 1 / (4 * 2.25)), 1e-15);
    EXPECT_NEAR(1 - c_rbe(4, 1.5), one_minus_c_rbe(4, 2.25), 1e-15);
    EXPECT_NEAR(cpu_upper_bound_h1(0, 0, 1, 1), 2.0, 1e-15);
    EXPECT_NEAR(cpu_energy_bound_sq(1, 1, 1, 1, 1), 4.0, 1e-15);
}
