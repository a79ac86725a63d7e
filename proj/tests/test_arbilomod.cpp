#include "lmor/arbilomod.hpp"

#include <gtest/gtest.h>

using namespace lmor;

namespace {

StructuredMesh mesh()
{
    return build_mesh(40, 40, {0, 1, 0, 1});
}

ArbiLoModConfig config()
{
    ArbiLoModConfig cfg;
    cfg.NX = cfg.NY = 4;
    cfg.training.xi = log_uniform_xi(1, 1e5, 3);
    cfg.training.M = 20;
    cfg.max_iterations = 30;
    return cfg;
}

}  // namespace

TEST(ArbiLoMod, ConvergesOnSmallChannels)
{
    StructuredMesh m = mesh();
    ArbiLoMod a(thermal_channels(m, 1), config());
    int trained = a.build();
    EXPECT_EQ(trained, static_cast<int>(a.decomposition().grid().faces.size()));
    EXPECT_TRUE(a.run());
    EXPECT_TRUE(a.converged());
    EXPECT_LE(a.history().back().max_residual, 1e-2);
    EXPECT_LT(a.max_rel_error(), 1e-2);
    EXPECT_EQ(a.build(), 0);
}

TEST(ArbiLoMod, NoIterationsMeansNoConvergence)
{
    StructuredMesh m = mesh();
    auto cfg = config();
    cfg.max_iterations = 0;
    cfg.training.M = 2;
    cfg.training.eps_train = 1;
    cfg.training.eps_greedy = 1e3;
    ArbiLoMod a(thermal_channels(m, 1), cfg);
    a.build();
    EXPECT_FALSE(a.run());
    EXPECT_EQ(a.iterations(), 0);
    EXPECT_EQ(a.history().size(), 1u);
}

TEST(ArbiLoMod, GeometryChangeMatchesRehash)
{
    StructuredMesh m = mesh();
    ArbiLoMod a(thermal_channels(m, 1), config());
    a.build();
    const auto& grid = a.decomposition().grid();

    auto same = affected_cells(m, grid, channels_region(1), channels_region(1));
    EXPECT_TRUE(same.empty());
    EXPECT_TRUE(a.invalid_by_rehash(thermal_channels(m, 1)).empty());

    Problem p2 = thermal_channels(m, 2);
    auto expected = a.invalid_by_rehash(p2);
    auto change = a.change_geometry(p2, affected_cells(m, grid, channels_region(1), channels_region(2)));
    EXPECT_FALSE(change.affected_cells.empty());
    EXPECT_EQ(change.invalid, expected);
    EXPECT_EQ(change.invalid_faces + change.invalid_cells + change.invalid_vertices, static_cast<int>(expected.size()));
    EXPECT_LT(change.invalid_faces, static_cast<int>(grid.faces.size()));
    EXPECT_EQ(a.build(), change.invalid_faces);
    EXPECT_TRUE(a.run());
    EXPECT_LT(a.max_rel_error(), 1e-2);
}

TEST(ArbiLoMod, Deterministic)
{
    StructuredMesh m = mesh();
    auto cfg = config();
    ArbiLoMod a(thermal_channels(m, 1), cfg);
    cfg.jobs = 2;
    ArbiLoMod b(thermal_channels(m, 1), cfg);
    a.build();
    b.build();
    a.run();
    b.run();
    ASSERT_EQ(a.history().size(), b.history().size());
    for (size_t i = 0; i < a.history().size(); ++i) {
        EXPECT_EQ(a.history()[i].max_residual, b.history()[i].max_residual);
        EXPECT_EQ(a.history()[i].total_dim, b.history()[i].total_dim);
    }
}
