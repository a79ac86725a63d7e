#include "lmor/decomp.hpp"
#include "lmor/rng.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace lmor;

TEST(CoarseGrid, EntityCounts)
{
    StructuredMesh m = build_mesh(12, 8, {0, 1, 0, 1});
    CoarseGrid g = make_coarse_grid(m, 3, 2);
    EXPECT_EQ(g.cells.size(), 6u);
    EXPECT_EQ(g.faces.size(), 2u * 2 + 3u * 1);
    EXPECT_EQ(g.vertices.size(), 2u);
    EXPECT_EQ(g.num_entities(), 6 + 7 + 2);
    EXPECT_EQ(g.rx, 4);
    EXPECT_EQ(g.ry, 4);
    for (int e = 0; e < g.num_entities(); ++e) EXPECT_EQ(g.by_domains.at(g.entities[e].domains), e);
    EXPECT_THROW(make_coarse_grid(m, 5, 2), std::invalid_argument);
}

TEST(Wirebasket, ClassificationCoversFreeDofs)
{
    StructuredMesh m = build_mesh(12, 12, {0, 1, 0, 1});
    Problem p = thermal_block(m);
    CoarseGrid g = make_coarse_grid(m, 3, 3);
    DofClassification c = classify_dofs(p.def, g);
    size_t total = 0;
    for (const auto& b : c.basic) total += b.size();
    EXPECT_EQ(total, static_cast<size_t>(p.def.num_free()));
    for (int v : g.vertices) EXPECT_EQ(c.basic[v].size(), 1u);
    for (int f : g.faces) EXPECT_EQ(c.basic[f].size(), 3u);
}

TEST(Wirebasket, PartsSumToInput)
{
    StructuredMesh m = build_mesh(12, 12, {0, 1, 0, 1});
    Problem p = thermal_block(m);
    CoarseGrid g = make_coarse_grid(m, 3, 3);
    WirebasketDecomposition wb(p, g, Param::Constant(4, 0.5));
    auto rng = make_rng(2);
    Vec phi = normal_vector(rng, p.def.num_free());
    auto parts = wb.decompose(phi);
    ASSERT_EQ(static_cast<int>(parts.size()), g.num_entities());
    Vec sum = Vec::Zero(phi.size());
    for (const auto& part : parts) scatter_add(sum, part.idx, part.val);
    EXPECT_LT((sum - phi).norm(), 1e-12 * phi.norm());
    // a part of a single space decomposes into itself
    int f = g.faces.front();
    Vec single = wb.to_full(parts[f]);
    auto again = wb.decompose(single);
    for (int e = 0; e < g.num_entities(); ++e) {
        double n = again[e].val.norm();
        if (e == f) {
            EXPECT_LT((wb.to_full(again[e]) - single).norm(), 1e-12 * single.norm());
        } else {
            EXPECT_LT(n, 1e-12 * single.norm());
        }
    }
}

TEST(Wirebasket, ExtensionIsHarmonic)
{
    StructuredMesh m = build_mesh(8, 8, {0, 1, 0, 1});
    Problem p = thermal_block(m);
    Param mu = Param::Constant(4, 1.0);
    CoarseGrid g = make_coarse_grid(m, 2, 2);
    WirebasketDecomposition wb(p, g, mu);
    SpMat A = p.form.assemble_A(mu);
    int v = g.vertices.front();
    LocalVector ext = wb.extend(v, Vec::Ones(1));
    Vec full = wb.to_full(ext);
    Vec r = A * full;
    // the residual vanishes away from the wirebasket dofs
    std::set<int> wire;
    for (int e = 0; e < g.num_entities(); ++e)
        if (g.entities[e].codim != kCell)
            for (int k : wb.basic(e)) wire.insert(k);
    for (int k : ext.idx)
        if (!wire.count(k)) {
            EXPECT_NEAR(r[k], 0.0, 1e-12);
        }
}

TEST(PartitionOfUnity, SumsToOne)
{
    StructuredMesh m = build_mesh(16, 16, {0, 1, 0, 1});
    Problem p = thermal_block(m);
    for (int N : {2, 4}) {
        CoarseGrid g = make_coarse_grid(m, N, N);
        PoUDecomposition pou = build_pou(p.def, g);
        EXPECT_EQ(pou.size(), (N - 1) * (N - 1));
        Vec sum = Vec::Zero(p.def.num_free());
        for (int i = 0; i < pou.size(); ++i) scatter_add(sum, pou.dofs[i], pou.rho[i]);
        EXPECT_LT((sum - Vec::Ones(sum.size())).cwiseAbs().maxCoeff(), 1e-14);
        for (int i = 0; i < pou.size(); ++i) {
            EXPECT_GE(pou.rho[i].minCoeff(), 0.0);
            EXPECT_LE(pou.rho[i].maxCoeff(), 1.0);
        }
    }
    EXPECT_THROW(build_pou(p.def, make_coarse_grid(m, 1, 2)), std::invalid_argument);
}
