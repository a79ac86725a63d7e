#include "lmor/enrich.hpp"
#include "lmor/errorest.hpp"

#include <gtest/gtest.h>

using namespace lmor;

namespace {

struct Instance {
    Problem p;
    PoUDecomposition pou;
    Param mu;
};

Instance block(int n, int N)
{
    Instance s{thermal_block(build_mesh(n, n, {0, 1, 0, 1})), {}, Param(4)};
    s.mu << 0.1, 1.0, 0.4, 0.7;
    s.pou = build_pou(s.p.def, make_coarse_grid(s.p.def.mesh, N, N));
    return s;
}

}  // namespace

TEST(Enrichment, SinglePatchIsExactAfterOneStep)
{
    Instance s = block(8, 2);
    for (bool coupled : {false, true}) {
        EnrichmentSolver solver(s.p, s.pou, s.mu);
        EXPECT_NEAR(solver.rel_error(), 1.0, 1e-14);
        EnrichRecord r = coupled ? solver.coupled_step() : solver.residual_step();
        EXPECT_LT(r.rel_energy_error, 1e-10);
        EXPECT_EQ(solver.dim(), 1);
    }
}

TEST(Enrichment, ResidualStepsSatisfyDecrementIdentity)
{
    Instance s = block(12, 3);
    EnrichmentSolver solver(s.p, s.pou, s.mu);
    double prev = solver.error();
    for (int k = 0; k < 15; ++k) {
        EnrichRecord r = solver.residual_step();
        double err_n_sq = prev * prev;
        EXPECT_LE(solver.error(), prev * (1 + 1e-12));
        // Galerkin: ||u_n - u||^2 = ||u_{n+1} - u||^2 + ||u_{n+1} - u_n||^2
        EXPECT_NEAR(r.chungend_lhs + r.decrement, err_n_sq, 1e-8 * err_n_sq);
        EXPECT_LE(r.chungend_lhs, r.chungend_rhs + 1e-8 * err_n_sq);
        prev = solver.error();
    }
    EXPECT_LT(solver.rel_error(), 1e-2);
}

TEST(Enrichment, ContractionBelowPartitionRate)
{
    Instance s = block(12, 3);
    double c = c_rbe(s.pou.size(), cpu_bruteforce(s.pou, s.p.form.assemble_A(s.mu)));
    EnrichmentSolver solver(s.p, s.pou, s.mu);
    for (int k = 0; k < 10; ++k) {
        EnrichRecord r = solver.residual_step();
        EXPECT_LE(r.contraction_quotient, c + 1e-10) << k;
    }
}

TEST(Enrichment, CoupledStepIsNoWorseFromSameState)
{
    Instance s = block(12, 3);
    EnrichmentSolver coupled(s.p, s.pou, s.mu);
    for (int k = 0; k < 8; ++k) {
        EnrichmentSolver residual = coupled;
        residual.residual_step();
        coupled.coupled_step();
        EXPECT_LE(coupled.error(), residual.error() * (1 + 1e-9) + 1e-12 * coupled.error());
    }
}

TEST(Enrichment, ResetRestoresInitialState)
{
    Instance s = block(12, 3);
    EnrichmentSolver solver(s.p, s.pou, s.mu);
    solver.residual_step();
    solver.reset();
    EXPECT_EQ(solver.dim(), 0);
    EXPECT_NEAR(solver.rel_error(), 1.0, 1e-14);
}
