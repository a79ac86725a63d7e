#pragma once

#include "lmor/decomp.hpp"
#include "lmor/linalg.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace lmor {

struct EnrichRecord {
    int iter = 0;
    double rel_energy_error = 0;
    int selected = -1;
    double contraction_quotient = 0;
    double chungend_lhs = 0;   ///< ||u_{n+1} - u||_a^2
    double chungend_rhs = 0;   ///< ||u_n - u||_a^2 - ||R||_{V_k'}^2 (residual) or - ||u_{e,k} - u_n||_a^2 (coupled)
    double decrement = 0;      ///< ||u_{n+1} - u_n||_a^2
    double selected_norm_sq = 0;
    int dim = 0;
};

struct ExhaustedEnrichment : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-parametric symmetric coercive problem with reduced spaces grown from the partition of unity spaces.
/// All norms are energy norms.
class EnrichmentSolver {
public:
    EnrichmentSolver(const Problem& p, const PoUDecomposition& pou, const Param& mu = Param(0));

    void reset();
    EnrichRecord residual_step();
    EnrichRecord coupled_step();

    int dim() const { return static_cast<int>(basis_.dim()); }
    int num_spaces() const { return pou_.size(); }
    double rel_error() const { return err_ / unorm_; }
    double error() const { return err_; }
    const Vec& exact() const { return u_; }
    const Vec& reduced() const { return ured_; }
    const SpMat& energy() const { return A_; }
    std::vector<double> local_residual_norms() const;

private:
    void resolve();
    double energy_error(const Vec& v) const;
    EnrichRecord finish(int k, double local_sq, const Vec& before, double err_before);

    PoUDecomposition pou_;
    SpMat A_;
    Vec f_, u_;
    double unorm_ = 0;
    std::vector<std::shared_ptr<Eigen::SimplicialLDLT<SpMat>>> local_;
    OrthoBasis basis_;
    Mat gram_;
    Vec ured_;
    double err_ = 0;
    int iter_ = 0;
};

/// sqrt(1 - 1 / (N c_pu^2))
double c_rbe(int N, double c_pu);
/// 1 - c_rbe without cancellation, from c_pu^2.
double one_minus_c_rbe(int N, double c_pu_sq);

}  // namespace lmor
