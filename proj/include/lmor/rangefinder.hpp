#pragma once

#include "lmor/decomp.hpp"
#include "lmor/linalg.hpp"

#include <random>

namespace lmor {

/// Affine map T(x) = linear(x) + affine between coefficient spaces with inner products.
struct TransferOperator {
    std::function<Vec(const Vec&)> linear;
    Vec affine;
    InnerProduct source, range;
    LambdaBounds source_lambda, range_lambda;
    Index rank_bound = 0;

    Index n_source() const { return source.size(); }
    Index n_range() const { return range.size(); }
    Vec apply(const Vec& x) const { return linear(x) + affine; }
};

/// Fills the products' eigenvalue bounds and the default rank bound.
TransferOperator make_transfer_operator(std::function<Vec(const Vec&)> linear, Vec affine, InnerProduct source,
                                        InnerProduct range);

Vec draw_random_source(const TransferOperator& op, std::mt19937_64& rng);

double c_est(int n_t, double eps_testfail, double lambda_min);
double c_eff(int n_t, double eps_testfail, Index N_O, double lambda_min, double lambda_max);

/// c_est * max_i ||O r_i||_R over n_t normal test vectors.
double norm_estimate(const std::function<Vec(const Vec&)>& op, Index n_source, const InnerProduct& range, int n_t,
                     double eps_testfail, double lambda_min, std::mt19937_64& rng);

struct RangeBasis {
    Mat basis;                       ///< orthonormal in the range product
    int evaluations = 0;             ///< applications of the linear part
    int iterations = 0;
    double estimate = 0;             ///< final norm estimate
    std::vector<double> estimates;   ///< estimate before each extension and at exit
    std::vector<int> dims;           ///< basis size belonging to each estimate
    bool converged = false;
};

/// Adaptive randomized range approximation with test vectors kept orthogonal to the basis.
RangeBasis adaptive_range_approximation(const TransferOperator& op, double tol, int n_t, double eps_algofail,
                                        std::mt19937_64& rng, int max_iter = -1);

/// Matrix of the linear part, column by column.
Mat materialize(const TransferOperator& op);
/// Singular values of the linear part measured in the source and range products.
Vec operator_svals(const TransferOperator& op, const Mat& T);
/// ||(1 - P_basis) T^l|| in the operator norm of the two products.
double projection_deviation(const TransferOperator& op, const Mat& T, const Mat& basis);

double a_priori_mean_bound(const Vec& svals, int n, double cond_S, double cond_R);
double analytic_svals(double L, double W, int i);

/// Dirichlet data on gamma_out to the solution trace on gamma_in; L2 products on both interfaces.
TransferOperator interface_transfer_operator(const RectProblem& rp);

/// Coupling data to the face component of the local training solution.
TransferOperator arbilomod_transfer_operator(const Problem& problem, const WirebasketDecomposition& wb, int face_e,
                                             const Param& mu, bool h1_source = false);

}  // namespace lmor
