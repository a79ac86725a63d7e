#include "lmor/rangefinder.hpp"
#include "lmor/rng.hpp"
#include "lmor/special.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include <numbers>

namespace lmor {

TransferOperator make_transfer_operator(std::function<Vec(const Vec&)> linear, Vec affine, InnerProduct source,
                                        InnerProduct range)
{
    TransferOperator op;
    op.linear = std::move(linear);
    op.affine = std::move(affine);
    op.source = std::move(source);
    op.range = std::move(range);
    op.source_lambda = lambda_bounds(op.source);
    op.range_lambda = lambda_bounds(op.range);
    op.rank_bound = std::min(op.n_source(), op.n_range());
    if (op.affine.size() == 0) op.affine = Vec::Zero(op.n_range());
    return op;
}

Vec draw_random_source(const TransferOperator& op, std::mt19937_64& rng)
{
    return normal_vector(rng, op.n_source());
}

double c_est(int n_t, double eps_testfail, double lambda_min)
{
    if (n_t < 1 || !(eps_testfail > 0 && eps_testfail < 1) || !(lambda_min > 0))
        throw std::domain_error("c_est: invalid arguments");
    // erfinv(eps^(1/n_t)) via the complement, which stays accurate when the root is close to one
    double c = -std::expm1(std::log(eps_testfail) / n_t);
    return 1.0 / (std::sqrt(2 * lambda_min) * erfcinv(c));
}

double c_eff(int n_t, double eps_testfail, Index N_O, double lambda_min, double lambda_max)
{
    if (n_t < 1 || N_O < 1 || !(eps_testfail > 0 && eps_testfail < 1) || !(lambda_min > 0) || lambda_max < lambda_min)
        throw std::domain_error("c_eff: invalid arguments");
    double c = -std::expm1(std::log(eps_testfail) / n_t);
    double e = erfcinv(c);
    return std::sqrt(gamma_q_inv(0.5 * N_O, eps_testfail / n_t) * lambda_max / lambda_min / (e * e));
}

double norm_estimate(const std::function<Vec(const Vec&)>& op, Index n_source, const InnerProduct& range, int n_t,
                     double eps_testfail, double lambda_min, std::mt19937_64& rng)
{
    double m = 0;
    for (int i = 0; i < n_t; ++i) m = std::max(m, range.norm(op(normal_vector(rng, n_source))));
    return c_est(n_t, eps_testfail, lambda_min) * m;
}

RangeBasis adaptive_range_approximation(const TransferOperator& op, double tol, int n_t, double eps_algofail,
                                        std::mt19937_64& rng, int max_iter)
{
    if (!(tol > 0) || n_t < 1 || !(eps_algofail > 0 && eps_algofail < 1))
        throw std::invalid_argument("adaptive_range_approximation: invalid arguments");
    if (max_iter < 0) max_iter = static_cast<int>(op.rank_bound) + n_t + 10;
    RangeBasis out;
    OrthoBasis B(op.range);
    if (op.affine.size() && op.range.norm(op.affine) > 0) B.extend(op.affine);

    std::vector<Vec> tests;
    for (int i = 0; i < n_t; ++i) {
        tests.push_back(B.orthogonalize(op.linear(draw_random_source(op, rng))));
        ++out.evaluations;
    }
    const double eps_testfail = eps_algofail / static_cast<double>(op.rank_bound);
    const double cest = c_est(n_t, eps_testfail, op.source_lambda.min);
    auto estimate = [&] {
        double m = 0;
        for (const auto& t : tests) m = std::max(m, op.range.norm(t));
        return cest * m;
    };
    out.estimate = estimate();
    out.estimates.push_back(out.estimate);
    out.dims.push_back(static_cast<int>(B.dim()));
    while (out.estimate > tol) {
        if (out.iterations >= max_iter) {
            out.basis = B.basis();
            return out;
        }
        Vec v = op.linear(draw_random_source(op, rng));
        ++out.evaluations;
        ++out.iterations;
        B.extend(v);
        for (auto& t : tests) t = B.orthogonalize(t);
        out.estimate = estimate();
        out.estimates.push_back(out.estimate);
        out.dims.push_back(static_cast<int>(B.dim()));
    }
    out.converged = true;
    out.basis = B.basis();
    return out;
}

Mat materialize(const TransferOperator& op)
{
    Mat T(op.n_range(), op.n_source());
    for (Index j = 0; j < op.n_source(); ++j) T.col(j) = op.linear(Vec::Unit(op.n_source(), j));
    return T;
}

namespace {

Mat chol_factor(const InnerProduct& ip)
{
    if (ip.is_euclidean()) return Mat::Identity(ip.size(), ip.size());
    Eigen::LLT<Mat> llt{Mat(ip.matrix())};
    return llt.matrixL();
}

double top_sval(const Mat& X)
{
    if (X.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(X);
    return svd.singularValues()(0);
}

Mat weighted(const TransferOperator& op, const Mat& T)
{
    Mat LS = chol_factor(op.source), LR = chol_factor(op.range);
    // L_R^T T L_S^{-T}
    Mat X = LR.transpose() * T;
    return LS.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
}

}  // namespace

Vec operator_svals(const TransferOperator& op, const Mat& T)
{
    Eigen::JacobiSVD<Mat> svd(weighted(op, T));
    return svd.singularValues();
}

double projection_deviation(const TransferOperator& op, const Mat& T, const Mat& basis)
{
    Mat R = T - basis * (op.range.gram(basis, T));
    return top_sval(weighted(op, R));
}

double a_priori_mean_bound(const Vec& svals, int n, double cond_S, double cond_R)
{
    if (n < 4) throw std::invalid_argument("a_priori_mean_bound: n must be at least 4");
    auto s = [&](int i) { return i < svals.size() ? svals[i] : 0.0; };  // zero based
    double best = std::numeric_limits<double>::infinity();
    for (int k = 2; k <= n - 2; ++k) {
        int p = n - k;
        double tail = 0;
        for (Index j = k; j < svals.size(); ++j) tail += svals[j] * svals[j];
        double v = (1 + std::sqrt(double(k) / (p - 1))) * s(k) + std::numbers::e * std::sqrt(double(n)) / p * std::sqrt(tail);
        best = std::min(best, v);
    }
    return std::sqrt(cond_R * cond_S) * best;
}

double analytic_svals(double L, double W, int i)
{
    if (i < 1) throw std::invalid_argument("analytic_svals: index starts at 1");
    return 1.0 / (std::numbers::sqrt2 * std::cosh((i - 1) * std::numbers::pi * L / W));
}

namespace {

SpMat line_mass(int n_nodes, double h)
{
    std::vector<Triplet> t;
    for (int e = 0; e + 1 < n_nodes; ++e) {
        t.emplace_back(e, e, h / 3);
        t.emplace_back(e + 1, e + 1, h / 3);
        t.emplace_back(e, e + 1, h / 6);
        t.emplace_back(e + 1, e, h / 6);
    }
    SpMat M(n_nodes, n_nodes);
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

SpMat block_diag(const SpMat& a, const SpMat& b)
{
    std::vector<Triplet> t;
    for (Index k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < b.outerSize(); ++k)
        for (SpMat::InnerIterator it(b, k); it; ++it) t.emplace_back(it.row() + a.rows(), it.col() + a.cols(), it.value());
    SpMat M(a.rows() + b.rows(), a.cols() + b.cols());
    M.setFromTriplets(t.begin(), t.end());
    return M;
}

struct LocalSolver {
    Eigen::SimplicialLDLT<SpMat> ldlt;
};

}  // namespace

TransferOperator interface_transfer_operator(const RectProblem& rp)
{
    const auto& def = rp.problem.def;
    const int ny = def.mesh.ny;
    auto solver = std::make_shared<LocalSolver>();
    SpMat A = rp.problem.form.assemble_A(Param(0));
    solver->ldlt.compute(A);
    if (solver->ldlt.info() != Eigen::Success) throw SolverFailure("interface operator: factorization failed");
    const Vec& D = solver->ldlt.vectorD();
    if (D.cwiseAbs().minCoeff() < 1e-14 * D.cwiseAbs().maxCoeff())
        throw SolverFailure("interface operator: pivot ratio below 1e-14 (resonance)");
    auto AIB = std::make_shared<SpMat>(submatrix(rp.A_full, def.free_dofs, rp.gamma_out));
    std::vector<int> in_free;
    for (int d : rp.gamma_in) in_free.push_back(def.free_index[d]);
    auto linear = [solver, AIB, in_free](const Vec& g) -> Vec {
        Vec rhs = -(*AIB * g);
        Vec u = solver->ldlt.solve(rhs);
        return gather(u, in_free);
    };
    SpMat Mi = line_mass(ny + 1, def.mesh.hy);
    SpMat Mo = block_diag(Mi, Mi);
    return make_transfer_operator(linear, Vec(), InnerProduct(Mo, "L2(gamma_out)"), InnerProduct(Mi, "L2(gamma_in)"));
}

TransferOperator arbilomod_transfer_operator(const Problem& problem, const WirebasketDecomposition& wb, int face_e,
                                             const Param& mu, bool h1_source)
{
    auto T = wb.training_space(face_e);
    auto C = wb.coupling_space(face_e);
    SpMat A = problem.form.assemble_A(mu);
    auto solver = std::make_shared<LocalSolver>();
    solver->ldlt.compute(submatrix(A, T, T));
    if (solver->ldlt.info() != Eigen::Success) throw SolverFailure("training: factorization failed");
    auto ATC = std::make_shared<SpMat>(submatrix(A, T, C));

    // face component from values on the training space
    const auto& fb = wb.basic(face_e);
    auto pos = [&](int dof) {
        return static_cast<int>(std::lower_bound(T.begin(), T.end(), dof) - T.begin());
    };
    std::vector<int> fpos;
    for (int d : fb) fpos.push_back(pos(d));
    Mat Vcorr(fb.size(), 0);
    std::vector<int> vpos;
    for (int v : wb.boundary_entities(face_e)) {
        vpos.push_back(pos(wb.basic(v)[0]));
        const auto& ext = wb.ext_domain(v);
        Vec col(fb.size());
        for (size_t k = 0; k < fb.size(); ++k) {
            auto it = std::lower_bound(ext.begin(), ext.end(), fb[k]);
            col[k] = wb.extension(v)(it - ext.begin(), 0);
        }
        Vcorr.conservativeResize(Eigen::NoChange, Vcorr.cols() + 1);
        Vcorr.col(Vcorr.cols() - 1) = col;
    }
    auto component = [fpos, vpos, Vcorr](const Vec& u) -> Vec {
        Vec c(fpos.size());
        for (size_t k = 0; k < fpos.size(); ++k) c[k] = u[fpos[k]];
        for (size_t j = 0; j < vpos.size(); ++j) c -= u[vpos[j]] * Vcorr.col(j);
        return c;
    };
    auto linear = [solver, ATC, component](const Vec& g) -> Vec {
        Vec u = solver->ldlt.solve(Vec(-(*ATC * g)));
        return component(u);
    };
    Vec fT = gather(problem.form.assemble_f(mu), T);
    Vec affine = component(solver->ldlt.solve(fT));

    const Mat& E = wb.extension(face_e);
    SpMat He = submatrix(problem.def.h1, wb.ext_domain(face_e), wb.ext_domain(face_e));
    Mat G = E.transpose() * (He * E);
    InnerProduct range(G.sparseView(), "H1(face)");
    InnerProduct source = h1_source ? InnerProduct(submatrix(problem.def.h1, C, C), "H1(coupling)")
                                    : InnerProduct::euclidean(static_cast<Index>(C.size()));
    return make_transfer_operator(linear, affine, std::move(source), std::move(range));
}

}  // namespace lmor
