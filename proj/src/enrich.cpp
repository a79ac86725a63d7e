#include "lmor/enrich.hpp"

#include <Eigen/Eigenvalues>

namespace lmor {

EnrichmentSolver::EnrichmentSolver(const Problem& p, const PoUDecomposition& pou, const Param& mu) : pou_(pou)
{
    if (!p.form.spd) throw std::invalid_argument("EnrichmentSolver: the form must be symmetric positive definite");
    A_ = p.form.assemble_A(mu);
    f_ = p.form.assemble_f(mu);
    u_ = solve_free(p.form, mu);
    unorm_ = std::sqrt(u_.dot(A_ * u_));
    if (!(unorm_ > 0)) throw std::invalid_argument("EnrichmentSolver: zero solution");
    for (int i = 0; i < pou_.size(); ++i) {
        auto s = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(submatrix(A_, pou_.dofs[i], pou_.dofs[i]));
        if (s->info() != Eigen::Success) throw SolverFailure("enrichment: local factorization failed");
        local_.push_back(s);
    }
    reset();
}

void EnrichmentSolver::reset()
{
    basis_ = OrthoBasis(InnerProduct(A_, "energy"));
    gram_.resize(0, 0);
    ured_ = Vec::Zero(A_.rows());
    err_ = unorm_;
    iter_ = 0;
}

double EnrichmentSolver::energy_error(const Vec& v) const
{
    Vec e = u_ - v;
    return std::sqrt(std::max(0.0, e.dot(A_ * e)));
}

void EnrichmentSolver::resolve()
{
    const Mat& B = basis_.basis();
    Vec rhs = B.transpose() * f_;
    Vec c = gram_.ldlt().solve(rhs);
    ured_ = B * c;
    err_ = energy_error(ured_);
}

std::vector<double> EnrichmentSolver::local_residual_norms() const
{
    Vec R = f_ - A_ * ured_;
    std::vector<double> n(pou_.size());
    for (int i = 0; i < pou_.size(); ++i) {
        Vec r = gather(R, pou_.dofs[i]);
        n[i] = std::sqrt(std::max(0.0, r.dot(local_[i]->solve(r))));
    }
    return n;
}

EnrichRecord EnrichmentSolver::finish(int k, double local_sq, const Vec& before, double err_before)
{
    const Index m = basis_.dim();
    gram_.conservativeResize(m, m);
    Vec col = basis_.basis().transpose() * basis_.applied().col(m - 1);
    gram_.col(m - 1) = col;
    gram_.row(m - 1) = col.transpose();
    resolve();
    EnrichRecord r;
    r.iter = ++iter_;
    r.selected = k;
    r.rel_energy_error = err_ / unorm_;
    r.contraction_quotient = err_before > 0 ? err_ / err_before : 0;
    r.chungend_lhs = err_ * err_;
    r.chungend_rhs = err_before * err_before - local_sq;
    Vec d = ured_ - before;
    r.decrement = d.dot(A_ * d);
    r.selected_norm_sq = local_sq;
    r.dim = static_cast<int>(m);
    return r;
}

EnrichRecord EnrichmentSolver::residual_step()
{
    Vec R = f_ - A_ * ured_;
    int k = -1;
    double best = 0;
    Vec best_z;
    for (int i = 0; i < pou_.size(); ++i) {
        Vec r = gather(R, pou_.dofs[i]);
        Vec z = local_[i]->solve(r);
        double n2 = r.dot(z);
        if (n2 > best) {
            best = n2;
            k = i;
            best_z = z;
        }
    }
    if (k < 0 || !(best > 0)) throw ExhaustedEnrichment("residual enrichment: all local residuals vanish");
    Vec uhat = Vec::Zero(A_.rows());
    scatter_add(uhat, pou_.dofs[k], best_z);
    Vec before = ured_;
    double err_before = err_;
    if (!basis_.extend(uhat)) throw ExhaustedEnrichment("residual enrichment: enrichment function is numerically dependent");
    return finish(k, best, before, err_before);
}

EnrichRecord EnrichmentSolver::coupled_step()
{
    Vec R = f_ - A_ * ured_;
    const Mat& B = basis_.basis();
    const Mat& AB = basis_.applied();
    const Index m = B.cols();
    int k = -1;
    double best = 0;
    Vec best_delta;
    for (int i = 0; i < pou_.size(); ++i) {
        const auto& d = pou_.dofs[i];
        Vec r = gather(R, d);
        Vec y = local_[i]->solve(r);
        Vec delta = Vec::Zero(A_.rows());
        if (m == 0) {
            scatter_add(delta, d, y);
        } else {
            Mat W(d.size(), m);
            for (size_t a = 0; a < d.size(); ++a) W.row(a) = AB.row(d[a]);
            Mat Y = local_[i]->solve(W);
            Mat S = gram_ - W.transpose() * Y;
            S = 0.5 * (S + S.transpose()).eval();
            Vec rhs = B.transpose() * R - W.transpose() * y;
            Eigen::SelfAdjointEigenSolver<Mat> es(S);
            const Vec& ev = es.eigenvalues();
            const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
            Vec proj = es.eigenvectors().transpose() * rhs;
            for (Index j = 0; j < ev.size(); ++j) proj[j] = ev[j] > cut ? proj[j] / ev[j] : 0.0;
            Vec c = es.eigenvectors() * proj;
            delta = B * c;
            scatter_add(delta, d, Vec(y - Y * c));
        }
        double n2 = delta.dot(A_ * delta);
        if (n2 > best) {
            best = n2;
            k = i;
            best_delta = delta;
        }
    }
    if (k < 0 || !(best > 1e-28 * unorm_ * unorm_)) throw ExhaustedEnrichment("coupled enrichment: all solution shifts vanish");
    Vec before = ured_;
    double err_before = err_;
    if (!basis_.extend(best_delta)) throw ExhaustedEnrichment("coupled enrichment: shift is numerically dependent");
    return finish(k, best, before, err_before);
}

double c_rbe(int N, double c_pu)
{
    if (N < 1 || !(c_pu > 0)) throw std::domain_error("c_rbe: requires N >= 1 and c_pu > 0");
    double x = 1.0 / (N * c_pu * c_pu);
    if (x > 1) throw std::domain_error("c_rbe: c_pu below 1 / sqrt(N)");
    return std::sqrt(1 - x);
}

double one_minus_c_rbe(int N, double c_pu_sq)
{
    if (N < 1 || !(c_pu_sq > 0)) throw std::domain_error("one_minus_c_rbe: requires N >= 1 and c_pu > 0");
    double x = 1.0 / (N * c_pu_sq);
    if (x > 1) throw std::domain_error("one_minus_c_rbe: c_pu below 1 / sqrt(N)");
    return x / (1 + std::sqrt(1 - x));
}

}  // namespace lmor
