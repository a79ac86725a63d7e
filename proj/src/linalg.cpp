#include "lmor/linalg.hpp"
#include "lmor/rng.hpp"

#include <Eigen/Eigenvalues>

namespace lmor {

InnerProduct::InnerProduct(SpMat M, std::string label)
    : M_(std::move(M)), label_(std::move(label)), n_(M_.rows()), euclidean_(false)
{
    if (M_.rows() != M_.cols()) throw std::invalid_argument("InnerProduct: matrix not square");
    llt_ = std::make_shared<Eigen::SimplicialLLT<SpMat>>(M_);
    if (llt_->info() != Eigen::Success) throw std::runtime_error("InnerProduct: matrix not positive definite");
}

InnerProduct InnerProduct::euclidean(Index n)
{
    InnerProduct ip;
    ip.n_ = n;
    return ip;
}

Vec InnerProduct::solve(const Vec& f) const
{
    if (euclidean_) return f;
    Vec v = llt_->solve(f);
    // one refinement step keeps the relative residual near machine precision
    v += llt_->solve(f - M_ * v);
    return v;
}

Mat InnerProduct::solve(const Mat& F) const
{
    if (euclidean_) return F;
    Mat V = llt_->solve(F);
    V += llt_->solve(F - M_ * V);
    return V;
}

Vec riesz(const InnerProduct& ip, const Vec& f)
{
    return ip.solve(f);
}

double dual_norm(const InnerProduct& ip, const Vec& f)
{
    if (ip.is_euclidean()) return f.norm();
    return std::sqrt(std::max(0.0, f.dot(ip.solve(f))));
}

LambdaBounds lambda_bounds(const InnerProduct& ip, int max_iter, std::uint64_t seed)
{
    LambdaBounds b;
    if (ip.is_euclidean()) {
        b.min = b.max = 1;
        return b;
    }
    if (ip.size() <= 2000) {
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(ip.matrix()), Eigen::EigenvaluesOnly);
        b.max = es.eigenvalues().maxCoeff() * (1 + 1e-3);
        b.min = es.eigenvalues().minCoeff() * (1 - 1e-3);
        return b;
    }
    auto rng = make_rng(seed);
    auto rayleigh = [&](auto&& op, double& lam) {
        Vec v = normal_vector(rng, ip.size());
        v.normalize();
        lam = 0;
        for (int it = 0; it < max_iter; ++it) {
            Vec w = op(v);
            double next = v.dot(w);
            v = w / w.norm();
            ++b.iterations;
            if (it > 5 && std::abs(next - lam) <= 1e-9 * std::abs(next)) {
                lam = next;
                return true;
            }
            lam = next;
        }
        return false;
    };
    const SpMat& M = ip.matrix();
    double gersh = 0;
    for (Index j = 0; j < M.outerSize(); ++j) {
        double s = 0;
        for (SpMat::InnerIterator it(M, j); it; ++it) s += std::abs(it.value());
        gersh = std::max(gersh, s);
    }
    double lmax, inv;
    if (rayleigh([&](const Vec& v) { return ip.apply(v); }, lmax)) b.max = std::min(gersh, lmax * (1 + 1e-3));
    else b.max = gersh;
    if (!rayleigh([&](const Vec& v) { return ip.solve(v); }, inv))
        throw std::runtime_error("lambda_bounds: inverse iteration did not converge");
    b.min = (1 / inv) * (1 - 1e-3);
    return b;
}

GSResult<double> gram_schmidt(const Mat& V, const InnerProduct& ip, const GSOptions& opt)
{
    return gram_schmidt(V, [&](const auto& a, const auto& b) { return ip.dot(Vec(a), Vec(b)); }, opt);
}

double orthonormality_error(const Mat& Psi, const InnerProduct& ip)
{
    if (Psi.cols() == 0) return 0;
    Mat G = ip.gram(Psi, Psi);
    return (G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

Vec project(const Mat& basis, const Vec& v, const InnerProduct& ip)
{
    return basis * (basis.transpose() * ip.apply(v));
}

OrthoBasis::OrthoBasis(InnerProduct ip) : ip_(std::move(ip))
{
    B_.resize(ip_.size(), 0);
    MB_.resize(ip_.size(), 0);
}

Vec OrthoBasis::orthogonalize(Vec v, double threshold) const
{
    double prev = ip_.norm(v);
    if (prev == 0 || dim() == 0) return v;
    for (int pass = 0; pass < 20; ++pass) {
        for (Index j = 0; j < dim(); ++j) v -= MB_.col(j).dot(v) * B_.col(j);
        double n = ip_.norm(v);
        if (!(n <= threshold * prev) || n == 0) break;
        prev = n;
    }
    return v;
}

bool OrthoBasis::extend(const Vec& v, double drop_tol, double threshold)
{
    double orig = ip_.norm(v);
    if (!(orig > 0)) return false;
    Vec w = orthogonalize(v / orig, threshold);
    double n = ip_.norm(w);
    if (!(n > drop_tol)) return false;
    append_orthonormal(w / n);
    return true;
}

void OrthoBasis::append_orthonormal(const Vec& b)
{
    if (B_.rows() == 0 && B_.cols() == 0) {
        B_.resize(b.size(), 0);
        MB_.resize(b.size(), 0);
    }
    B_.conservativeResize(Eigen::NoChange, B_.cols() + 1);
    B_.col(B_.cols() - 1) = b;
    MB_.conservativeResize(Eigen::NoChange, MB_.cols() + 1);
    MB_.col(MB_.cols() - 1) = ip_.apply(b);
}

}  // namespace lmor
