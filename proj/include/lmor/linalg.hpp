#pragma once

#include "lmor/types.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <concepts>
#include <memory>
#include <stdexcept>
#include <cstdint>
#include <string>

namespace lmor {

/// SPD inner product on coefficient vectors, with a cached Cholesky factorization.
class InnerProduct {
public:
    InnerProduct() = default;
    InnerProduct(SpMat M, std::string label);
    static InnerProduct euclidean(Index n);

    Index size() const { return n_; }
    bool is_euclidean() const { return euclidean_; }
    const SpMat& matrix() const { return M_; }
    const std::string& label() const { return label_; }

    Vec apply(const Vec& v) const { return euclidean_ ? v : Vec(M_ * v); }
    Mat apply(const Mat& V) const { return euclidean_ ? V : Mat(M_ * V); }
    double dot(const Vec& a, const Vec& b) const { return euclidean_ ? a.dot(b) : a.dot(M_ * b); }
    double norm(const Vec& v) const { return std::sqrt(std::max(0.0, dot(v, v))); }
    Mat gram(const Mat& A, const Mat& B) const { return A.transpose() * apply(B); }
    /// M^{-1} f
    Vec solve(const Vec& f) const;
    Mat solve(const Mat& F) const;

private:
    SpMat M_;
    std::string label_ = "euclidean";
    Index n_ = 0;
    bool euclidean_ = true;
    std::shared_ptr<Eigen::SimplicialLLT<SpMat>> llt_;
};

/// Riesz representative of the functional f (given by dual coefficients).
Vec riesz(const InnerProduct& ip, const Vec& f);
/// sqrt(f^T M^{-1} f)
double dual_norm(const InnerProduct& ip, const Vec& f);

struct LambdaBounds {
    double min = 0, max = 0;
    int iterations = 0;
};
/// Power and inverse power iteration with 1e-3 relative slack.
LambdaBounds lambda_bounds(const InnerProduct& ip, int max_iter = 5000, std::uint64_t seed = 7);

enum class GSVariant { schmidt, gram, reiterated, adaptive };

struct GSOptions {
    GSVariant variant = GSVariant::adaptive;
    int reiterations = 2;
    double threshold = 0.1;
    double drop_tol = 1e-14;
};

template <class Scalar>
struct GSResult {
    MatrixX<Scalar> basis;       ///< kept vectors as columns
    std::vector<int> kept;       ///< input index of each basis column
    std::vector<int> dropped;    ///< inputs whose remainder fell below drop_tol
    std::vector<int> iterations; ///< projection passes per kept vector
    bool orthonormal = false;
};

/// Gram-Schmidt on the columns of V; dot(a, b) evaluates the inner product.
template <class Scalar, class Dot>
    requires std::invocable<Dot&, const VectorX<Scalar>&, const VectorX<Scalar>&>
GSResult<Scalar> gram_schmidt(const MatrixX<Scalar>& V, Dot&& dot, const GSOptions& opt = {})
{
    using std::abs;
    using std::sqrt;
    if (V.cols() == 0) throw std::invalid_argument("gram_schmidt: no input vectors");
    GSResult<Scalar> out;
    out.basis.resize(V.rows(), V.cols());
    auto nrm = [&](const VectorX<Scalar>& v) { return sqrt(abs(dot(v, v))); };
    Index k = 0;
    for (Index i = 0; i < V.cols(); ++i) {
        VectorX<Scalar> v = V.col(i);
        auto orig = nrm(v);
        if (!(orig > 0)) {
            out.dropped.push_back(static_cast<int>(i));
            continue;
        }
        int passes = 0;
        bool keep = true;
        switch (opt.variant) {
        case GSVariant::schmidt: {
            VectorX<Scalar> c(k);
            for (Index j = 0; j < k; ++j) c[j] = dot(out.basis.col(j), v);
            for (Index j = 0; j < k; ++j) v -= c[j] * out.basis.col(j);
            passes = 1;
            auto n = nrm(v);
            keep = n > opt.drop_tol * orig;
            if (keep) v /= n;
            break;
        }
        case GSVariant::gram:
        case GSVariant::reiterated: {
            int reps = opt.variant == GSVariant::gram ? 1 : opt.reiterations;
            for (int r = 0; r < reps; ++r) {
                for (Index j = 0; j < k; ++j) v -= dot(out.basis.col(j), v) * out.basis.col(j);
                ++passes;
            }
            auto n = nrm(v);
            keep = n > opt.drop_tol * orig;
            if (keep) v /= n;
            break;
        }
        case GSVariant::adaptive: {
            v /= orig;
            double cumulative = 1;
            while (true) {
                for (Index j = 0; j < k; ++j) v -= dot(out.basis.col(j), v) * out.basis.col(j);
                ++passes;
                auto n = nrm(v);
                cumulative *= static_cast<double>(n);
                if (!(cumulative > opt.drop_tol)) {
                    keep = false;
                    break;
                }
                v /= n;
                if (n > opt.threshold) break;
            }
            break;
        }
        }
        if (!keep) {
            out.dropped.push_back(static_cast<int>(i));
            continue;
        }
        out.basis.col(k++) = v;
        out.kept.push_back(static_cast<int>(i));
        out.iterations.push_back(passes);
    }
    out.basis.conservativeResize(Eigen::NoChange, k);
    out.orthonormal = opt.variant == GSVariant::adaptive || opt.variant == GSVariant::reiterated;
    return out;
}

template <class Scalar>
GSResult<Scalar> gram_schmidt(const MatrixX<Scalar>& V, const GSOptions& opt = {})
{
    return gram_schmidt(V, [](const auto& a, const auto& b) { return a.dot(b); }, opt);
}

GSResult<double> gram_schmidt(const Mat& V, const InnerProduct& ip, const GSOptions& opt = {});

/// e1_i = max_{j<i} |(psi_i, psi_j)| for every column i.
template <class Scalar, class Dot>
VectorX<double> orthonormality_errors(const MatrixX<Scalar>& Psi, Dot&& dot)
{
    VectorX<double> e = VectorX<double>::Zero(Psi.cols());
    for (Index i = 0; i < Psi.cols(); ++i)
        for (Index j = 0; j < i; ++j) e[i] = std::max<double>(e[i], std::abs(dot(Psi.col(i), Psi.col(j))));
    return e;
}

template <class Scalar>
double orthonormality_error(const MatrixX<Scalar>& Psi)
{
    if (Psi.cols() == 0) return 0;
    return orthonormality_errors(Psi, [](const auto& a, const auto& b) { return a.dot(b); }).maxCoeff();
}

/// e2_i = ||phi_i - psi_i|| for every column i.
template <class Scalar>
VectorX<double> reproduction_errors(const MatrixX<Scalar>& Psi, const MatrixX<Scalar>& Phi)
{
    if (Psi.rows() != Phi.rows() || Psi.cols() > Phi.cols())
        throw std::invalid_argument("reproduction_errors: size mismatch");
    VectorX<double> e(Psi.cols());
    for (Index i = 0; i < Psi.cols(); ++i) e[i] = static_cast<double>((Phi.col(i) - Psi.col(i)).norm());
    return e;
}

double orthonormality_error(const Mat& Psi, const InnerProduct& ip);

/// Sum_i (psi_i, v) psi_i for an orthonormal basis.
Vec project(const Mat& basis, const Vec& v, const InnerProduct& ip);

/// Growing orthonormal basis with adaptive re-orthogonalization and cached M * basis.
class OrthoBasis {
public:
    OrthoBasis() = default;
    explicit OrthoBasis(InnerProduct ip);

    Index dim() const { return B_.cols(); }
    Index size() const { return B_.rows(); }
    const Mat& basis() const { return B_; }
    const Mat& applied() const { return MB_; }
    const InnerProduct& product() const { return ip_; }

    /// Coefficients (b_j, v).
    Vec coefficients(const Vec& v) const { return MB_.transpose() * v; }
    /// v minus its projection, one pass per column with re-iteration until the norm stops shrinking.
    Vec orthogonalize(Vec v, double threshold = 0.1) const;
    /// Append the normalized orthogonal remainder of v; returns false when it is numerically dependent.
    bool extend(const Vec& v, double drop_tol = 1e-14, double threshold = 0.1);
    void append_orthonormal(const Vec& b);

private:
    InnerProduct ip_;
    Mat B_, MB_;
};

}  // namespace lmor
