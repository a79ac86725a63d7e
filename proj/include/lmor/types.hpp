#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace lmor {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

using Param = Eigen::VectorXd;
using Coefficient = std::function<double(const Param&)>;

/// Vector living on a subset of the free dofs.
struct LocalVector {
    std::vector<int> idx;
    Vec val;
};

/// Gather v[idx].
Vec gather(const Vec& v, const std::vector<int>& idx);
/// v[idx] += alpha * x
void scatter_add(Vec& v, const std::vector<int>& idx, const Vec& x, double alpha = 1.0);
/// A(rows, cols) as a new sparse matrix.
SpMat submatrix(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols);

}  // namespace lmor
