#include "lmor/fem.hpp"
#include "lmor/linalg.hpp"
#include "lmor/rng.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace lmor;

namespace {

InnerProduct h1_product(int n)
{
    StructuredMesh m = build_mesh(n, n, {0, 1, 0, 1});
    return InnerProduct(SpMat(assemble_stiffness(m) + assemble_mass(m)), "H1");
}

Mat hilbert(int rows, int cols)
{
    Mat H(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) H(i, j) = 1.0 / (i + j + 1);
    return H;
}

}  // namespace

TEST(InnerProduct, SolveAndDualNormMatchDense)
{
    InnerProduct ip = h1_product(5);
    auto rng = make_rng(3);
    Vec f = normal_vector(rng, ip.size());
    Mat M(ip.matrix());
    Vec x = M.llt().solve(f);
    EXPECT_LT((ip.solve(f) - x).norm(), 1e-12 * x.norm());
    EXPECT_NEAR(dual_norm(ip, f), std::sqrt(f.dot(x)), 1e-12 * std::sqrt(f.dot(x)));
    EXPECT_LT((riesz(ip, f) - x).norm(), 1e-12 * x.norm());
    Vec v = normal_vector(rng, ip.size());
    EXPECT_NEAR(ip.dot(v, v), v.dot(M * v), 1e-12 * v.dot(M * v));
}

TEST(InnerProduct, Euclidean)
{
    InnerProduct e = InnerProduct::euclidean(4);
    EXPECT_TRUE(e.is_euclidean());
    Vec v(4);
    v << 1, 2, 3, 4;
    EXPECT_DOUBLE_EQ(e.norm(v), std::sqrt(30.0));
    EXPECT_EQ(e.solve(v), v);
}

TEST(InnerProduct, LambdaBoundsEncloseSpectrum)
{
    InnerProduct ip = h1_product(4);
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(ip.matrix()), Eigen::EigenvaluesOnly);
    LambdaBounds b = lambda_bounds(ip);
    EXPECT_LE(b.min, es.eigenvalues().minCoeff());
    EXPECT_GE(b.max, es.eigenvalues().maxCoeff());
    EXPECT_GT(b.min, 0.99 * es.eigenvalues().minCoeff());
    EXPECT_LT(b.max, 1.01 * es.eigenvalues().maxCoeff());
}

TEST(GramSchmidt, AdaptiveOnHilbertColumns)
{
    Mat H = hilbert(40, 12);
    auto r = gram_schmidt<double>(H);
    ASSERT_EQ(r.basis.cols(), 12);
    EXPECT_LT(orthonormality_error<double>(r.basis), 1e-13);
    for (Index i = 0; i < r.basis.cols(); ++i) EXPECT_NEAR(r.basis.col(i).norm(), 1.0, 1e-13);
    // same span: H = Q R
    Mat R = r.basis.transpose() * H;
    EXPECT_LT((r.basis * R - H).norm(), 1e-12 * H.norm());
}

TEST(GramSchmidt, ClassicalLosesOrthogonality)
{
    Mat H = hilbert(40, 12);
    GSOptions o;
    o.variant = GSVariant::gram;
    auto gram = gram_schmidt<double>(H, o);
    o.variant = GSVariant::reiterated;
    auto re = gram_schmidt<double>(H, o);
    EXPECT_GT(orthonormality_error<double>(gram.basis), 1e-6);
    EXPECT_LT(orthonormality_error<double>(re.basis), 1e-12);
    EXPECT_FALSE(gram.orthonormal);
    EXPECT_TRUE(re.orthonormal);
}

TEST(GramSchmidt, DropsDependentColumns)
{
    Mat V(5, 4);
    auto rng = make_rng(9);
    V.col(0) = normal_vector(rng, 5);
    V.col(1) = 2 * V.col(0);
    V.col(2) = Vec::Zero(5);
    V.col(3) = normal_vector(rng, 5);
    auto r = gram_schmidt<double>(V);
    EXPECT_EQ(r.kept, (std::vector<int>{0, 3}));
    EXPECT_EQ(r.dropped, (std::vector<int>{1, 2}));
    EXPECT_THROW(gram_schmidt<double>(Mat(5, 0)), std::invalid_argument);
}

TEST(GramSchmidt, NonEuclideanProduct)
{
    InnerProduct ip = h1_product(4);
    auto rng = make_rng(5);
    Mat V(ip.size(), 6);
    for (int j = 0; j < 6; ++j) V.col(j) = normal_vector(rng, ip.size());
    auto r = gram_schmidt(V, ip);
    Mat G = ip.gram(r.basis, r.basis);
    EXPECT_LT((G - Mat::Identity(6, 6)).norm(), 1e-12);
    EXPECT_LT(orthonormality_error(r.basis, ip), 1e-12);
}

TEST(OrthoBasis, ExtendProjectAndReject)
{
    InnerProduct ip = h1_product(4);
    OrthoBasis B(ip);
    auto rng = make_rng(11);
    Vec a = normal_vector(rng, ip.size()), b = normal_vector(rng, ip.size());
    EXPECT_TRUE(B.extend(a));
    EXPECT_TRUE(B.extend(b));
    EXPECT_FALSE(B.extend(3 * a - b));
    EXPECT_EQ(B.dim(), 2);
    EXPECT_LT((B.applied() - Mat(ip.matrix()) * B.basis()).norm(), 1e-12);
    Vec c = normal_vector(rng, ip.size());
    Vec r = B.orthogonalize(c);
    EXPECT_LT(B.coefficients(r).norm(), 1e-12 * ip.norm(c));
    Vec p = project(B.basis(), c, ip);
    EXPECT_LT((p + r - c).norm(), 1e-12 * c.norm());
}
