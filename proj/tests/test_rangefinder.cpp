#include "lmor/rangefinder.hpp"
#include "lmor/rng.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

using namespace lmor;

namespace {

TransferOperator matrix_operator(const Mat& T)
{
    auto Tp = std::make_shared<Mat>(T);
    return make_transfer_operator([Tp](const Vec& x) -> Vec { return *Tp * x; }, Vec(),
                                  InnerProduct::euclidean(T.cols()), InnerProduct::euclidean(T.rows()));
}

Mat chol_lower(const SpMat& M)
{
    return Mat(Mat(M).llt().matrixL());
}

}  // namespace

TEST(Constants, EstimatorScaling)
{
    double c = c_est(10, 1e-2, 1.0);
    EXPECT_NEAR(c_est(10, 1e-2, 4.0), c / 2, 1e-15 * c);
    EXPECT_LT(c_est(20, 1e-2, 1.0), c);
    EXPECT_THROW(c_est(0, 1e-2, 1.0), std::domain_error);
    EXPECT_THROW(c_est(10, 1.5, 1.0), std::domain_error);
    EXPECT_GE(c_eff(10, 1e-2, 30, 1.0, 1.0), 1.0);
}

TEST(NormEstimate, UpperBoundWithHighProbability)
{
    auto rng = make_rng(4);
    Mat T = Mat::Random(12, 8);
    double norm = Eigen::JacobiSVD<Mat>(T).singularValues()[0];
    auto op = [&](const Vec& x) -> Vec { return T * x; };
    int fails = 0;
    for (int i = 0; i < 1000; ++i)
        if (norm_estimate(op, 8, InnerProduct::euclidean(12), 10, 1e-2, 1.0, rng) < norm) ++fails;
    // expected failures at most 10; the binomial tail beyond 25 is negligible
    EXPECT_LE(fails, 25);
}

TEST(RangeFinder, ZeroOperatorNeedsNoBasis)
{
    auto op = matrix_operator(Mat::Zero(6, 5));
    auto rng = make_rng(1);
    RangeBasis b = adaptive_range_approximation(op, 1e-6, 5, 1e-10, rng);
    EXPECT_TRUE(b.converged);
    EXPECT_EQ(b.basis.cols(), 0);
    EXPECT_EQ(b.evaluations, 5);
    EXPECT_EQ(b.estimate, 0.0);
}

TEST(RangeFinder, LowRankOperatorIsCaptured)
{
    auto rng0 = make_rng(2);
    Mat U(30, 3), V(20, 3);
    for (int j = 0; j < 3; ++j) {
        U.col(j) = normal_vector(rng0, 30);
        V.col(j) = normal_vector(rng0, 20);
    }
    Mat T = U * V.transpose();
    auto op = matrix_operator(T);
    auto rng = make_rng(3);
    RangeBasis b = adaptive_range_approximation(op, 1e-8 * T.norm(), 10, 1e-15, rng);
    EXPECT_TRUE(b.converged);
    EXPECT_EQ(b.basis.cols(), 3);
    EXPECT_EQ(b.evaluations, 3 + 10);
    EXPECT_LT(projection_deviation(op, T, b.basis), 1e-8 * T.norm());
    EXPECT_LT(orthonormality_error<double>(b.basis), 1e-13);
}

TEST(RangeFinder, DeviationBelowToleranceOnInterfaceOperator)
{
    RectProblem rp = rect_laplace(1, 1, 20, 0);
    TransferOperator op = interface_transfer_operator(rp);
    Mat T = materialize(op);
    for (int run = 0; run < 5; ++run) {
        auto rng = make_rng(17, run);
        RangeBasis b = adaptive_range_approximation(op, 1e-4, 10, 1e-15, rng);
        ASSERT_TRUE(b.converged);
        EXPECT_LE(projection_deviation(op, T, b.basis), 1e-4);
        EXPECT_EQ(b.evaluations, b.basis.cols() + 10);
        EXPECT_EQ(b.estimates.size(), b.dims.size());
    }
}

TEST(RangeFinder, OperatorSvalsMatchWeightedDenseSvd)
{
    RectProblem rp = rect_laplace(1, 1, 10, 0);
    TransferOperator op = interface_transfer_operator(rp);
    Mat T = materialize(op);
    ASSERT_EQ(T.rows(), op.n_range());
    ASSERT_EQ(T.cols(), op.n_source());
    Mat LS = chol_lower(op.source.matrix()), LR = chol_lower(op.range.matrix());
    // ||T x||_R / ||x||_S with x = LS^{-T} y
    Mat W = LR.transpose() * T * LS.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(T.cols(), T.cols()));
    Vec ref = Eigen::JacobiSVD<Mat>(W).singularValues();
    Vec s = operator_svals(op, T);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(s[i], ref[i], 1e-10 * ref[0]);
}

TEST(RangeFinder, LeadingSvalsApproachAnalyticValues)
{
    RectProblem rp = rect_laplace(1, 1, 40, 0);
    TransferOperator op = interface_transfer_operator(rp);
    Vec s = operator_svals(op, materialize(op));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i] / analytic_svals(1, 1, i + 1), 1.0, 0.02) << i;
    for (int i = 1; i < 8; ++i) EXPECT_LE(s[i], s[i - 1]);
}

TEST(RangeFinder, HelmholtzSetup)
{
    EXPECT_NO_THROW(interface_transfer_operator(rect_laplace(1, 1, 10, 5.0)));
    EXPECT_THROW(rect_laplace(1, 1, 10, -1.0), std::invalid_argument);
}
