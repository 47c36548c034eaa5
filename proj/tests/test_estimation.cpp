#include <gtest/gtest.h>

#include "adcs/estimation.hpp"
#include "test_util.hpp"

using namespace adcs;
using adcs::test::random_matrix;
using adcs::test::random_spd;
using adcs::test::random_vector;

namespace {

EstimatorState scalar_state(double p, double P, double gamma) {
    return EstimatorState::from_prior(Vector::Constant(1, p), Matrix::Constant(1, 1, P), gamma);
}

}  // namespace

TEST(Rls, ZeroRegressorLeavesStateUnchanged) {
    std::mt19937_64 g(1);
    const auto s0 = EstimatorState::from_prior(random_vector(g, 3), random_spd(g, 3), 1.0);
    const auto s1 = rls_update(s0, Matrix::Zero(2, 3), random_vector(g, 2));
    EXPECT_LE((s1.p_hat - s0.p_hat).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((s1.P - s0.P).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rls, ScalarUnitForgetting) {
    const auto s1 = rls_update(scalar_state(0.0, 1.0, 1.0), Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0));
    EXPECT_NEAR(s1.p_hat(0), 0.5, 1e-15);
    EXPECT_NEAR(s1.P(0, 0), 0.5, 1e-15);
    // argmin p^2 + (1 - p)^2
    const Vector b = batch_wls({{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0)}}, Vector::Zero(1),
                               Matrix::Identity(1, 1), 1.0);
    EXPECT_NEAR(b(0), 0.5, 1e-15);
}

TEST(Rls, ScalarHalfForgetting) {
    const auto s1 = rls_update(scalar_state(0.0, 1.0, 0.5), Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0));
    EXPECT_NEAR(s1.p_hat(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(s1.P(0, 0), 2.0 / 3.0, 1e-15);
    // argmin 0.5 p^2 + (1 - p)^2
    const Vector b = batch_wls({{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0)}}, Vector::Zero(1),
                               Matrix::Identity(1, 1), 0.5);
    EXPECT_NEAR(b(0), 2.0 / 3.0, 1e-15);
}

TEST(Rls, EmptyHistoryReturnsPriorMean) {
    std::mt19937_64 g(2);
    const Vector m = random_vector(g, 3);
    EXPECT_LE((batch_wls({}, m, random_spd(g, 3), 0.9) - m).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Rls, SingularPriorRequiresRidge) {
    const Matrix P = Matrix::Zero(2, 2);
    EXPECT_THROW(batch_wls({}, Vector::Zero(2), P, 1.0), ContractViolation);
    EXPECT_NO_THROW(batch_wls({}, Vector::Zero(2), regularized_prior_cov(P), 1.0));
}

TEST(Rls, RecursiveMatchesBatchOnRandomInstances) {
    std::mt19937_64 g(3);
    std::uniform_int_distribution<int> dim(1, 4), len(1, 50);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const int np = dim(g), nx = dim(g), K = len(g);
        const double gamma = std::array<double, 3>{0.8, 0.95, 1.0}[trial % 3];
        const Vector m = random_vector(g, np);
        const Matrix P0 = random_spd(g, np);
        auto s = EstimatorState::from_prior(m, P0, gamma);
        std::vector<RegressionSample> hist;
        for (int k = 0; k < K; ++k) {
            RegressionSample r{random_matrix(g, nx, np), random_vector(g, nx)};
            s = rls_update(s, r.gamma, r.residual);
            hist.push_back(r);
            const Vector b = batch_wls(hist, m, P0, gamma);
            worst = std::max(worst, (s.p_hat - b).norm() / std::max(1.0, b.norm()));
        }
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Rls, CovarianceShrinksAndStaysSymmetricAtUnitForgetting) {
    std::mt19937_64 g(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = EstimatorState::from_prior(random_vector(g, 3), random_spd(g, 3), 1.0);
        for (int k = 0; k < 30; ++k) {
            const auto next = rls_update(s, random_matrix(g, 2, 3), random_vector(g, 2));
            EXPECT_EQ(next.P, next.P.transpose());
            EXPECT_LE(detail::max_eigenvalue(next.P - s.P), 1e-10);
            s = next;
        }
    }
}

TEST(Rls, NoiseFreeEstimateConvergesOnceExcited) {
    std::mt19937_64 g(5);
    const int np = 3;
    const Vector p_true = random_vector(g, np);
    auto s = EstimatorState::from_prior(Vector::Zero(np), Matrix::Identity(np, np), 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 40; ++k) {
        const Matrix G = random_matrix(g, 2, np);
        s = rls_update(s, G, G * p_true);
        const double err = (s.p_hat - p_true).norm();
        if (k >= 2) EXPECT_LE(err, prev + 1e-8);
        prev = err;
    }
    EXPECT_LE(prev, 0.05);
}

TEST(Rls, ScalarPriorInfluenceShrinksLikeOneOverK) {
    // p_hat_k = k / (k + 1) for prior N(0, 1), G = 1, residual = 1.
    auto s = scalar_state(0.0, 1.0, 1.0);
    for (int k = 1; k <= 200; ++k) {
        s = rls_update(s, Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0));
        EXPECT_NEAR(s.p_hat(0), k / (k + 1.0), 1e-13);
        EXPECT_NEAR(s.P(0, 0), 1.0 / (k + 1.0), 1e-13);
    }
}

TEST(Rls, ReportsMinPivotAndRejectsBadInput) {
    double pivot = 0.0;
    rls_update(scalar_state(0.0, 1.0, 1.0), Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 0.0), &pivot);
    EXPECT_NEAR(pivot, 2.0, 1e-15);
    EXPECT_THROW(rls_update(scalar_state(0.0, 1.0, 1.0), Matrix::Constant(2, 1, 1.0), Vector::Constant(1, 0.0)),
                 ContractViolation);
    EXPECT_THROW(rls_update(scalar_state(0.0, 1.0, 1.0), Matrix::Constant(1, 1, std::nan("")), Vector::Zero(1)),
                 ContractViolation);
    EXPECT_THROW(EstimatorState::from_prior(Vector::Zero(1), Matrix::Identity(1, 1), 0.0), ContractViolation);
}

TEST(Rls, NegativeCovarianceIsReported) {
    // An indefinite "covariance" drives the inner matrix singular or the update indefinite.
    EstimatorState s{Vector::Zero(1), Matrix::Constant(1, 1, -1.0), 1.0};
    EXPECT_THROW(rls_update(s, Matrix::Constant(1, 1, 1.0), Vector::Zero(1)), NumericalError);
}
