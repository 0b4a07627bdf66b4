#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "kkl/observer.hpp"
#include "kkl/random.hpp"

using namespace kkl;

TEST(ObserverMatrices, BidiagonalStructure) {
    const auto mats = build_matrices(DeepKKLParams<double>{3, 0.8, 10});
    Eigen::Matrix3d A;
    A << 0.8, 0, 0, 0.2, 0.8, 0, 0, 0.2, 0.8;
    EXPECT_LT((mats.A - A).norm(), 1e-15);
    EXPECT_LT((mats.b - Eigen::Vector3d(0.2, 0, 0)).norm(), 1e-15);
    EXPECT_THROW(build_matrices(DeepKKLParams<double>{3, 1.0, 10}), ArgumentError);
    EXPECT_THROW(build_matrices(DeepKKLParams<double>{3, 0.5, 2}), ArgumentError);
}

// (A^j b)_k is the coefficient of y_{-(j+1)} in component k of the steady-state filter.
TEST(SeriesWeights, MatchMatrixPowers) {
    for (double beta : {0.5, 0.9, 0.95}) {
        const DeepKKLParams<double> params{4, beta, 60};
        const auto mats = build_matrices(params);
        const Eigen::MatrixXd W = weight_table(params);
        Eigen::VectorXd power = mats.b;
        for (int j = 0; j < 50; ++j) {
            for (int k = 0; k < 4; ++k) {
                const double expected = j >= k ? W(k, j - k) : 0.0;
                EXPECT_NEAR(power(k), expected, 1e-14 * std::max(1.0, std::abs(expected))) << "beta " << beta << " j " << j;
            }
            power = mats.A * power;
        }
    }
}

TEST(SeriesWeights, SumToOneInTheLimit) {
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(series_weights(k, 0.9, 2000).sum(), 1.0, 1e-12);
}

TEST(SeriesWeights, ClosedForm) {
    const Eigen::VectorXd w = series_weights(2, 0.7, 6);
    for (int t = 0; t <= 6; ++t) {
        const double binom = (t + 1.0) * (t + 2.0) / 2.0;
        EXPECT_NEAR(w(t), binom * std::pow(0.7, t) * std::pow(0.3, 3), 1e-15);
    }
}

TEST(CompensatedSum, RecoversLostLowOrderBits) {
    CompensatedSum<double> acc;
    double naive = 0.0;
    acc.add(1.0);
    naive += 1.0;
    for (int i = 0; i < 10000; ++i) {
        acc.add(1e-16);
        naive += 1e-16;
    }
    EXPECT_EQ(naive, 1.0);
    EXPECT_NEAR(acc.value(), 1.0 + 1e-12, 1e-20);
}

TEST(TruncatedInjection, FilterFromRestReproducesTheSum) {
    const DeepKKLParams<double> params{3, 0.9, 50};
    const auto mats = build_matrices(params);
    const int ell = params.truncation;
    // y_{-(j+1)} = back(j); drive the filter with the history oldest first, starting from z = 0.
    Eigen::VectorXd back(ell);
    for (int j = 0; j < ell; ++j) back(j) = std::sin(0.3 * j) + 0.5 * uniform01(1, j, 0);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    for (int j = ell - 1; j >= 0; --j) z = mats.A * z + mats.b * back(j);
    // The filter keeps t up to ell-k-1 per component; the truncated sum keeps t up to ell-m.
    const Eigen::MatrixXd W = weight_table(params);
    Eigen::VectorXd extra = Eigen::VectorXd::Zero(3);
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd full = series_weights(k, params.beta, ell - k - 1);
        for (int t = ell - 3 + 1; t <= ell - k - 1; ++t) extra(k) += full(t) * back(k + t);
    }
    EXPECT_LT((truncated_injection(back, params) + extra - z).norm(), 1e-13);
    EXPECT_THROW(truncated_injection(back.head(ell - 1), params), ArgumentError);
}

TEST(TruncationBound, DominatesTheObservedTail) {
    const int horizon = 600;
    Eigen::VectorXd back(horizon);
    for (int j = 0; j < horizon; ++j) back(j) = (j % 2 ? 1.0 : -1.0) * (0.5 + 0.5 * uniform01(4, j, 0));
    for (int m : {1, 2, 3}) {
        for (double beta : {0.5, 0.9}) {
            for (int ell : {20, 50, 100}) {
                const DeepKKLParams<double> params{m, beta, ell};
                if (!params.bound_valid()) continue;
                const Eigen::VectorXd zl = truncated_injection(back, params);
                const Eigen::VectorXd zinf = truncated_injection(back, DeepKKLParams<double>{m, beta, horizon});
                EXPECT_LE((zl - zinf).norm(), truncation_bound(params, 1.0)) << m << " " << beta << " " << ell;
            }
        }
    }
}

TEST(TruncationBound, LogDomainMatchesDirectProduct) {
    const DeepKKLParams<double> params{3, 0.95, 400};
    long double binom = 1.0L;
    for (int i = 1; i <= 2; ++i) binom = binom * (399 - 2 + i) / i;  // C(399, 2)
    const long double bt = 0.95L * (1.0L + 2.0L / 397.0L);
    const long double direct = binom * std::sqrt(3.0L) * 2.5L * 0.05L / (1.0L - bt) * bt * std::pow(0.95L, 397);
    EXPECT_NEAR(truncation_bound(params, 2.5), static_cast<double>(direct), 1e-12 * static_cast<double>(direct));
    // Large ell underflows gracefully instead of overflowing the binomial.
    EXPECT_GE(truncation_bound(DeepKKLParams<double>{3, 0.999, 100000}, 1.0), 0.0);
    EXPECT_TRUE(std::isfinite(truncation_bound(DeepKKLParams<double>{3, 0.999, 100000}, 1.0)));
}

TEST(TruncationBound, InvalidRegimeNamesMinimalLength) {
    const DeepKKLParams<double> params{3, 0.95, 20};
    EXPECT_FALSE(params.bound_valid());
    EXPECT_EQ(params.min_valid_truncation(), 42);
    try {
        truncation_bound(params, 1.0);
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("42"), std::string::npos);
    }
}

TEST(AnalyticInjection, MatchesLongSeriesOnTheCircle) {
    const double beta = 0.9, gamma = 0.25, theta = 1.1;
    const int ell = 3000;
    Eigen::VectorXd back(ell);
    for (int j = 0; j < ell; ++j) back(j) = 2 * std::cos(theta - gamma * (j + 1));
    const Eigen::VectorXd z = truncated_injection(back, DeepKKLParams<double>{2, beta, ell});
    EXPECT_LT((analytic_injection(theta, beta, gamma) - z).norm(), 1e-12);
}

TEST(AnalyticInjection, SatisfiesTheInvarianceEquation) {
    const double beta = 0.9, gamma = 0.25;
    const auto mats = build_matrices(DeepKKLParams<double>{2, beta, 10});
    for (double theta = 0.0; theta < 6.3; theta += 0.7) {
        const Eigen::VectorXd lhs = analytic_injection(theta + gamma, beta, gamma);
        const Eigen::VectorXd rhs = mats.A * analytic_injection(theta, beta, gamma) + mats.b * (2 * std::cos(theta));
        EXPECT_LT((lhs - rhs).norm(), 1e-14);
    }
}

TEST(AnalyticInjection, InverseRecoversTheState) {
    for (double theta = -3.0; theta < 3.1; theta += 0.37) {
        const Eigen::VectorXd x = analytic_pseudo_inverse(analytic_injection(theta, 0.9, 0.25), 0.9, 0.25);
        EXPECT_NEAR(x(0), std::cos(theta), 1e-12);
        EXPECT_NEAR(x(1), std::sin(theta), 1e-12);
    }
    EXPECT_THROW(analytic_pseudo_inverse(Eigen::VectorXd::Zero(2), 0.9, 0.25), NumericError);
    EXPECT_THROW(analytic_pseudo_inverse(Eigen::VectorXd::Zero(3), 0.9, 0.25), ArgumentError);
}

TEST(RunObserver, RejectsNonFiniteState) {
    const auto mats = build_matrices(DeepKKLParams<double>{2, 0.9, 10});
    Eigen::VectorXd y = Eigen::VectorXd::Ones(5);
    y(2) = std::numeric_limits<double>::infinity();
    const auto identity = [](const Eigen::VectorXd& z) { return z; };
    EXPECT_THROW(run_observer(mats, identity, y, Eigen::VectorXd(Eigen::VectorXd::Zero(2))), NumericError);
    EXPECT_THROW(run_observer(mats, identity, y, Eigen::VectorXd(Eigen::VectorXd::Zero(3))), ArgumentError);
}
