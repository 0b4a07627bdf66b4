#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "kkl/kernels.hpp"
#include "kkl/random.hpp"

using namespace kkl;

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
struct GaussLegendre {
    std::vector<double> x, w;
    explicit GaussLegendre(int n) : x(n), w(n) {
        for (int i = 0; i < n; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double step = p1 / dp;
                t -= step;
                if (std::abs(step) < 1e-16) break;
            }
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
    }
    double integrate(const std::function<double(double)>& f, double a, double b) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(0.5 * (b - a) * x[i] + 0.5 * (a + b));
        return 0.5 * (b - a) * s;
    }
};

// Wendland's recursion: psi_{l,0} = (1-r)^l, psi_{l,k+1}(r) = int_r^1 t psi_{l,k}(t) dt.
double wendland_by_quadrature(int l, int k, double r, const GaussLegendre& gl) {
    if (k == 0) return std::pow(1.0 - r, l);
    return gl.integrate([&](double t) { return t * wendland_by_quadrature(l, k - 1, t, gl); }, r, 1.0);
}

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed, double scale) {
    Eigen::MatrixXd P(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) P(i, j) = scale * (2.0 * uniform01(seed, i, j) - 1.0);
    return P;
}

}  // namespace

class WendlandQuadrature : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(WendlandQuadrature, MatchesIntegralRecursion) {
    const auto [dim, k] = GetParam();
    const GaussLegendre gl(24);
    const int l = dim / 2 + k + 1;
    const double norm = wendland_by_quadrature(l, k, 0.0, gl);
    const auto kern = RadialKernel<double>::wendland(dim, k, 1.0);
    for (double r = 0.0; r <= 1.2; r += 0.05) {
        const double expected = r >= 1.0 ? 0.0 : wendland_by_quadrature(l, k, r, gl) / norm;
        EXPECT_NEAR(kern.profile(r), expected, 1e-8) << "dim " << dim << " k " << k << " r " << r;
    }
}

INSTANTIATE_TEST_SUITE_P(Orders, WendlandQuadrature,
                         ::testing::Values(std::pair{1, 0}, std::pair{3, 0}, std::pair{1, 1}, std::pair{3, 1},
                                           std::pair{2, 2}, std::pair{3, 2}, std::pair{3, 3}, std::pair{5, 3}));

TEST(Wendland, RejectsUnsupportedSmoothness) {
    EXPECT_THROW(RadialKernel<double>::wendland(3, 4, 1.0), ArgumentError);
    EXPECT_THROW(RadialKernel<double>::wendland(0, 1, 1.0), ArgumentError);
}

TEST(Wendland, CompactSupportScalesWithBandwidth) {
    const auto kern = RadialKernel<double>::wendland(3, 1, 10.0);
    EXPECT_GT(kern.from_distance(9.99), 0.0);
    EXPECT_EQ(kern.from_distance(10.0), 0.0);
    EXPECT_EQ(kern.from_distance(25.0), 0.0);
    EXPECT_DOUBLE_EQ(kern.from_distance(0.0), 1.0);
}

TEST(Wendland, DimensionIsEnforced) {
    const auto kern = RadialKernel<double>::wendland(3, 1, 1.0);
    EXPECT_THROW(kern(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)), ArgumentError);
}

TEST(Matern, AgreesWithBesselForm) {
    const std::pair<MaternOrder, double> orders[] = {
        {MaternOrder::Half, 0.5}, {MaternOrder::ThreeHalves, 1.5}, {MaternOrder::FiveHalves, 2.5}};
    for (const auto& [order, nu] : orders) {
        const double sigma = 1.7;
        const auto kern = RadialKernel<double>::matern(order, sigma);
        for (double d = 0.05; d < 8.0; d += 0.37) {
            const double s = std::sqrt(2.0 * nu) * d / sigma;
            const double expected = std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(s, nu) * std::cyl_bessel_k(nu, s);
            EXPECT_NEAR(kern.from_distance(d), expected, 1e-12) << "nu " << nu << " d " << d;
        }
        EXPECT_DOUBLE_EQ(kern.from_distance(0.0), 1.0);
    }
}

TEST(Gaussian, MatchesExponential) {
    const auto kern = RadialKernel<double>::gaussian(2.0);
    const Eigen::Vector3d x(1, 2, 3), y(0.5, -1, 2);
    EXPECT_NEAR(kern(x, y), std::exp(-(x - y).squaredNorm() / 4.0), 1e-15);
}

TEST(Kernels, RejectsNonPositiveBandwidth) {
    EXPECT_THROW(RadialKernel<double>::gaussian(0.0), ArgumentError);
    EXPECT_THROW(RadialKernel<double>::gaussian(1.0).with_bandwidth(-1.0), ArgumentError);
}

TEST(Gram, SymmetricPositiveSemidefiniteForEveryFamily) {
    const Eigen::MatrixXd P = random_points(80, 3, 5, 3.0);
    const RadialKernel<double> kernels[] = {
        RadialKernel<double>::wendland(3, 0, 2.0), RadialKernel<double>::wendland(3, 1, 2.0),
        RadialKernel<double>::wendland(3, 3, 2.0), RadialKernel<double>::matern(MaternOrder::Half, 1.0),
        RadialKernel<double>::matern(MaternOrder::FiveHalves, 1.0), RadialKernel<double>::gaussian(1.0)};
    for (const auto& kern : kernels) {
        const Eigen::MatrixXd K = gram(kern, P);
        EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0);
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        EXPECT_GT(lo, -1e-10 * K.trace()) << kernel_spec(kern);
    }
}

TEST(Gram, CrossGramAndColumnAgreeWithPointwise) {
    const auto kern = RadialKernel<double>::matern(MaternOrder::ThreeHalves, 1.3);
    const Eigen::MatrixXd P = random_points(7, 2, 1, 2.0), Q = random_points(5, 2, 2, 2.0);
    const Eigen::MatrixXd K = gram(kern, P, Q);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(K(i, j), kern(P.row(i), Q.row(j)));
    const Eigen::VectorXd col = kernel_column(kern, P, Q.row(3));
    EXPECT_LT((col - K.col(3)).norm(), 1e-15);
    EXPECT_THROW(gram(kern, P, random_points(3, 3, 1, 1.0)), ArgumentError);
}

TEST(KernelSpec, RoundTrips) {
    for (const std::string spec : {"wendland dim=3 k=1 sigma=10", "matern nu=3/2 sigma=0.25", "gaussian sigma=4"}) {
        const auto kern = parse_kernel_spec(spec);
        EXPECT_EQ(kernel_spec(kern), spec);
    }
    EXPECT_THROW(parse_kernel_spec("gaussian"), ArgumentError);
    EXPECT_THROW(parse_kernel_spec("cauchy sigma=1"), ArgumentError);
    EXPECT_THROW(parse_kernel_spec("matern nu=7/2 sigma=1"), ArgumentError);
}

TEST(Random, DeterministicAndUniform) {
    double mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = uniform01(42, i, 0);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        mean += u / n;
    }
    EXPECT_NEAR(mean, 0.5, 0.01);
    EXPECT_EQ(uniform01(1, 2, 3), uniform01(1, 2, 3));
    EXPECT_NE(uniform01(1, 2, 3), uniform01(2, 2, 3));
}
