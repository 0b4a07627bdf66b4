#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "kkl/random.hpp"
#include "kkl/spectral.hpp"

using namespace kkl;

namespace {

constexpr double pi = std::numbers::pi;

SnapshotSet random_snapshots(int n, int d, std::uint64_t seed) {
    SnapshotSet s{Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, d)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            s.successors(i, j) = 2 * uniform01(seed, i, j) - 1;
            s.predecessors(i, j) = 2 * uniform01(seed + 1, i, j) - 1;
        }
    return s;
}

// Equally spaced circle points with their predecessors under a rotation by gamma.
SnapshotSet circle_snapshots(int n, double gamma) {
    SnapshotSet s{Eigen::MatrixXd(n, 2), Eigen::MatrixXd(n, 2)};
    for (int i = 0; i < n; ++i) {
        const double theta = 2 * pi * (i + 0.3) / n;
        s.successors.row(i) = circle_point(theta).transpose();
        s.predecessors.row(i) = circle_point(theta - gamma).transpose();
    }
    return s;
}

SpectralOptions full_rank() {
    SpectralOptions o;
    o.max_rank = 0;
    return o;
}

}  // namespace

TEST(ResidualMatrix, EqualsStackedGramQuadraticForm) {
    const SnapshotSet s = random_snapshots(12, 2, 3);
    const auto kern = RadialKernel<double>::gaussian(0.7);
    const SnapshotMatrices mats = build_snapshot_matrices(s, kern);
    Eigen::MatrixXd stacked(24, 2);
    stacked << s.predecessors, s.successors;
    const Eigen::MatrixXcd K = gram(kern, stacked).cast<cplx>();
    for (double angle : {0.3, 2.0, -1.1}) {
        const cplx lambda = std::polar(1.0, angle);
        // M(lambda) = S^* K S with S = [I; -lambda I].
        Eigen::MatrixXcd S(24, 12);
        S << Eigen::MatrixXcd::Identity(12, 12), -lambda * Eigen::MatrixXcd::Identity(12, 12);
        EXPECT_LT((residual_matrix(mats, lambda) - S.adjoint() * K * S).norm(), 1e-12);
    }
}

TEST(ResidualMatrix, HermitianPositiveSemidefinite) {
    const SnapshotMatrices mats = build_snapshot_matrices(random_snapshots(30, 3, 4), RadialKernel<double>::wendland(3, 1, 1.5));
    for (double angle : {0.1, 1.0, 3.0}) {
        const Eigen::MatrixXcd M = residual_matrix(mats, std::polar(1.0, angle));
        EXPECT_LT((M - M.adjoint()).norm(), 1e-13);
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M).eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(CandidateGrid, MidpointsOfEqualArcs) {
    const CandidateGrid grid = candidate_grid(8);
    ASSERT_EQ(grid.values.size(), 8);
    for (int j = 0; j < 8; ++j) {
        EXPECT_NEAR(std::abs(grid.values(j)), 1.0, 1e-15);
        EXPECT_NEAR(grid.angles(j), pi / 8 * (2 * j + 1), 1e-14);
        // Conjugate partner sits at the mirrored index.
        EXPECT_LT(std::abs(grid.values(j) - std::conj(grid.values(7 - j))), 1e-14);
    }
    EXPECT_NEAR(grid.mesh_size, 2 * std::sin(pi / 8), 1e-15);
    EXPECT_THROW(candidate_grid(0), ArgumentError);
}

TEST(SolveCandidate, IdentityDynamicsResidualIsDistanceToOne) {
    SnapshotSet s = random_snapshots(25, 2, 5);
    s.predecessors = s.successors;
    const SnapshotMatrices mats = build_snapshot_matrices(s, RadialKernel<double>::gaussian(1.0));
    for (double angle : {0.01, 0.5, pi}) {
        const cplx lambda = std::polar(1.0, angle);
        EXPECT_NEAR(solve_candidate(lambda, mats, 1e-12).residual, std::abs(1.0 - lambda), 1e-6) << angle;
    }
    EXPECT_NEAR(solve_candidate(-1.0, mats, 1e-12).residual, 2.0, 1e-6);
    EXPECT_THROW(solve_candidate(cplx(0.5, 0.0), mats, 1e-12), ArgumentError);
}

// A rational rotation has the roots of unity of its order as exact spectrum, and a rotation invariant
// kernel makes the operator unitary, so the residual is at least the distance to that set.
TEST(SolveCandidate, RotationEigenfunctionHasSmallResidual) {
    const double gamma = 2 * pi / 8;
    const SnapshotMatrices mats = build_snapshot_matrices(circle_snapshots(40, gamma), RadialKernel<double>::gaussian(0.3));
    const auto at = solve_candidate(std::polar(1.0, gamma), mats, 1e-12);
    const auto off = solve_candidate(std::polar(1.0, gamma + pi / 8), mats, 1e-12);
    EXPECT_LT(at.residual, 1e-5);
    EXPECT_GT(off.residual, std::abs(1.0 - std::polar(1.0, pi / 8)) - 1e-6);
    // Normalization v^* (G + eps I) v = 1.
    Eigen::MatrixXd Gr = mats.G;
    Gr.diagonal().array() += 1e-12;
    EXPECT_NEAR((at.coefficients.adjoint() * Gr.cast<cplx>() * at.coefficients)(0).real(), 1.0, 1e-8);
    // The residual is the Rayleigh quotient of M at the returned vector.
    const cplx q = (off.coefficients.adjoint() * residual_matrix(mats, std::polar(1.0, gamma + pi / 8)) * off.coefficients)(0);
    EXPECT_NEAR(std::sqrt(std::max(0.0, q.real())), off.residual, 1e-8);
}

TEST(SolveCandidate, ConjugateCandidatesShareResiduals) {
    const SnapshotMatrices mats = build_snapshot_matrices(random_snapshots(40, 3, 6), RadialKernel<double>::gaussian(0.8));
    for (double angle : {0.2, 1.3, 2.9}) {
        const auto a = solve_candidate(std::polar(1.0, angle), mats, 1e-10);
        const auto b = solve_candidate(std::polar(1.0, -angle), mats, 1e-10);
        EXPECT_NEAR(a.residual, b.residual, 1e-8);
    }
}

TEST(SpectralBasis, ReducedRankResidualIsAnUpperBound) {
    const SnapshotMatrices mats = build_snapshot_matrices(random_snapshots(200, 3, 7), RadialKernel<double>::gaussian(0.6));
    const SpectralBasis full(mats, full_rank());
    SpectralOptions reduced_opts;
    reduced_opts.max_rank = 40;
    const SpectralBasis reduced(mats, reduced_opts);
    EXPECT_EQ(reduced.rank(), 40);
    EXPECT_LT((reduced.whitening().transpose() * (mats.G + full.ridge() * Eigen::MatrixXd::Identity(200, 200)) *
               reduced.whitening() - Eigen::MatrixXd::Identity(40, 40)).norm(), 1e-8);
    for (double angle : {0.1, 1.0, 2.5}) {
        const cplx lambda = std::polar(1.0, angle);
        EXPECT_GE(reduced.solve(lambda).residual, full.solve(lambda).residual - 1e-9);
    }
}

TEST(SpectralBasis, RandomizedMatchesExactSubspace) {
    const SnapshotMatrices mats = build_snapshot_matrices(random_snapshots(400, 3, 8), RadialKernel<double>::gaussian(0.5));
    SpectralOptions exact_opts, sketch_opts;
    exact_opts.max_rank = sketch_opts.max_rank = 60;
    sketch_opts.exact_below = 0;
    sketch_opts.oversample = 60;
    sketch_opts.seed = 2;
    const SpectralBasis exact(mats, exact_opts), sketch(mats, sketch_opts);
    for (double angle : {0.3, 1.7}) {
        const cplx lambda = std::polar(1.0, angle);
        EXPECT_NEAR(exact.solve(lambda).residual, sketch.solve(lambda).residual, 1e-3);
    }
}

TEST(SpectralModel, KeepsCandidatesAtOrBelowThreshold) {
    const SnapshotSet s = circle_snapshots(40, 0.25);
    const auto kern = RadialKernel<double>::gaussian(0.3);
    auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(s, kern), full_rank());
    const SpectralScan scan = scan_candidates(basis, s.successors, kern, candidate_grid(40).values);
    const double cut = scan.residuals(5);
    const SpectralModel model(scan, cut, 1e-8);
    Eigen::Index expected = 0;
    for (Eigen::Index j = 0; j < scan.residuals.size(); ++j) expected += scan.residuals(j) <= cut ? 1 : 0;
    EXPECT_EQ(model.size(), expected);
    EXPECT_LE(model.residuals().maxCoeff(), cut);
    for (Eigen::Index j = 1; j < model.size(); ++j) EXPECT_LT(model.angles()(j - 1), model.angles()(j));
    const SpectralModel none(scan, -1.0, 1e-8);
    EXPECT_TRUE(none.empty());
}

TEST(Decomposition, SectionErrorBoundedAndConsistent) {
    const SnapshotSet s = circle_snapshots(40, 0.25);
    const auto kern = RadialKernel<double>::gaussian(0.3);
    const SpectralModel model = fit_spectral_model(s, kern, 64, std::nullopt, full_rank());
    const Eigen::MatrixXcd all = decompose_snapshot_sections(model);
    for (int i : {0, 17, 39}) {
        const Eigen::VectorXd x = s.successors.row(i).transpose();
        const Eigen::VectorXcd c = decompose_kernel_section(x, model);
        EXPECT_LT((c - all.col(i)).norm(), 1e-6 * std::max(1.0, c.norm()));
        const double err = section_reconstruction_error(x, model, c);
        EXPECT_LE(err, 1.0);
        EXPECT_LE(err, section_reconstruction_error(x, model, Eigen::VectorXcd::Zero(c.size())) + 1e-12);
    }
}

TEST(SpectralInjection, RotationMatchesDirectTruncatedSum) {
    // gamma sits exactly on the candidate grid so the eigenvalues carrying the output are available.
    const int p = 16;
    const int n = 48;
    const double gamma = pi / p;
    const SnapshotSet s = circle_snapshots(n, gamma);
    const auto kern = RadialKernel<double>::gaussian(0.3);
    const SpectralModel model = fit_spectral_model(s, kern, p, std::nullopt, full_rank());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = 2 * s.successors(i, 0);
    const auto output = kernel_interpolate(s.successors, y, kern);
    const DeepKKLParams<double> params{3, 0.9, 50};
    const Eigen::MatrixXd Z = spectral_injection_snapshots(model, output, params);
    for (int i = 0; i < n; i += 5) {
        const double theta = std::atan2(s.successors(i, 1), s.successors(i, 0));
        Eigen::VectorXd back(50);
        for (int j = 0; j < 50; ++j) back(j) = 2 * std::cos(theta - gamma * (j + 1));
        EXPECT_LT((Z.row(i).transpose() - truncated_injection(back, params)).norm(), 1e-3) << i;
    }
}

TEST(SpectralInjection, RejectsForeignInterpolant) {
    const SnapshotSet s = circle_snapshots(20, 0.3);
    const auto kern = RadialKernel<double>::gaussian(0.3);
    const SpectralModel model = fit_spectral_model(s, kern, 20, std::nullopt, full_rank());
    const auto other = kernel_interpolate(s.predecessors, Eigen::VectorXd::Ones(20), kern);
    EXPECT_THROW(SpectralInjector(model, other, DeepKKLParams<double>{}), ArgumentError);
}
