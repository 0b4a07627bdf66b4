#include "kkl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kkl/random.hpp"

namespace kkl {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& Y) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), Y.cols());
}

Eigen::MatrixXd gaussian_sketch(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto idx = static_cast<std::uint64_t>(j * rows + i);
            const double u1 = 1.0 - uniform01(seed, idx, 1);
            const double u2 = uniform01(seed, idx, 2);
            out(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
        }
    return out;
}

double wrap_angle(cplx z) {
    double a = std::arg(z);
    if (a < 0) a += two_pi;
    return a;
}

std::string describe(cplx z) {
    std::ostringstream os;
    os.precision(10);
    os << "(" << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i)";
    return os.str();
}

}  // namespace

SnapshotMatrices build_snapshot_matrices(const SnapshotSet& snapshots, const RadialKernel<double>& kernel) {
    if (snapshots.successors.rows() < 1) throw ArgumentError("build_snapshot_matrices: no snapshots");
    if (snapshots.successors.rows() != snapshots.predecessors.rows() ||
        snapshots.successors.cols() != snapshots.predecessors.cols())
        throw ArgumentError("build_snapshot_matrices: successor and predecessor sets differ in shape");
    SnapshotMatrices out;
    out.G = gram(kernel, snapshots.successors);
    out.A = gram(kernel, snapshots.predecessors, snapshots.successors);
    out.R = gram(kernel, snapshots.predecessors);
    return out;
}

Eigen::MatrixXcd residual_matrix(const SnapshotMatrices& matrices, cplx lambda) {
    Eigen::MatrixXcd M = matrices.R.cast<cplx>();
    M -= lambda * matrices.A.cast<cplx>();
    M -= std::conj(lambda) * matrices.A.transpose().cast<cplx>();
    M += std::norm(lambda) * matrices.G.cast<cplx>();
    return M;
}

CandidateGrid candidate_grid(int p) {
    if (p < 1) throw ArgumentError("candidate_grid: p must be positive");
    CandidateGrid grid;
    grid.values.resize(p);
    grid.angles.resize(p);
    for (int j = 1; j <= p; ++j) {
        const double angle = std::numbers::pi * (2.0 * j - 1.0) / p;
        grid.angles(j - 1) = angle;
        grid.values(j - 1) = std::polar(1.0, angle);
    }
    grid.mesh_size = 2.0 * std::sin(std::numbers::pi / (2.0 * (p / 2.0)));
    return grid;
}

SpectralBasis::SpectralBasis(const SnapshotMatrices& matrices, const SpectralOptions& options) {
    const Eigen::MatrixXd& G = matrices.G;
    const Eigen::Index n = G.rows();
    if (n < 1 || G.cols() != n || matrices.A.rows() != n || matrices.R.rows() != n)
        throw ArgumentError("SpectralBasis: inconsistent snapshot matrices");
    ridge_ = options.gram_ridge * G.trace() / static_cast<double>(n);
    const Eigen::Index want = options.max_rank <= 0 ? n : std::min<Eigen::Index>(options.max_rank, n);

    Eigen::MatrixXd basis;
    Eigen::VectorXd theta;
    if (want == n || n <= options.exact_below ||
        want + options.oversample >= n) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        if (es.info() != Eigen::Success) throw NumericError("SpectralBasis: eigendecomposition of G failed");
        theta = es.eigenvalues().tail(want).reverse();
        basis = es.eigenvectors().rightCols(want).rowwise().reverse();
    } else {
        // Randomized subspace iteration followed by Rayleigh-Ritz.
        const Eigen::Index width = std::min<Eigen::Index>(want + options.oversample, n);
        Eigen::MatrixXd Q = orthonormalize(G * gaussian_sketch(n, width, options.seed));
        for (int it = 0; it < options.power_iterations; ++it) {
            Eigen::MatrixXd Y(n, width);
            Y.noalias() = G * Q;
            Q = orthonormalize(Y);
        }
        Eigen::MatrixXd GQ(n, width);
        GQ.noalias() = G * Q;
        Eigen::MatrixXd T(width, width);
        T.noalias() = Q.transpose() * GQ;
        T = 0.5 * (T + T.transpose()).eval();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        if (es.info() != Eigen::Success) throw NumericError("SpectralBasis: Rayleigh-Ritz eigensolve failed");
        theta = es.eigenvalues().tail(want).reverse();
        basis.noalias() = Q * es.eigenvectors().rightCols(want).rowwise().reverse();
    }

    const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * std::max(theta(0), 0.0);
    Eigen::Index kept = 0;
    while (kept < theta.size() && std::max(theta(kept), 0.0) + ridge_ > floor) ++kept;
    if (kept == 0) throw NumericError("SpectralBasis: Gram matrix has no usable eigen-directions");
    whitening_ = basis.leftCols(kept);
    for (Eigen::Index j = 0; j < kept; ++j) whitening_.col(j) /= std::sqrt(std::max(theta(j), 0.0) + ridge_);

    gram_whitening_.noalias() = G * whitening_;
    // Both branches diagonalize G on the kept span, so W^T G W is known in closed form; forming it by
    // products loses definiteness once 1/sqrt(theta + eps) gets large.
    metric_ = Eigen::MatrixXd::Zero(kept, kept);
    for (Eigen::Index j = 0; j < kept; ++j) {
        const double t = std::max(theta(j), 0.0);
        metric_(j, j) = t / (t + ridge_);
    }
    Eigen::MatrixXd RW(n, kept);
    RW.noalias() = matrices.R * whitening_;
    shift_sum_.noalias() = whitening_.transpose() * RW;
    shift_sum_ += metric_;
    shift_sum_ = 0.5 * (shift_sum_ + shift_sum_.transpose()).eval();
    Eigen::MatrixXd AW(n, kept);
    AW.noalias() = matrices.A * whitening_;
    cross_.noalias() = whitening_.transpose() * AW;
}

CandidateSolution SpectralBasis::solve(cplx lambda) const {
    const Eigen::Index r = rank();
    Eigen::MatrixXcd H(r, r);
    H.real() = shift_sum_ - lambda.real() * (cross_ + cross_.transpose());
    H.imag() = -lambda.imag() * (cross_ - cross_.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    if (es.info() != Eigen::Success)
        throw NumericError("solve_candidate: eigensolver failed at lambda = " + describe(lambda) +
                           " (reduced dimension " + std::to_string(r) + ")");
    CandidateSolution out;
    out.eigenvalue = es.eigenvalues()(0);
    out.residual = std::sqrt(std::max(0.0, out.eigenvalue));
    out.coefficients = es.eigenvectors().col(0);
    Eigen::Index pivot = 0;
    out.coefficients.cwiseAbs().maxCoeff(&pivot);
    const cplx anchor = out.coefficients(pivot);
    out.coefficients *= std::conj(anchor) / std::abs(anchor);
    return out;
}

CandidateSolution solve_candidate(cplx lambda, const SnapshotMatrices& matrices, double gram_ridge) {
    if (std::abs(std::abs(lambda) - 1.0) > 1e-12) throw ArgumentError("solve_candidate: lambda must lie on the unit circle");
    if (gram_ridge < 0) throw ArgumentError("solve_candidate: ridge must be non-negative");
    const double scale = matrices.G.trace() / static_cast<double>(matrices.G.rows());
    SpectralOptions options;
    options.max_rank = 0;
    options.gram_ridge = gram_ridge / scale;
    const SpectralBasis basis(matrices, options);
    CandidateSolution out = basis.solve(lambda);
    out.coefficients = basis.lift(out.coefficients);
    return out;
}

SpectralScan scan_candidates(std::shared_ptr<const SpectralBasis> basis, const Eigen::MatrixXd& points,
                             const RadialKernel<double>& kernel, const Eigen::VectorXcd& candidates) {
    if (!basis) throw ArgumentError("scan_candidates: missing basis");
    if (points.rows() != basis->size()) throw ArgumentError("scan_candidates: point count does not match the basis");
    const Eigen::Index p = candidates.size();
    SpectralScan scan{basis, points, kernel, candidates, Eigen::VectorXd(p), Eigen::VectorXd(p),
                      Eigen::MatrixXcd(basis->rank(), p)};
    for (Eigen::Index j = 0; j < p; ++j) scan.angles(j) = wrap_angle(candidates(j));
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < p; ++j) {
        const CandidateSolution sol = basis->solve(candidates(j));
        scan.residuals(j) = sol.residual;
        scan.reduced.col(j) = sol.coefficients;
    }
    return scan;
}

SpectralModel::SpectralModel(const SpectralScan& scan, std::optional<double> threshold, double psi_ridge)
    : basis_(scan.basis), points_(scan.points), kernel_(scan.kernel), psi_ridge_(psi_ridge) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < scan.candidates.size(); ++j)
        if (!threshold || scan.residuals(j) <= *threshold) keep.push_back(j);
    std::stable_sort(keep.begin(), keep.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return scan.angles(a) < scan.angles(b); });
    const auto p = static_cast<Eigen::Index>(keep.size());
    candidates_.resize(p);
    angles_.resize(p);
    residuals_.resize(p);
    reduced_.resize(scan.reduced.rows(), p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::Index src = keep[static_cast<std::size_t>(j)];
        candidates_(j) = scan.candidates(src);
        angles_(j) = scan.angles(src);
        residuals_(j) = scan.residuals(src);
        reduced_.col(j) = scan.reduced.col(src);
    }
    if (p == 0) return;
    psi_ = reduced_.adjoint() * basis_->metric().cast<cplx>() * reduced_;
    psi_ = 0.5 * (psi_ + psi_.adjoint()).eval();
    Eigen::MatrixXcd reg = psi_;
    reg.diagonal().array() += psi_ridge_;
    psi_factor_.compute(reg);
    if (psi_factor_.info() != Eigen::Success)
        throw ConditioningError("spectral model: eigenfunction Gram matrix is not positive definite", 0.0);
}

Eigen::MatrixXcd SpectralModel::project(const Eigen::MatrixXd& whitened_sections) const {
    if (empty()) throw ArgumentError("spectral model has no retained candidates");
    const Eigen::MatrixXcd rhs = reduced_.adjoint() * whitened_sections.cast<cplx>();
    return psi_factor_.solve(rhs);
}

SpectralModel fit_spectral_model(const SnapshotSet& snapshots, const RadialKernel<double>& kernel, int p,
                                 std::optional<double> threshold, const SpectralOptions& options) {
    const CandidateGrid grid = candidate_grid(p);
    auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(snapshots, kernel), options);
    return SpectralModel(scan_candidates(basis, snapshots.successors, kernel, grid.values), threshold,
                         options.psi_ridge);
}

Eigen::VectorXcd decompose_kernel_section(const Eigen::VectorXd& x, const SpectralModel& model) {
    const Eigen::VectorXd k = kernel_column(model.kernel(), model.points(), x);
    return model.project(model.basis().whitening().transpose() * k).col(0);
}

Eigen::MatrixXcd decompose_snapshot_sections(const SpectralModel& model) {
    return model.project(model.basis().gram_whitening().transpose());
}

double section_reconstruction_error(const Eigen::VectorXd& x, const SpectralModel& model, const Eigen::VectorXcd& coords) {
    const Eigen::VectorXd k = kernel_column(model.kernel(), model.points(), x);
    const Eigen::VectorXcd cross = model.reduced().adjoint() * (model.basis().whitening().transpose() * k).cast<cplx>();
    const double self = model.kernel().profile(0.0);
    const double err2 = (coords.adjoint() * model.eigen_gram() * coords)(0).real() - 2.0 * coords.dot(cross).real() + self;
    return std::sqrt(std::max(0.0, err2));
}

SpectralInjector::SpectralInjector(const SpectralModel& model, const InterpolantModel<double>& output,
                                   const DeepKKLParams<double>& params) {
    params.validate();
    if (output.centers.rows() != model.points().rows() || output.centers.cols() != model.points().cols() ||
        output.centers != model.points())
        throw ArgumentError("spectral_injection: output interpolant was built on different points");
    if (model.empty()) throw ArgumentError("spectral_injection: spectral model is empty");
    const Eigen::MatrixXd weights = weight_table(params);
    const int m = params.order;
    const int horizon = params.truncation - m;
    const Eigen::Index p = model.size();
    shift_sums_.resize(m, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const cplx lambda = model.candidates()(j);
        for (int k = 0; k < m; ++k) {
            cplx power = std::pow(lambda, k + 1);
            cplx acc = 0.0;
            for (int t = 0; t <= horizon; ++t) {
                acc += weights(k, t) * power;
                power *= lambda;
            }
            shift_sums_(k, j) = acc;
        }
    }
    // <h, psi_j> = (c^h)^T G V e_j
    const Eigen::VectorXd projected = model.basis().gram_whitening().transpose() * output.coefficients;
    output_coords_ = model.reduced().transpose() * projected.cast<cplx>();
}

Eigen::VectorXd SpectralInjector::operator()(const Eigen::VectorXcd& coords) const {
    const Eigen::VectorXcd z = shift_sums_ * output_coords_.cwiseProduct(coords);
    const double imag = z.imag().norm();
    if (imag > 1e-6 * z.norm() + 1e-14)
        throw NumericError("spectral_injection: imaginary part " + std::to_string(imag) +
                           " exceeds tolerance relative to " + std::to_string(z.norm()));
    return z.real();
}

Eigen::VectorXd spectral_injection(const Eigen::VectorXd& x, const SpectralModel& model,
                                   const InterpolantModel<double>& output, const DeepKKLParams<double>& params) {
    return SpectralInjector(model, output, params)(decompose_kernel_section(x, model));
}

Eigen::MatrixXd spectral_injection_snapshots(const SpectralModel& model, const InterpolantModel<double>& output,
                                             const DeepKKLParams<double>& params) {
    const SpectralInjector inject(model, output, params);
    const Eigen::MatrixXcd coords = decompose_snapshot_sections(model);
    Eigen::MatrixXd Z(coords.cols(), params.order);
    for (Eigen::Index i = 0; i < coords.cols(); ++i) Z.row(i) = inject(coords.col(i)).transpose();
    return Z;
}

}  // namespace kkl
