#include "kkl/pipelines.hpp"

#include <chrono>

namespace kkl {

namespace {

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

double bound_or_nan(const DeepKKLParams<double>& params, double output_bound) {
    return params.bound_valid() ? truncation_bound(params, output_bound) : std::numeric_limits<double>::quiet_NaN();
}

void fit_and_score(SynthesisResult& out, const SynthesisConfig& config, Stopwatch& clock) {
    out.model = krr_fit(out.injections, out.targets, config.z_kernel, config.alpha);
    out.timings["krr_fit"] = clock.lap();
    out.training_mse = mean_squared_error(out.model.predict(out.injections), out.targets);
    out.timings["score"] = clock.lap();
}

SynthesisResult empty_result(const SynthesisConfig& config) {
    return SynthesisResult{PseudoInverseModel<double>{config.z_kernel, {}, {}, config.alpha}, {}, {}, 0.0, 0.0,
                           std::numeric_limits<double>::quiet_NaN(), {}};
}

}  // namespace

SynthesisResult algorithm1(const OrbitSet& orbits, const OutputMap& output, const SynthesisConfig& config) {
    const auto& params = config.observer;
    params.validate();
    if (orbits.size() < 1) throw ArgumentError("algorithm1: empty orbit set");
    if (orbits.history_length < params.truncation)
        throw ArgumentError("algorithm1: orbit history " + std::to_string(orbits.history_length) +
                            " is shorter than the truncation length " + std::to_string(params.truncation));
    Stopwatch clock;
    const Eigen::MatrixXd weights = weight_table(params);
    SynthesisResult out = empty_result(config);
    const Eigen::Index n = orbits.size();
    out.injections.resize(n, params.order);
    out.targets = orbits.anchors();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::MatrixXd& hist = orbits.orbits[static_cast<std::size_t>(i)];
        Eigen::VectorXd back(params.truncation);
        for (int j = 0; j < params.truncation; ++j) back(j) = output(hist.row(j + 1).transpose());
        out.output_bound = std::max(out.output_bound, back.cwiseAbs().maxCoeff());
        out.injections.row(i) = truncated_injection<double>(back, weights).transpose();
    }
    out.timings["injection"] = clock.lap();
    out.truncation_bound = bound_or_nan(params, out.output_bound);
    fit_and_score(out, config, clock);
    return out;
}

LongOrbitInjector::LongOrbitInjector(const LongOrbit& orbit, const OutputMap& output,
                                     const RadialKernel<double>& kernel, const DeepKKLParams<double>& params)
    : states_(orbit.states), params_(params), weights_(weight_table(params)),
      interpolant_([&] {
          params.validate();
          const Eigen::Index n = orbit.states.rows();
          if (n <= params.truncation) throw ArgumentError("algorithm2: orbit must be longer than the truncation length");
          const Eigen::MatrixXd centers = orbit.states.bottomRows(n - params.truncation);
          Eigen::VectorXd y(centers.rows());
          for (Eigen::Index i = 0; i < centers.rows(); ++i) y(i) = output(centers.row(i).transpose());
          return kernel_interpolate(centers, y, kernel);
      }()) {
    fitted_outputs_ = interpolant_.predict(states_);
    Eigen::MatrixXd G = gram(interpolant_.kernel, interpolant_.centers);
    G.diagonal().array() += interpolant_.jitter;
    section_solver_.emplace(G, "long-orbit kernel section");
}

Eigen::VectorXd LongOrbitInjector::at_index(Eigen::Index j) const {
    if (j < params_.truncation || j >= states_.rows())
        throw ArgumentError("LongOrbitInjector: index " + std::to_string(j) + " outside the interpolation window");
    const int m = params_.order;
    Eigen::VectorXd z(m);
    for (int k = 0; k < m; ++k) {
        CompensatedSum<double> acc;
        for (Eigen::Index t = 0; t < weights_.cols(); ++t) acc.add(weights_(k, t) * fitted_outputs_(j - k - t - 1));
        z(k) = acc.value();
    }
    return z;
}

Eigen::VectorXd LongOrbitInjector::shifted_sum(const Eigen::VectorXd& c) const {
    const int m = params_.order;
    const Eigen::Index offset = params_.truncation;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k)
        for (Eigen::Index t = 0; t < weights_.cols(); ++t) {
            const Eigen::Index shift = offset - k - t - 1;
            z(k) += weights_(k, t) * c.dot(fitted_outputs_.segment(shift, c.size()));
        }
    return z;
}

Eigen::VectorXd LongOrbitInjector::operator()(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd k = kernel_column(interpolant_.kernel, interpolant_.centers, x);
    return shifted_sum(section_solver_->solve(k).col(0));
}

LongOrbitResult algorithm2(const LongOrbit& orbit, const OutputMap& output, const SynthesisConfig& config) {
    const auto& params = config.observer;
    Stopwatch clock;
    const LongOrbitInjector injector(orbit, output, config.x_kernel, params);
    SynthesisResult out = empty_result(config);
    out.timings["interpolate"] = clock.lap();
    const Eigen::Index n = orbit.states.rows();
    const Eigen::Index count = n - params.truncation;
    out.injections.resize(count, params.order);
    out.targets = orbit.states.bottomRows(count);
    for (Eigen::Index i = 0; i < count; ++i) out.injections.row(i) = injector.at_index(params.truncation + i).transpose();
    for (Eigen::Index t = 0; t < n; ++t)
        out.output_bound = std::max(out.output_bound, std::abs(output(orbit.states.row(t).transpose())));
    out.timings["injection"] = clock.lap();
    out.truncation_bound = bound_or_nan(params, out.output_bound);
    fit_and_score(out, config, clock);
    return LongOrbitResult{std::move(out), injector.output_interpolant()};
}

SnapshotResult algorithm3(const SpectralScan& scan, const OutputMap& output, const SynthesisConfig& config) {
    const auto& params = config.observer;
    params.validate();
    Stopwatch clock;
    const SpectralModel model(scan, config.residual_threshold, config.spectral.psi_ridge);
    if (model.empty()) throw NumericError("algorithm3: no candidate passed the residual threshold");
    const Eigen::MatrixXd& points = scan.points;
    Eigen::VectorXd y(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) y(i) = output(points.row(i).transpose());
    InterpolantModel<double> interp = kernel_interpolate(points, y, scan.kernel);
    SynthesisResult out = empty_result(config);
    out.timings["interpolate"] = clock.lap();
    out.injections = spectral_injection_snapshots(model, interp, params);
    out.targets = points;
    out.output_bound = y.cwiseAbs().maxCoeff();
    out.truncation_bound = bound_or_nan(params, out.output_bound);
    out.timings["injection"] = clock.lap();
    fit_and_score(out, config, clock);
    return SnapshotResult{std::move(out), std::move(interp), model.size(), model.residuals().maxCoeff()};
}

SnapshotResult algorithm3(const SnapshotSet& snapshots, const OutputMap& output, const SynthesisConfig& config) {
    Stopwatch clock;
    auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(snapshots, config.x_kernel), config.spectral);
    const double basis_time = clock.lap();
    const SpectralScan scan =
        scan_candidates(basis, snapshots.successors, config.x_kernel, candidate_grid(config.candidates).values);
    const double scan_time = clock.lap();
    SnapshotResult out = algorithm3(scan, output, config);
    out.synthesis.timings["basis"] = basis_time;
    out.synthesis.timings["candidates"] = scan_time;
    return out;
}

EvaluationReport evaluate_observer(const DiscreteSystem& system, const StateEstimator& estimator,
                                   const ObserverMatrices<double>& matrices, const State& init, int steps,
                                   int settle_time) {
    if (steps <= settle_time || settle_time < 0) throw ArgumentError("evaluate_observer: need steps > settle_time >= 0");
    EvaluationReport report;
    report.settle_time = settle_time;
    report.truth.resize(steps, system.dim());
    report.outputs.resize(steps);
    State x = init;
    for (int t = 0; t < steps; ++t) {
        if (t > 0) x = system.advance(x);
        report.truth.row(t) = x.transpose();
        report.outputs(t) = system.output(x);
    }
    report.estimates = run_observer(matrices, estimator, report.outputs, Eigen::VectorXd::Zero(matrices.A.rows()).eval());
    const Eigen::Index window = steps - settle_time;
    const Eigen::MatrixXd truth = report.truth.bottomRows(window);
    report.mse = mean_squared_error(report.estimates.bottomRows(window), truth);
    const Eigen::RowVectorXd mean = truth.colwise().mean();
    report.variance = (truth.rowwise() - mean).rowwise().squaredNorm().mean();
    return report;
}

EvaluationReport evaluate_observer(const DiscreteSystem& system, const PseudoInverseModel<double>& model,
                                   const ObserverMatrices<double>& matrices, const State& init, int steps,
                                   int settle_time) {
    return evaluate_observer(
        system, [&model](const Eigen::VectorXd& z) -> Eigen::VectorXd { return model(z); }, matrices, init, steps,
        settle_time);
}

State test_initial_state(const DiscreteSystem& system, InitBox box, std::uint64_t seed, int burn_in) {
    State x = sample_initial_state(system.dim(), box, seed, 0);
    for (int s = 0; s < burn_in; ++s) x = system.advance(x);
    return x;
}

}  // namespace kkl
