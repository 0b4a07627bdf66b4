#ifndef KKL_PIPELINES_HPP
#define KKL_PIPELINES_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "kkl/dynamics.hpp"
#include "kkl/kernels.hpp"
#include "kkl/observer.hpp"
#include "kkl/regression.hpp"
#include "kkl/spectral.hpp"

namespace kkl {

struct SynthesisConfig {
    DeepKKLParams<double> observer{3, 0.9, 50};
    RadialKernel<double> x_kernel = RadialKernel<double>::wendland(3, 1, 10.0);
    RadialKernel<double> z_kernel = RadialKernel<double>::gaussian(10.0);
    double alpha = 1e-4;
    int candidates = 800;
    std::optional<double> residual_threshold;
    SpectralOptions spectral;
    std::uint64_t seed = 0;
};

struct SynthesisResult {
    PseudoInverseModel<double> model;
    Eigen::MatrixXd injections;  // one z per row
    Eigen::MatrixXd targets;     // matching states
    double training_mse = 0.0;
    double output_bound = 0.0;                             // max |y| over the training data
    double truncation_bound = std::numeric_limits<double>::quiet_NaN();  // NaN when beta~ >= 1
    std::map<std::string, double> timings;                // seconds per stage
};

SynthesisResult algorithm1(const OrbitSet& orbits, const OutputMap& output, const SynthesisConfig& config);

// Output values h(x^(i)) with the interpolant anchored on x^(ell..n-1) of a long orbit.
class LongOrbitInjector {
public:
    LongOrbitInjector(const LongOrbit& orbit, const OutputMap& output, const RadialKernel<double>& kernel,
                      const DeepKKLParams<double>& params);

    const InterpolantModel<double>& output_interpolant() const { return interpolant_; }
    // Injection at the orbit point x^(j), ell <= j < n.
    Eigen::VectorXd at_index(Eigen::Index j) const;
    // Injection at an arbitrary state through the interpolated kernel section.
    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd shifted_sum(const Eigen::VectorXd& section_coeffs) const;

    Eigen::MatrixXd states_;
    DeepKKLParams<double> params_;
    Eigen::MatrixXd weights_;
    InterpolantModel<double> interpolant_;
    Eigen::VectorXd fitted_outputs_;  // interpolant at every orbit point
    std::optional<SymmetricSolver<double>> section_solver_;
};

struct LongOrbitResult {
    SynthesisResult synthesis;
    InterpolantModel<double> output_interpolant;
};

LongOrbitResult algorithm2(const LongOrbit& orbit, const OutputMap& output, const SynthesisConfig& config);

struct SnapshotResult {
    SynthesisResult synthesis;
    InterpolantModel<double> output_interpolant;
    Eigen::Index survivors = 0;
    double max_residual = 0.0;
};

// Runs the residual-filtered spectral synthesis on an already scanned candidate set.
SnapshotResult algorithm3(const SpectralScan& scan, const OutputMap& output, const SynthesisConfig& config);
SnapshotResult algorithm3(const SnapshotSet& snapshots, const OutputMap& output, const SynthesisConfig& config);

struct EvaluationReport {
    double mse = 0.0;
    double variance = 0.0;
    int settle_time = 0;
    Eigen::MatrixXd truth;
    Eigen::MatrixXd estimates;
    Eigen::VectorXd outputs;
};

using StateEstimator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Simulates the system from `init`, drives the observer from z_0 = 0 and scores t >= settle_time.
EvaluationReport evaluate_observer(const DiscreteSystem& system, const StateEstimator& estimator,
                                   const ObserverMatrices<double>& matrices, const State& init, int steps,
                                   int settle_time = 300);
EvaluationReport evaluate_observer(const DiscreteSystem& system, const PseudoInverseModel<double>& model,
                                   const ObserverMatrices<double>& matrices, const State& init, int steps,
                                   int settle_time = 300);

// Fresh draw from the box followed by burn-in.
State test_initial_state(const DiscreteSystem& system, InitBox box, std::uint64_t seed, int burn_in);

}  // namespace kkl

#endif
