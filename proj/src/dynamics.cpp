#include "kkl/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "kkl/errors.hpp"

namespace kkl {

namespace {

std::string describe(const State& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

void require_finite(const State& x, const std::string& context) {
    if (!x.allFinite()) throw NumericError(context + ": non-finite state " + describe(x));
}

}  // namespace

DiscreteSystem::DiscreteSystem(std::string name, int dim, StateMap step, OutputMap output, StateMap inverse)
    : name_(std::move(name)), dim_(dim), step_(std::move(step)), output_(std::move(output)),
      inverse_(std::move(inverse)) {
    if (dim_ < 1) throw ArgumentError("DiscreteSystem: dimension must be positive");
    if (!step_ || !output_) throw ArgumentError("DiscreteSystem: transition and output maps are required");
}

void DiscreteSystem::check(const State& x) const {
    if (x.size() != dim_)
        throw ArgumentError(name_ + ": expected state of dimension " + std::to_string(dim_) + ", got " +
                            std::to_string(x.size()));
}

State DiscreteSystem::advance(const State& x) const {
    check(x);
    return step_(x);
}

State DiscreteSystem::retreat(const State& x) const {
    check(x);
    if (!inverse_) throw PreconditionError(name_ + ": no inverse map declared");
    return inverse_(x);
}

double DiscreteSystem::output(const State& x) const {
    check(x);
    return output_(x);
}

Eigen::VectorXd DiscreteSystem::outputs(const Eigen::MatrixXd& states) const {
    Eigen::VectorXd y(states.rows());
    for (Eigen::Index i = 0; i < states.rows(); ++i) y(i) = output(states.row(i).transpose());
    return y;
}

DiscreteSystem DiscreteSystem::with_output(OutputMap output) const {
    return DiscreteSystem(name_, dim_, step_, std::move(output), inverse_);
}

State rk4_step(const VectorField& field, const State& x, double h) {
    const State k1 = field(x);
    const State k2 = field(x + 0.5 * h * k1);
    const State k3 = field(x + 0.5 * h * k2);
    const State k4 = field(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

DiscreteSystem discretize(const VectorField& field, int dim, double dt, int substeps, OutputMap output,
                          std::string name) {
    if (!(dt > 0)) throw ArgumentError("discretize: sampling time must be positive");
    if (substeps < 1) throw ArgumentError("discretize: need at least one integrator step");
    const double h = dt / substeps;
    auto flow = [field, h, substeps, name](const State& x, double sign) {
        State s = x;
        const VectorField directed = [&field, sign](const State& v) -> State { return sign * field(v); };
        for (int i = 0; i < substeps; ++i) s = rk4_step(directed, s, h);
        require_finite(s, name);
        return s;
    };
    return DiscreteSystem(
        std::move(name), dim, [flow](const State& x) { return flow(x, 1.0); }, std::move(output),
        [flow](const State& x) { return flow(x, -1.0); });
}

VectorField lorenz_field(double sigma, double rho, double b) {
    return [sigma, rho, b](const State& x) -> State {
        State dx(3);
        dx << sigma * (x(1) - x(0)), x(0) * (rho - x(2)) - x(1), x(0) * x(1) - b * x(2);
        return dx;
    };
}

DiscreteSystem lorenz_system() {
    return discretize(lorenz_field(), 3, 0.01, 1, [](const State& x) { return x(1); }, "lorenz");
}

VectorField limit_cycle_field(double alpha, double gamma) {
    if (!(alpha > 0)) throw ArgumentError("limit_cycle_field: alpha must be positive");
    return [alpha, gamma](const State& x) -> State {
        const double radial = alpha * (1.0 - x(0) * x(0) - x(1) * x(1));
        State dx(2);
        dx << radial * x(0) - gamma * x(1), radial * x(1) + gamma * x(0);
        return dx;
    };
}

DiscreteSystem limit_cycle_system(double alpha, double gamma) {
    return discretize(limit_cycle_field(alpha, gamma), 2, 1.0, 100, [](const State& x) { return 2.0 * x(0); },
                      "limit-cycle");
}

State circle_point(double theta) {
    State x(2);
    x << std::cos(theta), std::sin(theta);
    return x;
}

DiscreteSystem circle_rotation(double gamma) {
    auto rotate = [](double by) {
        return [by](const State& x) { return circle_point(std::atan2(x(1), x(0)) + by); };
    };
    return DiscreteSystem("circle", 2, rotate(gamma), [](const State& x) { return 2.0 * x(0); }, rotate(-gamma));
}

State sample_initial_state(int dim, InitBox box, std::uint64_t seed, std::uint64_t index) {
    State x(dim);
    for (int k = 0; k < dim; ++k) x(k) = box.lo + (box.hi - box.lo) * uniform01(seed, index, static_cast<std::uint64_t>(k));
    return x;
}

Eigen::MatrixXd OrbitSet::anchors() const {
    Eigen::MatrixXd out(size(), dim());
    for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = orbits[static_cast<std::size_t>(i)].row(0);
    return out;
}

OrbitSet generate_orbit_set(const DiscreteSystem& system, int n, int ell, int burn_in, InitBox box,
                            std::uint64_t seed) {
    if (n < 1 || ell < 0 || burn_in < 0) throw ArgumentError("generate_orbit_set: need n >= 1, ell >= 0, burn_in >= 0");
    OrbitSet out;
    out.history_length = ell;
    out.orbits.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        try {
            State x = sample_initial_state(system.dim(), box, seed, static_cast<std::uint64_t>(i));
            for (int s = 0; s < burn_in; ++s) x = system.advance(x);
            Eigen::MatrixXd hist(ell + 1, system.dim());
            // Forward simulation stored in reverse: the last state becomes the anchor.
            hist.row(ell) = x.transpose();
            for (int t = ell - 1; t >= 0; --t) {
                x = system.advance(x);
                hist.row(t) = x.transpose();
            }
            out.orbits[static_cast<std::size_t>(i)] = std::move(hist);
        } catch (const NumericError& e) {
            throw NumericError("orbit sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

LongOrbit generate_long_orbit(const DiscreteSystem& system, const State& init, int burn_in, int n) {
    if (n < 2) throw ArgumentError("generate_long_orbit: need n >= 2");
    State x = init;
    for (int s = 0; s < burn_in; ++s) x = system.advance(x);
    LongOrbit out;
    out.states.resize(n, system.dim());
    for (int t = 0; t < n; ++t) {
        if (t > 0) x = system.advance(x);
        out.states.row(t) = x.transpose();
    }
    return out;
}

SnapshotSet generate_snapshots(const DiscreteSystem& system, int n_orbits, int steps_per_orbit, int burn_in,
                               InitBox box, std::uint64_t seed) {
    if (n_orbits < 1 || steps_per_orbit < 1) throw ArgumentError("generate_snapshots: need orbits >= 1, steps >= 1");
    const Eigen::Index n = static_cast<Eigen::Index>(n_orbits) * steps_per_orbit;
    SnapshotSet out;
    out.successors.resize(n, system.dim());
    out.predecessors.resize(n, system.dim());
    Eigen::Index row = 0;
    for (int o = 0; o < n_orbits; ++o) {
        try {
            State x = sample_initial_state(system.dim(), box, seed, static_cast<std::uint64_t>(o));
            for (int s = 0; s < burn_in; ++s) x = system.advance(x);
            for (int s = 0; s < steps_per_orbit; ++s, ++row) {
                const State next = system.advance(x);
                out.predecessors.row(row) = x.transpose();
                out.successors.row(row) = next.transpose();
                x = next;
            }
        } catch (const NumericError& e) {
            throw NumericError("snapshot orbit " + std::to_string(o) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace kkl
