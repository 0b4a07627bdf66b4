#ifndef KKL_DYNAMICS_HPP
#define KKL_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kkl/random.hpp"
#include "kkl/types.hpp"

namespace kkl {

using State = Eigen::VectorXd;
using StateMap = std::function<State(const State&)>;
using VectorField = std::function<State(const State&)>;
using OutputMap = std::function<double(const State&)>;

class DiscreteSystem {
public:
    DiscreteSystem(std::string name, int dim, StateMap step, OutputMap output, StateMap inverse = {});

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    bool has_inverse() const { return static_cast<bool>(inverse_); }

    State advance(const State& x) const;
    State retreat(const State& x) const;
    double output(const State& x) const;
    // Outputs of a point set stored one state per row.
    Eigen::VectorXd outputs(const Eigen::MatrixXd& states) const;

    DiscreteSystem with_output(OutputMap output) const;

private:
    void check(const State& x) const;

    std::string name_;
    int dim_;
    StateMap step_;
    OutputMap output_;
    StateMap inverse_;
};

State rk4_step(const VectorField& field, const State& x, double h);

// Sampled flow map: `substeps` RK4 steps per sample interval dt; the inverse integrates -field.
DiscreteSystem discretize(const VectorField& field, int dim, double dt, int substeps, OutputMap output,
                          std::string name = "discretized");

VectorField lorenz_field(double sigma = 10.0, double rho = 28.0, double b = 8.0 / 3.0);
// dt = 0.01, one RK4 step per sample, output x_2.
DiscreteSystem lorenz_system();

VectorField limit_cycle_field(double alpha, double gamma);
// dt = 1 with 100 RK4 substeps, output 2 x_1.
DiscreteSystem limit_cycle_system(double alpha, double gamma);
// Exact rotation by gamma on the unit circle, output 2 x_1.
DiscreteSystem circle_rotation(double gamma);
State circle_point(double theta);

struct InitBox {
    double lo = -15.0;
    double hi = 15.0;
};

// orbits[i] has rows t = 0..ell holding x^(i,-t); row 0 is the anchor.
struct OrbitSet {
    int history_length = 0;
    std::vector<Eigen::MatrixXd> orbits;

    Eigen::Index size() const { return static_cast<Eigen::Index>(orbits.size()); }
    int dim() const { return orbits.empty() ? 0 : static_cast<int>(orbits.front().cols()); }
    Eigen::MatrixXd anchors() const;
};

struct LongOrbit {
    Eigen::MatrixXd states;  // row t is x^(t)
};

struct SnapshotSet {
    Eigen::MatrixXd successors;    // x^(i)
    Eigen::MatrixXd predecessors;  // f^{-1}(x^(i))
};

OrbitSet generate_orbit_set(const DiscreteSystem& system, int n, int ell, int burn_in, InitBox box,
                            std::uint64_t seed);
LongOrbit generate_long_orbit(const DiscreteSystem& system, const State& init, int burn_in, int n);
// Each orbit records steps_per_orbit + 1 consecutive states after burn-in, giving steps_per_orbit pairs.
SnapshotSet generate_snapshots(const DiscreteSystem& system, int n_orbits, int steps_per_orbit, int burn_in,
                               InitBox box, std::uint64_t seed);
State sample_initial_state(int dim, InitBox box, std::uint64_t seed, std::uint64_t index);

}  // namespace kkl

#endif
