#ifndef KKL_CONFIG_HPP
#define KKL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kkl/dynamics.hpp"
#include "kkl/pipelines.hpp"

namespace kkl {

struct IniEntry {
    std::string value;
    int line = 0;
};

// section -> key -> entry; keys before any section header land in section "".
using IniDocument = std::map<std::string, std::map<std::string, IniEntry>>;

IniDocument parse_ini(const std::string& text, const std::string& source);

struct KernelConfig {
    std::string family;
    int dim = 3;
    int k = 1;
    std::string nu = "3/2";
    double sigma = 10.0;

    RadialKernel<double> build() const;
};

struct RunConfig {
    // [system]
    std::string system = "lorenz";
    double cycle_alpha = 0.2;
    double cycle_gamma = 0.25;
    // [observer]
    int order = 3;
    double beta = 0.9;
    int truncation = 50;
    // [kernel.x], [kernel.z]
    KernelConfig x_kernel{"wendland", 3, 1, "3/2", 10.0};
    KernelConfig z_kernel{"gaussian", 3, 1, "3/2", 10.0};
    // [krr]
    double alpha = 1e-4;
    int folds = 5;
    std::vector<double> sigma_grid;
    std::vector<double> alpha_grid;
    // [spectral]
    int candidates = 800;
    std::optional<double> threshold;
    double gram_ridge = 1e-10;
    double psi_ridge = 1e-8;
    int rank = 300;
    int oversample = 100;
    int power_iterations = 4;
    // [run]
    std::uint64_t seed = 7;
    std::string regime = "orbits";
    int n = 1000;
    int history = 100;
    int orbits = 250;
    int steps = 20;
    int burn_in = 300;
    std::vector<double> init;
    std::uint64_t test_seed = 3;
    int test_steps = 1000;
    int settle = 300;
    int threads = 0;

    DiscreteSystem build_system() const;
    SynthesisConfig synthesis() const;
    // Canonical "section.key = value" lines; the config hash is taken over these.
    std::vector<std::pair<std::string, std::string>> echo() const;
    std::string hash() const;
};

// Default grids used by tuning when none are configured.
std::vector<double> default_sigma_grid();
std::vector<double> default_alpha_grid();

// Applies a parsed document on top of `base`; unknown sections or keys are rejected.
RunConfig apply_ini(const IniDocument& doc, const std::string& source, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
// Sets "section.key" from a string, as used by command-line overrides.
void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
                      const std::string& where);
void validate(const RunConfig& cfg);

}  // namespace kkl

#endif
