#include "kkl/app.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "kkl/config.hpp"
#include "kkl/errors.hpp"
#include "kkl/io.hpp"
#include "kkl/pipelines.hpp"

namespace kkl {

namespace fs = std::filesystem;

void set_thread_count(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

namespace {

using Clock = std::chrono::steady_clock;
using Manifest = std::vector<std::pair<std::string, std::string>>;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> system;
    std::optional<int> n, orbits, steps, burn_in;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "INI-style config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", opts.sets, "Override a config value, e.g. --set observer.beta=0.9");
    cmd->add_option("--threads", opts.threads, "Cap on worker threads (0 = library default)");
    cmd->add_option("--seed", opts.seed, "Random seed for data generation");
    cmd->add_option("--system", opts.system, "lorenz | circle | limit-cycle");
    cmd->add_option("--n", opts.n, "Number of anchors or long-orbit length");
    cmd->add_option("--orbits", opts.orbits, "Number of snapshot orbits");
    cmd->add_option("--steps", opts.steps, "Recorded steps per snapshot orbit");
    cmd->add_option("--burn-in", opts.burn_in, "Steps discarded before recording");
}

RunConfig resolve(const CommonOptions& opts, const std::function<void(RunConfig&)>& named = {}) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.system) cfg.system = *opts.system;
    if (opts.threads) cfg.threads = *opts.threads;
    if (opts.n) cfg.n = *opts.n;
    if (opts.orbits) cfg.orbits = *opts.orbits;
    if (opts.steps) cfg.steps = *opts.steps;
    if (opts.burn_in) cfg.burn_in = *opts.burn_in;
    if (named) named(cfg);
    for (const auto& s : opts.sets) {
        const auto eq = s.find('=');
        const auto dot = s.rfind('.', eq);
        if (eq == std::string::npos || dot == std::string::npos)
            throw ConfigError("--set expects section.key=value, got '" + s + "'");
        set_config_value(cfg, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1), "--set " + s);
    }
    validate(cfg);
    set_thread_count(cfg.threads);
    return cfg;
}

State default_init(const RunConfig& cfg, const DiscreteSystem& system) {
    if (!cfg.init.empty()) {
        if (static_cast<int>(cfg.init.size()) != system.dim())
            throw ConfigError("run.init has " + std::to_string(cfg.init.size()) + " entries, system dimension is " +
                              std::to_string(system.dim()));
        return Eigen::Map<const Eigen::VectorXd>(cfg.init.data(), static_cast<Eigen::Index>(cfg.init.size()));
    }
    if (cfg.system == "lorenz") return Eigen::Vector3d(5.0, 5.0, 5.0);
    return circle_point(0.0);
}

InitBox default_box(const RunConfig& cfg) {
    if (cfg.system == "lorenz") return InitBox{-15.0, 15.0};
    return InitBox{-1.0, 1.0};
}

std::string bounding_box(const Eigen::MatrixXd& states) {
    std::ostringstream os;
    os << std::setprecision(6);
    for (Eigen::Index c = 0; c < states.cols(); ++c)
        os << (c ? " x " : "") << "[" << states.col(c).minCoeff() << ", " << states.col(c).maxCoeff() << "]";
    return os.str();
}

Eigen::MatrixXd stack_orbits(const OrbitSet& orbits) {
    Eigen::MatrixXd all(orbits.size() * (orbits.history_length + 1), orbits.dim());
    Eigen::Index row = 0;
    for (const auto& h : orbits.orbits) {
        all.middleRows(row, h.rows()) = h;
        row += h.rows();
    }
    return all;
}

OrbitSet make_orbits(const RunConfig& cfg, const DiscreteSystem& sys) {
    return generate_orbit_set(sys, cfg.n, std::max(cfg.history, cfg.truncation), cfg.burn_in, default_box(cfg), cfg.seed);
}

LongOrbit make_long_orbit(const RunConfig& cfg, const DiscreteSystem& sys) {
    return generate_long_orbit(sys, default_init(cfg, sys), cfg.burn_in, cfg.n);
}

SnapshotSet make_snapshots(const RunConfig& cfg, const DiscreteSystem& sys) {
    return generate_snapshots(sys, cfg.orbits, cfg.steps, cfg.burn_in, default_box(cfg), cfg.seed);
}

State test_state(const RunConfig& cfg, const DiscreteSystem& sys) {
    return test_initial_state(sys, default_box(cfg), cfg.test_seed, cfg.burn_in);
}

void add_timings(Manifest& m, const std::map<std::string, double>& timings) {
    for (const auto& [k, v] : timings) m.emplace_back("time." + k, format_number(v));
}

Manifest base_manifest(const RunConfig& cfg, const std::string& command) {
    Manifest m{{"command", command}, {"config_hash", cfg.hash()}, {"seed", std::to_string(cfg.seed)}};
    for (const auto& kv : cfg.echo()) m.push_back(kv);
    return m;
}

// ---- generate ----

int cmd_generate(const RunConfig& cfg, const std::string& out_path, std::ostream& out) {
    const DiscreteSystem sys = cfg.build_system();
    const WriteOptions w{cfg.hash()};
    const fs::path path = out_path.empty() ? fs::path(cfg.system + "_" + cfg.regime + ".csv") : fs::path(out_path);
    if (cfg.regime == "orbits") {
        const OrbitSet orbits = generate_orbit_set(sys, cfg.n, cfg.history, cfg.burn_in, default_box(cfg), cfg.seed);
        write_orbit_set(path, orbits, w);
        out << "orbits: n = " << orbits.size() << ", ell = " << orbits.history_length
            << ", box = " << bounding_box(stack_orbits(orbits)) << "\n";
    } else if (cfg.regime == "long-orbit") {
        const LongOrbit orbit = make_long_orbit(cfg, sys);
        write_long_orbit(path, orbit, w);
        out << "long orbit: n = " << orbit.states.rows() << ", box = " << bounding_box(orbit.states) << "\n";
    } else {
        const SnapshotSet snaps = make_snapshots(cfg, sys);
        write_snapshots(path, snaps, w);
        out << "snapshots: pairs = " << snaps.successors.rows() << " (" << cfg.orbits << " orbits x " << cfg.steps
            << " steps), box = " << bounding_box(snaps.successors) << "\n";
    }
    out << "wrote " << path.string() << "\n";
    return exit_ok;
}

// ---- synthesize ----

struct Synthesized {
    SynthesisResult result;
    std::optional<SpectralModel> spectral;
    Manifest extra;
};

struct Partial {
    std::optional<SpectralModel> spectral;
    Manifest extra;
};

Synthesized synthesize(const RunConfig& cfg, int algorithm, const std::string& data_path) {
    const DiscreteSystem sys = cfg.build_system();
    const SynthesisConfig sc = cfg.synthesis();
    const OutputMap h = [&sys](const State& x) { return sys.output(x); };
    std::optional<SynthesisResult> result;
    Partial s{std::nullopt, {}};
    const auto start = Clock::now();
    if (algorithm == 1) {
        const OrbitSet orbits = data_path.empty() ? make_orbits(cfg, sys) : read_orbit_set(data_path);
        result.emplace(algorithm1(orbits, h, sc));
        s.extra.emplace_back("samples", std::to_string(orbits.size()));
    } else if (algorithm == 2) {
        const LongOrbit orbit = data_path.empty() ? make_long_orbit(cfg, sys) : read_long_orbit(data_path);
        LongOrbitResult r = algorithm2(orbit, h, sc);
        s.extra.emplace_back("interpolation_jitter", format_number(r.output_interpolant.jitter));
        result.emplace(std::move(r.synthesis));
        s.extra.emplace_back("samples", std::to_string(orbit.states.rows()));
    } else {
        const SnapshotSet snaps = data_path.empty() ? make_snapshots(cfg, sys) : read_snapshots(data_path);
        auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(snaps, sc.x_kernel), sc.spectral);
        const SpectralScan scan = scan_candidates(basis, snaps.successors, sc.x_kernel, candidate_grid(sc.candidates).values);
        SnapshotResult r = algorithm3(scan, h, sc);
        s.spectral.emplace(scan, sc.residual_threshold, sc.spectral.psi_ridge);
        s.extra.emplace_back("spectral.rank_used", std::to_string(basis->rank()));
        s.extra.emplace_back("spectral.survivors", std::to_string(r.survivors));
        s.extra.emplace_back("spectral.max_residual", format_number(r.max_residual));
        s.extra.emplace_back("samples", std::to_string(snaps.successors.rows()));
        result.emplace(std::move(r.synthesis));
    }
    s.extra.emplace_back("time.total_synthesis", format_number(seconds_since(start)));
    return Synthesized{std::move(*result), std::move(s.spectral), std::move(s.extra)};
}

int cmd_synthesize(const RunConfig& cfg, int algorithm, const std::string& data_path, const fs::path& out_dir,
                   bool spectral_coefficients, std::ostream& out) {
    const WriteOptions w{cfg.hash()};
    Synthesized s = synthesize(cfg, algorithm, data_path);
    fs::create_directories(out_dir);
    write_model(out_dir / "model.txt", s.result.model, w);
    write_injections(out_dir / "injections.csv", s.result.targets, s.result.injections, w);
    if (s.spectral) write_spectral_model(out_dir / "spectral.csv", *s.spectral, spectral_coefficients, w);

    const DiscreteSystem sys = cfg.build_system();
    const auto start = Clock::now();
    const EvaluationReport report = evaluate_observer(sys, s.result.model, build_matrices(cfg.synthesis().observer),
                                                      test_state(cfg, sys), cfg.test_steps, cfg.settle);
    const double eval_time = seconds_since(start);
    write_evaluation(out_dir / "evaluation.csv", out_dir / "trajectory.csv", report, w);

    Manifest m = base_manifest(cfg, "synthesize");
    m.emplace_back("algorithm", std::to_string(algorithm));
    m.emplace_back("data", data_path.empty() ? "regenerated" : data_path);
    m.emplace_back("training_mse", format_number(s.result.training_mse));
    m.emplace_back("output_bound", format_number(s.result.output_bound));
    m.emplace_back("truncation_bound", format_number(s.result.truncation_bound));
    m.emplace_back("closed_loop_mse", format_number(report.mse));
    m.emplace_back("closed_loop_variance", format_number(report.variance));
    m.insert(m.end(), s.extra.begin(), s.extra.end());
    add_timings(m, s.result.timings);
    m.emplace_back("time.evaluate", format_number(eval_time));
    write_manifest(out_dir / "manifest.txt", m);

    out << "algorithm " << algorithm << ": training MSE " << s.result.training_mse << ", closed-loop MSE "
        << report.mse << " (state variance " << report.variance << ")\n";
    out << "wrote " << out_dir.string() << "\n";
    return exit_ok;
}

// ---- tune ----

int cmd_tune(const RunConfig& cfg, const std::string& data_path, const fs::path& out_path, std::ostream& out) {
    const DiscreteSystem sys = cfg.build_system();
    const OrbitSet orbits = data_path.empty() ? make_orbits(cfg, sys) : read_orbit_set(data_path);
    SynthesisConfig sc = cfg.synthesis();
    const auto h = [&sys](const State& x) { return sys.output(x); };
    // Injections do not depend on the regression settings; reuse them across the grid.
    const SynthesisResult base = algorithm1(orbits, h, sc);
    const auto start = Clock::now();
    const GridSearchResult grid =
        grid_search(base.injections, base.targets, sc.z_kernel,
                    cfg.sigma_grid.empty() ? default_sigma_grid() : cfg.sigma_grid,
                    cfg.alpha_grid.empty() ? default_alpha_grid() : cfg.alpha_grid, cfg.folds, cfg.seed);
    const double elapsed = seconds_since(start);
    write_grid(out_path, grid, WriteOptions{cfg.hash()});
    Manifest m = base_manifest(cfg, "tune");
    m.emplace_back("best_sigma", format_number(grid.best_sigma));
    m.emplace_back("best_alpha", format_number(grid.best_alpha));
    m.emplace_back("best_mse", format_number(grid.best_mse));
    m.emplace_back("time.grid_search", format_number(elapsed));
    write_manifest(fs::path(out_path).replace_extension(".manifest.txt"), m);
    std::size_t failed = 0;
    for (const auto& c : grid.cells) failed += c.ok() ? 0 : 1;
    out << "best sigma = " << grid.best_sigma << ", alpha = " << grid.best_alpha << ", CV MSE = " << grid.best_mse
        << " (" << grid.cells.size() << " cells, " << failed << " failed)\n";
    out << "wrote " << out_path.string() << "\n";
    return exit_ok;
}

// ---- evaluate ----

int cmd_evaluate(const RunConfig& cfg, const std::string& model_path, const fs::path& out_dir, std::ostream& out) {
    const PseudoInverseModel<double> model = read_model(model_path);
    const DiscreteSystem sys = cfg.build_system();
    const auto matrices = build_matrices(cfg.synthesis().observer);
    if (model.input_dim() != matrices.A.rows())
        throw ConfigError("model expects " + std::to_string(model.input_dim()) + "-dimensional observer states, config has m = " +
                          std::to_string(matrices.A.rows()));
    if (model.output_dim() != sys.dim()) throw ConfigError("model output dimension does not match the system");
    const EvaluationReport report = evaluate_observer(sys, model, matrices, test_state(cfg, sys), cfg.test_steps, cfg.settle);
    fs::create_directories(out_dir);
    write_evaluation(out_dir / "evaluation.csv", out_dir / "trajectory.csv", report, WriteOptions{cfg.hash()});
    out << "closed-loop MSE " << report.mse << " (state variance " << report.variance << ", ratio "
        << report.mse / report.variance << ")\n";
    return exit_ok;
}

// ---- reproduce ----

std::string fixed(double v, int digits = 2) {
    if (!std::isfinite(v)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void print_row(std::ostream& out, const std::string& label, const std::vector<std::string>& cells) {
    out << std::left << std::setw(12) << label;
    for (const auto& c : cells) out << std::right << std::setw(10) << c;
    out << "\n";
}

int cmd_p_sweep(const RunConfig& cfg, const std::vector<int>& ps, const fs::path& out_dir, std::ostream& out) {
    const DiscreteSystem sys = cfg.build_system();
    const SynthesisConfig sc = cfg.synthesis();
    const auto h = [&sys](const State& x) { return sys.output(x); };
    const auto start = Clock::now();
    const SnapshotSet snaps = make_snapshots(cfg, sys);
    auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(snaps, sc.x_kernel), sc.spectral);
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "p_sweep.csv");
    csv << "# config_hash: " << cfg.hash() << "\np,survivors,max_residual,mse\n";
    std::vector<std::string> mses;
    std::vector<std::string> labels;
    for (int p : ps) {
        const SpectralScan scan = scan_candidates(basis, snaps.successors, sc.x_kernel, candidate_grid(p).values);
        const SnapshotResult r = algorithm3(scan, h, sc);
        csv << p << "," << r.survivors << "," << format_number(r.max_residual) << "," << format_number(r.synthesis.training_mse)
            << "\n";
        labels.push_back(std::to_string(p));
        mses.push_back(fixed(r.synthesis.training_mse));
        if (p == ps.back()) {
            std::ofstream scatter(out_dir / "p_sweep_scatter.csv");
            scatter << "x_1,x_2,x_3,xhat_1,xhat_2,xhat_3\n";
            const Eigen::MatrixXd pred = r.synthesis.model.predict(r.synthesis.injections);
            for (Eigen::Index i = 0; i < pred.rows(); ++i) {
                for (Eigen::Index c = 0; c < r.synthesis.targets.cols(); ++c) scatter << (c ? "," : "") << format_number(r.synthesis.targets(i, c));
                for (Eigen::Index c = 0; c < pred.cols(); ++c) scatter << "," << format_number(pred(i, c));
                scatter << "\n";
            }
        }
    }
    print_row(out, "p", labels);
    print_row(out, "MSE", mses);
    write_manifest(out_dir / "p_sweep.manifest.txt",
                   [&] {
                       Manifest m = base_manifest(cfg, "reproduce p-sweep");
                       m.emplace_back("spectral.rank_used", std::to_string(basis->rank()));
                       m.emplace_back("time.total", format_number(seconds_since(start)));
                       return m;
                   }());
    return exit_ok;
}

int cmd_threshold_sweep(const RunConfig& cfg, const std::vector<double>& thresholds, const fs::path& out_dir,
                        std::ostream& out) {
    const DiscreteSystem sys = cfg.build_system();
    SynthesisConfig sc = cfg.synthesis();
    const auto h = [&sys](const State& x) { return sys.output(x); };
    const auto start = Clock::now();
    const SnapshotSet snaps = make_snapshots(cfg, sys);
    auto basis = std::make_shared<const SpectralBasis>(build_snapshot_matrices(snaps, sc.x_kernel), sc.spectral);
    const SpectralScan scan = scan_candidates(basis, snaps.successors, sc.x_kernel, candidate_grid(sc.candidates).values);
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "threshold_sweep.csv");
    csv << "# config_hash: " << cfg.hash() << "\nthreshold,survivors,mse\n";
    std::vector<std::string> labels, counts, mses;
    for (double eps : thresholds) {
        sc.residual_threshold = eps;
        labels.push_back(format_number(eps));
        try {
            const SnapshotResult r = algorithm3(scan, h, sc);
            csv << format_number(eps) << "," << r.survivors << "," << format_number(r.synthesis.training_mse) << "\n";
            counts.push_back(std::to_string(r.survivors));
            mses.push_back(fixed(r.synthesis.training_mse));
        } catch (const NumericError& e) {
            csv << format_number(eps) << ",0,nan\n";
            counts.push_back("0");
            mses.push_back("n/a");
        }
    }
    print_row(out, "eps_res", labels);
    print_row(out, "p", counts);
    print_row(out, "MSE", mses);
    Manifest m = base_manifest(cfg, "reproduce threshold-sweep");
    m.emplace_back("spectral.rank_used", std::to_string(basis->rank()));
    m.emplace_back("time.total", format_number(seconds_since(start)));
    write_manifest(out_dir / "threshold_sweep.manifest.txt", m);
    return exit_ok;
}

int cmd_closed_loop(const RunConfig& cfg, const fs::path& out_dir, std::ostream& out) {
    const DiscreteSystem sys = cfg.build_system();
    const SynthesisConfig sc = cfg.synthesis();
    const auto matrices = build_matrices(sc.observer);
    const State init = test_state(cfg, sys);
    fs::create_directories(out_dir);
    Manifest m = base_manifest(cfg, "reproduce closed-loop");
    std::vector<std::string> labels, mses;
    double variance = 0.0;
    for (int algorithm = 1; algorithm <= 3; ++algorithm) {
        const auto start = Clock::now();
        const Synthesized s = synthesize(cfg, algorithm, "");
        const EvaluationReport report = evaluate_observer(sys, s.result.model, matrices, init, cfg.test_steps, cfg.settle);
        const std::string tag = "algorithm" + std::to_string(algorithm);
        write_evaluation(out_dir / (tag + "_evaluation.csv"), out_dir / (tag + "_trajectory.csv"), report,
                         WriteOptions{cfg.hash()});
        labels.push_back("Alg. " + std::to_string(algorithm));
        mses.push_back(fixed(report.mse));
        variance = report.variance;
        m.emplace_back(tag + ".mse", format_number(report.mse));
        m.emplace_back(tag + ".time", format_number(seconds_since(start)));
    }
    labels.push_back("variance");
    mses.push_back(fixed(variance));
    print_row(out, "", labels);
    print_row(out, "MSE", mses);
    m.emplace_back("state_variance", format_number(variance));
    write_manifest(out_dir / "closed_loop.manifest.txt", m);
    return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Data-driven KKL observer synthesis"};
    app.require_subcommand(1);

    CommonOptions gen_opts, syn_opts, tune_opts, eval_opts, rep_opts;

    auto* gen = app.add_subcommand("generate", "Generate a dataset and write it as CSV");
    add_common(gen, gen_opts);
    std::optional<std::string> regime;
    std::optional<int> gen_ell;
    std::string gen_out;
    gen->add_option("--regime", regime, "orbits | long-orbit | snapshots");
    gen->add_option("--ell", gen_ell, "Backward history length per anchor");
    gen->add_option("--out", gen_out, "Output CSV path");

    auto* syn = app.add_subcommand("synthesize", "Run one synthesis algorithm and evaluate the observer");
    add_common(syn, syn_opts);
    int algorithm = 1;
    std::string syn_data;
    std::string syn_out = "kkl_out";
    bool spectral_coefficients = false;
    syn->add_option("--algorithm", algorithm, "1 (many orbits), 2 (long orbit), 3 (snapshots)")->check(CLI::Range(1, 3));
    syn->add_option("--data", syn_data, "Dataset CSV; regenerated from the config when omitted");
    syn->add_option("--out-dir", syn_out, "Output directory");
    syn->add_flag("--spectral-coefficients", spectral_coefficients, "Also write eigenfunction coefficients");

    auto* tune = app.add_subcommand("tune", "Cross-validated grid search over kernel bandwidth and ridge");
    add_common(tune, tune_opts);
    std::string tune_data;
    std::string tune_out = "grid.csv";
    tune->add_option("--data", tune_data, "Orbit-set CSV; regenerated from the config when omitted");
    tune->add_option("--out", tune_out, "Grid CSV path");

    auto* eval = app.add_subcommand("evaluate", "Closed-loop evaluation of a stored model");
    add_common(eval, eval_opts);
    std::string eval_model;
    std::string eval_out = "kkl_eval";
    eval->add_option("--model", eval_model, "Model file written by synthesize")->required();
    eval->add_option("--out-dir", eval_out, "Output directory");

    auto* rep = app.add_subcommand("reproduce", "Regenerate data and rerun the Lorenz experiment tables");
    add_common(rep, rep_opts);
    rep->require_subcommand(1);
    std::string rep_out = "kkl_reproduce";
    std::vector<int> ps{100, 200, 400, 600, 800, 1000, 2000};
    std::vector<double> thresholds{0.04, 0.03, 0.02, 0.01, 0.0075, 0.005};
    rep->add_option("--out-dir", rep_out, "Output directory");
    auto* p_sweep = rep->add_subcommand("p-sweep", "Training MSE against candidate grid size");
    p_sweep->add_option("--p", ps, "Grid sizes");
    auto* t_sweep = rep->add_subcommand("threshold-sweep", "Survivors and MSE against residual threshold");
    t_sweep->add_option("--thresholds", thresholds, "Residual thresholds");
    auto* closed = rep->add_subcommand("closed-loop", "Closed-loop MSE of the three observers");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (gen->parsed()) {
            const RunConfig cfg = resolve(gen_opts, [&](RunConfig& c) {
                if (regime) c.regime = *regime;
                if (gen_ell) c.history = *gen_ell;
            });
            return cmd_generate(cfg, gen_out, out);
        }
        if (syn->parsed()) return cmd_synthesize(resolve(syn_opts), algorithm, syn_data, syn_out, spectral_coefficients, out);
        if (tune->parsed()) return cmd_tune(resolve(tune_opts), tune_data, tune_out, out);
        if (eval->parsed()) return cmd_evaluate(resolve(eval_opts), eval_model, eval_out, out);
        if (rep->parsed()) {
            const RunConfig cfg = resolve(rep_opts, [](RunConfig& c) { c.regime = "snapshots"; });
            if (p_sweep->parsed()) return cmd_p_sweep(cfg, ps, rep_out, out);
            if (t_sweep->parsed()) return cmd_threshold_sweep(cfg, thresholds, rep_out, out);
            if (closed->parsed()) return cmd_closed_loop(cfg, rep_out, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const ArgumentError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return exit_config;
    } catch (const PreconditionError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return exit_config;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_config;
}

}  // namespace kkl
