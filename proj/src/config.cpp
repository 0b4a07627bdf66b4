#include "kkl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kkl/errors.hpp"
#include "kkl/io.hpp"

namespace kkl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& where) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(where + ": not a number: '" + v + "'");
    return out;
}

template <typename Int>
Int to_int(const std::string& v, const std::string& where) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(where + ": not an integer: '" + v + "'");
    return out;
}

std::vector<double> to_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::istringstream is(v);
    for (std::string cell; std::getline(is, cell, ',');) out.push_back(to_double(trim(cell), where));
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
}

void set_kernel(KernelConfig& k, const std::string& key, const std::string& value, const std::string& where) {
    if (key == "family")
        k.family = value;
    else if (key == "dim")
        k.dim = to_int<int>(value, where);
    else if (key == "k")
        k.k = to_int<int>(value, where);
    else if (key == "nu")
        k.nu = value;
    else if (key == "sigma")
        k.sigma = to_double(value, where);
    else
        throw ConfigError(where + ": unknown key '" + key + "'");
}

void echo_kernel(std::vector<std::pair<std::string, std::string>>& out, const std::string& section, const KernelConfig& k) {
    out.emplace_back(section + ".family", k.family);
    if (k.family == "wendland") {
        out.emplace_back(section + ".dim", std::to_string(k.dim));
        out.emplace_back(section + ".k", std::to_string(k.k));
    }
    if (k.family == "matern") out.emplace_back(section + ".nu", k.nu);
    out.emplace_back(section + ".sigma", format_number(k.sigma));
}

}  // namespace

IniDocument parse_ini(const std::string& text, const std::string& source) {
    IniDocument doc;
    std::istringstream is(text);
    std::string section;
    std::string line;
    for (int no = 1; std::getline(is, line); ++no) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            doc[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (doc[section].count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        doc[section][key] = IniEntry{trim(line.substr(eq + 1)), no};
    }
    return doc;
}

RadialKernel<double> KernelConfig::build() const {
    try {
        if (family == "wendland") return RadialKernel<double>::wendland(dim, k, sigma);
        if (family == "gaussian") return RadialKernel<double>::gaussian(sigma);
        if (family == "matern") return parse_kernel_spec("matern nu=" + nu + " sigma=" + format_number(sigma));
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
    throw ConfigError("kernel: unknown family '" + family + "'");
}

std::vector<double> default_sigma_grid() {
    std::vector<double> out;
    for (double decade : {0.1, 1.0, 10.0, 100.0})
        for (double mult : {1.0, 2.0, 5.0}) out.push_back(decade * mult);
    return out;
}

std::vector<double> default_alpha_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

void set_config_value(RunConfig& c, const std::string& section, const std::string& key, const std::string& v,
                      const std::string& where) {
    const auto unknown = [&] { throw ConfigError(where + ": unknown key '" + key + "' in section [" + section + "]"); };
    if (section == "system") {
        if (key == "name") c.system = v;
        else if (key == "alpha") c.cycle_alpha = to_double(v, where);
        else if (key == "gamma") c.cycle_gamma = to_double(v, where);
        else unknown();
    } else if (section == "observer") {
        if (key == "m") c.order = to_int<int>(v, where);
        else if (key == "beta") c.beta = to_double(v, where);
        else if (key == "ell") c.truncation = to_int<int>(v, where);
        else unknown();
    } else if (section == "kernel.x") {
        set_kernel(c.x_kernel, key, v, where);
    } else if (section == "kernel.z") {
        set_kernel(c.z_kernel, key, v, where);
    } else if (section == "krr") {
        if (key == "alpha") c.alpha = to_double(v, where);
        else if (key == "folds") c.folds = to_int<int>(v, where);
        else if (key == "sigma_grid") c.sigma_grid = to_list(v, where);
        else if (key == "alpha_grid") c.alpha_grid = to_list(v, where);
        else unknown();
    } else if (section == "spectral") {
        if (key == "p") c.candidates = to_int<int>(v, where);
        else if (key == "threshold") c.threshold = (v == "none" || v.empty()) ? std::nullopt : std::optional<double>(to_double(v, where));
        else if (key == "gram_ridge") c.gram_ridge = to_double(v, where);
        else if (key == "psi_ridge") c.psi_ridge = to_double(v, where);
        else if (key == "rank") c.rank = to_int<int>(v, where);
        else if (key == "oversample") c.oversample = to_int<int>(v, where);
        else if (key == "power_iterations") c.power_iterations = to_int<int>(v, where);
        else unknown();
    } else if (section == "run") {
        if (key == "seed") c.seed = to_int<std::uint64_t>(v, where);
        else if (key == "regime") c.regime = v;
        else if (key == "n") c.n = to_int<int>(v, where);
        else if (key == "history") c.history = to_int<int>(v, where);
        else if (key == "orbits") c.orbits = to_int<int>(v, where);
        else if (key == "steps") c.steps = to_int<int>(v, where);
        else if (key == "burn_in") c.burn_in = to_int<int>(v, where);
        else if (key == "init") c.init = to_list(v, where);
        else if (key == "test_seed") c.test_seed = to_int<std::uint64_t>(v, where);
        else if (key == "test_steps") c.test_steps = to_int<int>(v, where);
        else if (key == "settle") c.settle = to_int<int>(v, where);
        else if (key == "threads") c.threads = to_int<int>(v, where);
        else unknown();
    } else {
        throw ConfigError(where + ": unknown section [" + section + "]");
    }
}

RunConfig apply_ini(const IniDocument& doc, const std::string& source, RunConfig base) {
    for (const auto& [section, entries] : doc)
        for (const auto& [key, entry] : entries)
            set_config_value(base, section, key, entry.value, source + ":" + std::to_string(entry.line));
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return apply_ini(parse_ini(ss.str(), path.string()), path.string(), std::move(base));
}

void validate(const RunConfig& c) {
    if (c.system != "lorenz" && c.system != "circle" && c.system != "limit-cycle")
        throw ConfigError("system.name must be lorenz, circle or limit-cycle");
    if (c.regime != "orbits" && c.regime != "long-orbit" && c.regime != "snapshots")
        throw ConfigError("run.regime must be orbits, long-orbit or snapshots");
    try {
        DeepKKLParams<double>{c.order, c.beta, c.truncation}.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("observer: ") + e.what());
    }
    c.x_kernel.build();
    c.z_kernel.build();
    if (c.alpha < 0) throw ConfigError("krr.alpha must be non-negative");
    if (c.folds < 2) throw ConfigError("krr.folds must be at least 2");
    if (c.candidates < 1) throw ConfigError("spectral.p must be positive");
    if (c.rank < 0 || c.oversample < 0 || c.power_iterations < 0) throw ConfigError("spectral sizes must be non-negative");
    if (c.n < 1 || c.history < 0 || c.orbits < 1 || c.steps < 1 || c.burn_in < 0)
        throw ConfigError("run sizes must be positive");
    if (c.test_steps <= c.settle || c.settle < 0) throw ConfigError("run.test_steps must exceed run.settle");
    if (c.threads < 0) throw ConfigError("run.threads must be non-negative");
}

DiscreteSystem RunConfig::build_system() const {
    if (system == "lorenz") return lorenz_system();
    if (system == "circle") return circle_rotation(cycle_gamma);
    if (system == "limit-cycle") return limit_cycle_system(cycle_alpha, cycle_gamma);
    throw ConfigError("unknown system '" + system + "'");
}

SynthesisConfig RunConfig::synthesis() const {
    SynthesisConfig s;
    s.observer = DeepKKLParams<double>{order, beta, truncation};
    s.x_kernel = x_kernel.build();
    s.z_kernel = z_kernel.build();
    s.alpha = alpha;
    s.candidates = candidates;
    s.residual_threshold = threshold;
    s.spectral.gram_ridge = gram_ridge;
    s.spectral.psi_ridge = psi_ridge;
    s.spectral.max_rank = rank;
    s.spectral.oversample = oversample;
    s.spectral.power_iterations = power_iterations;
    s.spectral.seed = seed;
    s.seed = seed;
    return s;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out{
        {"system.name", system},
        {"system.alpha", format_number(cycle_alpha)},
        {"system.gamma", format_number(cycle_gamma)},
        {"observer.m", std::to_string(order)},
        {"observer.beta", format_number(beta)},
        {"observer.ell", std::to_string(truncation)},
    };
    echo_kernel(out, "kernel.x", x_kernel);
    echo_kernel(out, "kernel.z", z_kernel);
    out.emplace_back("krr.alpha", format_number(alpha));
    out.emplace_back("krr.folds", std::to_string(folds));
    out.emplace_back("krr.sigma_grid", join(sigma_grid.empty() ? default_sigma_grid() : sigma_grid));
    out.emplace_back("krr.alpha_grid", join(alpha_grid.empty() ? default_alpha_grid() : alpha_grid));
    out.emplace_back("spectral.p", std::to_string(candidates));
    out.emplace_back("spectral.threshold", threshold ? format_number(*threshold) : "none");
    out.emplace_back("spectral.gram_ridge", format_number(gram_ridge));
    out.emplace_back("spectral.psi_ridge", format_number(psi_ridge));
    out.emplace_back("spectral.rank", std::to_string(rank));
    out.emplace_back("spectral.oversample", std::to_string(oversample));
    out.emplace_back("spectral.power_iterations", std::to_string(power_iterations));
    out.emplace_back("run.seed", std::to_string(seed));
    out.emplace_back("run.regime", regime);
    out.emplace_back("run.n", std::to_string(n));
    out.emplace_back("run.history", std::to_string(history));
    out.emplace_back("run.orbits", std::to_string(orbits));
    out.emplace_back("run.steps", std::to_string(steps));
    out.emplace_back("run.burn_in", std::to_string(burn_in));
    out.emplace_back("run.init", join(init));
    out.emplace_back("run.test_seed", std::to_string(test_seed));
    out.emplace_back("run.test_steps", std::to_string(test_steps));
    out.emplace_back("run.settle", std::to_string(settle));
    return out;
}

std::string RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : echo())
        for (const char ch : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace kkl
