#include "kkl/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kkl {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string where(const fs::path& path, int line) { return path.string() + ":" + std::to_string(line); }

double parse_cell(const std::string& cell, const fs::path& path, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
        throw IoError(where(path, line) + ": not a number: '" + cell + "'");
    return v;
}

std::ofstream open_out(const fs::path& path, const WriteOptions& opts) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(path.string() + ": cannot create parent directory: " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    if (!opts.config_hash.empty()) out << "# config_hash: " << opts.config_hash << "\n";
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError(path.string() + ": write failed");
}

std::string numbered(const std::string& stem, Eigen::Index count) {
    std::string s;
    for (Eigen::Index i = 1; i <= count; ++i) s += "," + stem + "_" + std::to_string(i);
    return s;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    for (Eigen::Index i = 0; i < row.size(); ++i) out << "," << format_number(row(i));
}

void require_columns(const CsvTable& t, std::size_t count, const fs::path& path) {
    if (t.header.size() != count)
        throw IoError(path.string() + ": expected " + std::to_string(count) + " columns, header has " +
                      std::to_string(t.header.size()));
}

int dim_from_header(const CsvTable& t, const std::string& prefix, const fs::path& path) {
    int d = 0;
    for (const auto& h : t.header)
        if (h.rfind(prefix, 0) == 0) ++d;
    if (d == 0) throw IoError(path.string() + ": no '" + prefix + "' columns in header");
    return d;
}

// Splits a sectioned text file into its header lines and named blocks.
struct Sections {
    std::vector<std::pair<int, std::string>> preamble;
    std::map<std::string, std::vector<std::pair<int, std::string>>> blocks;
};

Sections read_sections(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    Sections s;
    std::string current;
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            current = line.substr(1, line.size() - 2);
            s.blocks[current];
            continue;
        }
        (current.empty() ? s.preamble : s.blocks[current]).emplace_back(no, line);
    }
    return s;
}

Eigen::MatrixXd parse_block(const std::vector<std::pair<int, std::string>>& lines, const fs::path& path,
                            Eigen::Index cols) {
    if (lines.empty()) throw IoError(path.string() + ": missing block header");
    Eigen::MatrixXd M(static_cast<Eigen::Index>(lines.size()) - 1, cols);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r].second);
        if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw IoError(where(path, lines[r].first) + ": expected " + std::to_string(cols) + " fields");
        for (Eigen::Index c = 0; c < cols; ++c)
            M(static_cast<Eigen::Index>(r) - 1, c) = parse_cell(cells[static_cast<std::size_t>(c)], path, lines[r].first);
    }
    return M;
}

}  // namespace

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open for reading");
    CsvTable t;
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (t.header.empty()) {
            t.header = split(s);
            continue;
        }
        const auto cells = split(s);
        if (cells.size() != t.header.size())
            throw IoError(where(path, no) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                          std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, path, no));
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(no);
    }
    if (t.header.empty()) throw IoError(path.string() + ": missing header row");
    return t;
}

void write_orbit_set(const fs::path& path, const OrbitSet& orbits, const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "orbit_id,t_offset" << numbered("x", orbits.dim()) << "\n";
    for (Eigen::Index i = 0; i < orbits.size(); ++i) {
        const auto& hist = orbits.orbits[static_cast<std::size_t>(i)];
        for (Eigen::Index t = hist.rows() - 1; t >= 0; --t) {
            out << i << "," << -t;
            write_row(out, hist.row(t));
            out << "\n";
        }
    }
    finish(out, path);
}

OrbitSet read_orbit_set(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const int d = dim_from_header(t, "x_", path);
    require_columns(t, static_cast<std::size_t>(d) + 2, path);
    OrbitSet out;
    std::vector<std::vector<double>> current;
    long current_id = -1;
    auto flush = [&](int line) {
        if (current.empty()) return;
        const auto len = static_cast<Eigen::Index>(current.size());
        if (out.orbits.empty())
            out.history_length = static_cast<int>(len) - 1;
        else if (len != out.history_length + 1)
            throw IoError(where(path, line) + ": orbits have inconsistent history lengths");
        Eigen::MatrixXd hist(len, d);
        // Rows arrive oldest first; row 0 of the stored history is the anchor.
        for (Eigen::Index r = 0; r < len; ++r)
            for (int c = 0; c < d; ++c) hist(len - 1 - r, c) = current[static_cast<std::size_t>(r)][static_cast<std::size_t>(c) + 2];
        out.orbits.push_back(std::move(hist));
        current.clear();
    };
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const long id = static_cast<long>(row[0]);
        if (id != current_id) {
            if (!current.empty() && current.back()[1] != 0)
                throw IoError(where(path, t.line_numbers[r]) + ": orbit must end at t_offset 0");
            flush(t.line_numbers[r]);
            if (id != static_cast<long>(out.orbits.size()))
                throw IoError(where(path, t.line_numbers[r]) + ": orbit ids must be consecutive from 0");
            current_id = id;
        }
        if (row[1] > 0) throw IoError(where(path, t.line_numbers[r]) + ": t_offset must be <= 0");
        if (!current.empty() && row[1] != current.back()[1] + 1)
            throw IoError(where(path, t.line_numbers[r]) + ": t_offset must increase by one within an orbit");
        current.push_back(row);
    }
    if (!current.empty() && current.back()[1] != 0)
        throw IoError(path.string() + ": last row of each orbit must have t_offset 0");
    flush(t.line_numbers.empty() ? 0 : t.line_numbers.back());
    return out;
}

void write_long_orbit(const fs::path& path, const LongOrbit& orbit, const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "t" << numbered("x", orbit.states.cols()) << "\n";
    for (Eigen::Index t = 0; t < orbit.states.rows(); ++t) {
        out << t;
        write_row(out, orbit.states.row(t));
        out << "\n";
    }
    finish(out, path);
}

LongOrbit read_long_orbit(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const int d = dim_from_header(t, "x_", path);
    require_columns(t, static_cast<std::size_t>(d) + 1, path);
    LongOrbit out;
    out.states.resize(static_cast<Eigen::Index>(t.rows.size()), d);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][0] != static_cast<double>(r))
            throw IoError(where(path, t.line_numbers[r]) + ": time index must count up from 0");
        for (int c = 0; c < d; ++c) out.states(static_cast<Eigen::Index>(r), c) = t.rows[r][static_cast<std::size_t>(c) + 1];
    }
    return out;
}

void write_snapshots(const fs::path& path, const SnapshotSet& snapshots, const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "pair_id" << numbered("x", snapshots.successors.cols()) << numbered("xprev", snapshots.predecessors.cols())
        << "\n";
    for (Eigen::Index i = 0; i < snapshots.successors.rows(); ++i) {
        out << i;
        write_row(out, snapshots.successors.row(i));
        write_row(out, snapshots.predecessors.row(i));
        out << "\n";
    }
    finish(out, path);
}

SnapshotSet read_snapshots(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const int d = dim_from_header(t, "xprev_", path);
    require_columns(t, 2 * static_cast<std::size_t>(d) + 1, path);
    SnapshotSet out;
    const auto n = static_cast<Eigen::Index>(t.rows.size());
    out.successors.resize(n, d);
    out.predecessors.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = t.rows[static_cast<std::size_t>(r)];
        for (int c = 0; c < d; ++c) {
            out.successors(r, c) = row[static_cast<std::size_t>(c) + 1];
            out.predecessors(r, c) = row[static_cast<std::size_t>(c + d) + 1];
        }
    }
    return out;
}

void write_injections(const fs::path& path, const Eigen::MatrixXd& states, const Eigen::MatrixXd& injections,
                      const WriteOptions& opts) {
    if (states.rows() != injections.rows()) throw ArgumentError("write_injections: row counts differ");
    auto out = open_out(path, opts);
    out << "orbit_id" << numbered("x", states.cols()) << numbered("z", injections.cols()) << "\n";
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        out << i;
        write_row(out, states.row(i));
        write_row(out, injections.row(i));
        out << "\n";
    }
    finish(out, path);
}

void write_grid(const fs::path& path, const GridSearchResult& grid, const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "sigma,alpha,fold,mse\n";
    for (const auto& cell : grid.cells) {
        if (!cell.ok()) {
            out << format_number(cell.sigma) << "," << format_number(cell.alpha) << ",failed,nan\n";
            continue;
        }
        for (std::size_t f = 0; f < cell.fold_mse.size(); ++f)
            out << format_number(cell.sigma) << "," << format_number(cell.alpha) << "," << f << ","
                << format_number(cell.fold_mse[f]) << "\n";
        out << format_number(cell.sigma) << "," << format_number(cell.alpha) << ",mean," << format_number(cell.mean_mse)
            << "\n";
    }
    out << format_number(grid.best_sigma) << "," << format_number(grid.best_alpha) << ",best,"
        << format_number(grid.best_mse) << "\n";
    finish(out, path);
}

void write_model(const fs::path& path, const PseudoInverseModel<double>& model, const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "kernel = " << kernel_spec(model.kernel) << "\n";
    out << "alpha = " << format_number(model.alpha) << "\n";
    out << "m = " << model.centers.cols() << "\n";
    out << "d_x = " << model.coefficients.rows() << "\n";
    out << "n = " << model.centers.rows() << "\n";
    out << "[centers]\ncenter_id" << numbered("z", model.centers.cols()) << "\n";
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i) {
        out << i;
        write_row(out, model.centers.row(i));
        out << "\n";
    }
    out << "[coefficients]\ncenter_id" << numbered("c", model.coefficients.rows()) << "\n";
    for (Eigen::Index i = 0; i < model.coefficients.cols(); ++i) {
        out << i;
        write_row(out, model.coefficients.col(i).transpose());
        out << "\n";
    }
    finish(out, path);
}

PseudoInverseModel<double> read_model(const fs::path& path) {
    const Sections s = read_sections(path);
    std::map<std::string, std::string> header;
    for (const auto& [no, line] : s.preamble) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(where(path, no) + ": expected 'key = value'");
        header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
        const auto it = header.find(key);
        if (it == header.end()) throw IoError(path.string() + ": model header lacks '" + key + "'");
        return it->second;
    };
    const auto count = [&](const std::string& key) {
        try {
            return static_cast<Eigen::Index>(std::stoll(need(key)));
        } catch (const std::logic_error&) {
            throw IoError(path.string() + ": bad integer for '" + key + "'");
        }
    };
    PseudoInverseModel<double> model{RadialKernel<double>::gaussian(1.0), {}, {}, 0.0};
    try {
        model.kernel = parse_kernel_spec(need("kernel"));
        model.alpha = std::stod(need("alpha"));
    } catch (const ArgumentError& e) {
        throw IoError(path.string() + ": " + e.what());
    } catch (const std::logic_error&) {
        throw IoError(path.string() + ": bad value for 'alpha'");
    }
    const Eigen::Index m = count("m"), dx = count("d_x"), n = count("n");
    if (!s.blocks.count("centers") || !s.blocks.count("coefficients"))
        throw IoError(path.string() + ": model needs [centers] and [coefficients] blocks");
    const Eigen::MatrixXd centers = parse_block(s.blocks.at("centers"), path, m + 1);
    const Eigen::MatrixXd coef = parse_block(s.blocks.at("coefficients"), path, dx + 1);
    if (centers.rows() != n || coef.rows() != n) throw IoError(path.string() + ": block sizes disagree with n");
    model.centers = centers.rightCols(m);
    model.coefficients = coef.rightCols(dx).transpose();
    return model;
}

void write_spectral_model(const fs::path& path, const SpectralModel& model, bool with_coefficients,
                          const WriteOptions& opts) {
    auto out = open_out(path, opts);
    out << "[candidates]\nangle,re,im,residual\n";
    for (Eigen::Index j = 0; j < model.size(); ++j)
        out << format_number(model.angles()(j)) << "," << format_number(model.candidates()(j).real()) << ","
            << format_number(model.candidates()(j).imag()) << "," << format_number(model.residuals()(j)) << "\n";
    if (with_coefficients && !model.empty()) {
        const Eigen::MatrixXcd V = model.coefficients();
        out << "[coefficients]\ncandidate_id,point_id,re,im\n";
        for (Eigen::Index j = 0; j < V.cols(); ++j)
            for (Eigen::Index i = 0; i < V.rows(); ++i)
                out << j << "," << i << "," << format_number(V(i, j).real()) << "," << format_number(V(i, j).imag()) << "\n";
    }
    finish(out, path);
}

void write_evaluation(const fs::path& report_path, const fs::path& trajectory_path, const EvaluationReport& report,
                      const WriteOptions& opts) {
    {
        auto out = open_out(report_path, opts);
        out << "metric,value\n";
        out << "mse," << format_number(report.mse) << "\n";
        out << "state_variance," << format_number(report.variance) << "\n";
        out << "mse_over_variance," << format_number(report.mse / report.variance) << "\n";
        out << "settle_time," << report.settle_time << "\n";
        out << "steps," << report.truth.rows() << "\n";
        finish(out, report_path);
    }
    auto out = open_out(trajectory_path, opts);
    out << "t,y" << numbered("x", report.truth.cols()) << numbered("xhat", report.estimates.cols()) << "\n";
    for (Eigen::Index t = 0; t < report.truth.rows(); ++t) {
        out << t << "," << format_number(report.outputs(t));
        write_row(out, report.truth.row(t));
        write_row(out, report.estimates.row(t));
        out << "\n";
    }
    finish(out, trajectory_path);
}

void write_manifest(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& entries) {
    auto out = open_out(path, {});
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
    finish(out, path);
}

}  // namespace kkl
