#ifndef KKL_IO_HPP
#define KKL_IO_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kkl/dynamics.hpp"
#include "kkl/pipelines.hpp"
#include "kkl/regression.hpp"
#include "kkl/spectral.hpp"

namespace kkl {

// Numeric CSV with a mandatory header row; '#' lines are comments.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;
};

CsvTable read_csv(const std::filesystem::path& path);
std::string format_number(double v);

// Optional leading comment line "# config_hash: <hash>" on every written file.
struct WriteOptions {
    std::string config_hash;
};

void write_orbit_set(const std::filesystem::path& path, const OrbitSet& orbits, const WriteOptions& opts = {});
OrbitSet read_orbit_set(const std::filesystem::path& path);
void write_long_orbit(const std::filesystem::path& path, const LongOrbit& orbit, const WriteOptions& opts = {});
LongOrbit read_long_orbit(const std::filesystem::path& path);
void write_snapshots(const std::filesystem::path& path, const SnapshotSet& snapshots, const WriteOptions& opts = {});
SnapshotSet read_snapshots(const std::filesystem::path& path);

void write_injections(const std::filesystem::path& path, const Eigen::MatrixXd& states, const Eigen::MatrixXd& injections,
                      const WriteOptions& opts = {});
void write_grid(const std::filesystem::path& path, const GridSearchResult& grid, const WriteOptions& opts = {});

void write_model(const std::filesystem::path& path, const PseudoInverseModel<double>& model, const WriteOptions& opts = {});
PseudoInverseModel<double> read_model(const std::filesystem::path& path);

void write_spectral_model(const std::filesystem::path& path, const SpectralModel& model, bool with_coefficients,
                          const WriteOptions& opts = {});

void write_evaluation(const std::filesystem::path& report_path, const std::filesystem::path& trajectory_path,
                      const EvaluationReport& report, const WriteOptions& opts = {});

// Flat "key = value" manifest.
void write_manifest(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace kkl

#endif
