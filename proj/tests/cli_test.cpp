#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "kkl/app.hpp"
#include "kkl/io.hpp"
#include "kkl/pipelines.hpp"

using namespace kkl;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "kkl_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("kkl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

std::map<std::string, std::string> read_manifest(const fs::path& p) {
    std::map<std::string, std::string> m;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return m;
}

double read_metric(const fs::path& p, const std::string& name) {
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);)
        if (line.rfind(name + ",", 0) == 0) return std::stod(line.substr(name.size() + 1));
    throw std::runtime_error("metric " + name + " missing from " + p.string());
}

}  // namespace

TEST_F(CliTest, HelpExitsCleanly) {
    const CliRun r = cli({"--help"});
    EXPECT_EQ(r.code, exit_ok);
    EXPECT_NE(r.out.find("synthesize"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsMapToConfigExit) {
    EXPECT_EQ(cli({}).code, exit_config);
    EXPECT_EQ(cli({"synthesize", "--algorithm", "4"}).code, exit_config);
    EXPECT_EQ(cli({"synthesize", "--set", "observer.beta=1.2"}).code, exit_config);
    EXPECT_EQ(cli({"synthesize", "--set", "observer.nope=1"}).code, exit_config);
    EXPECT_EQ(cli({"generate", "--system", "pendulum"}).code, exit_config);
}

TEST_F(CliTest, BadDataFileMapsToIoExit) {
    std::ofstream(path("broken.csv")) << "orbit_id,t_offset,x_1,x_2,x_3\n0,0,1,2\n";
    const CliRun r = cli({"synthesize", "--data", path("broken.csv"), "--out-dir", path("o")});
    EXPECT_EQ(r.code, exit_io);
    EXPECT_NE(r.err.find("broken.csv:2"), std::string::npos) << r.err;
}

TEST_F(CliTest, GenerateSynthesizeEvaluateRoundTrip) {
    ASSERT_EQ(cli({"generate", "--n", "150", "--ell", "60", "--out", path("orbits.csv")}).code, exit_ok);
    const OrbitSet orbits = read_orbit_set(path("orbits.csv"));
    EXPECT_EQ(orbits.size(), 150);
    EXPECT_EQ(orbits.history_length, 60);

    const CliRun syn = cli({"synthesize", "--algorithm", "1", "--data", path("orbits.csv"), "--out-dir", path("a1")});
    ASSERT_EQ(syn.code, exit_ok) << syn.err;
    for (const char* f : {"model.txt", "injections.csv", "evaluation.csv", "trajectory.csv", "manifest.txt"})
        EXPECT_TRUE(fs::exists(dir_ / "a1" / f)) << f;
    const auto manifest = read_manifest(dir_ / "a1" / "manifest.txt");
    EXPECT_EQ(manifest.at("algorithm"), "1");
    EXPECT_EQ(manifest.at("samples"), "150");
    EXPECT_TRUE(manifest.count("config_hash"));
    EXPECT_TRUE(manifest.count("time.krr_fit"));

    const CliRun ev = cli({"evaluate", "--model", path("a1/model.txt"), "--out-dir", path("ev")});
    ASSERT_EQ(ev.code, exit_ok) << ev.err;
    // Same model, same test trajectory: the stored and re-evaluated scores agree.
    EXPECT_EQ(read_metric(dir_ / "ev" / "evaluation.csv", "mse"), read_metric(dir_ / "a1" / "evaluation.csv", "mse"));
}

TEST_F(CliTest, EvaluateZeroModelScoresMeanSquaredState) {
    // A model with all-zero coefficients predicts the origin.
    PseudoInverseModel<double> zero{RadialKernel<double>::gaussian(1.0), Eigen::MatrixXd::Zero(1, 3), Eigen::MatrixXd::Zero(3, 1), 0.0};
    write_model(path("zero.txt"), zero);
    const CliRun r = cli({"evaluate", "--model", path("zero.txt"), "--out-dir", path("z")});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const CsvTable traj = read_csv(dir_ / "z" / "trajectory.csv");
    double ms = 0.0;
    int count = 0;
    for (const auto& row : traj.rows) {
        if (row[0] < 300) continue;
        ms += row[2] * row[2] + row[3] * row[3] + row[4] * row[4];
        ++count;
    }
    EXPECT_NEAR(read_metric(dir_ / "z" / "evaluation.csv", "mse"), ms / count, 1e-8 * ms / count);

    PseudoInverseModel<double> wrong{RadialKernel<double>::gaussian(1.0), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(3, 1), 0.0};
    write_model(path("wrong.txt"), wrong);
    EXPECT_EQ(cli({"evaluate", "--model", path("wrong.txt"), "--out-dir", path("w")}).code, exit_config);
}

TEST_F(CliTest, ConfigFileAndOverridesCompose) {
    std::ofstream(path("run.ini")) << "[system]\nname = circle\n[observer]\nm = 2\nell = 30\n[run]\nn = 80\nhistory = 30\n";
    const CliRun r = cli({"synthesize", "--config", path("run.ini"), "--set", "run.seed=11", "--out-dir", path("c")});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto manifest = read_manifest(dir_ / "c" / "manifest.txt");
    EXPECT_EQ(manifest.at("system.name"), "circle");
    EXPECT_EQ(manifest.at("observer.m"), "2");
    EXPECT_EQ(manifest.at("seed"), "11");
}

TEST_F(CliTest, TuneWritesGridWithBestRow) {
    ASSERT_EQ(cli({"generate", "--n", "100", "--ell", "50", "--out", path("o.csv")}).code, exit_ok);
    const CliRun r = cli({"tune", "--data", path("o.csv"), "--set", "krr.sigma_grid=1,10", "--set", "krr.alpha_grid=1e-4,1e-2",
                       "--out", path("grid.csv")});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    std::ifstream in(path("grid.csv"));
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    EXPECT_NE(last.find(",best,"), std::string::npos) << last;
}

TEST_F(CliTest, SnapshotPipelineSmallRun) {
    const CliRun r = cli({"synthesize", "--algorithm", "3", "--orbits", "20", "--steps", "10", "--set", "spectral.p=40",
                       "--set", "spectral.rank=0", "--out-dir", path("s"), "--spectral-coefficients"});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto manifest = read_manifest(dir_ / "s" / "manifest.txt");
    EXPECT_EQ(manifest.at("spectral.survivors"), "40");
    EXPECT_EQ(manifest.at("samples"), "200");
    EXPECT_TRUE(fs::exists(dir_ / "s" / "spectral.csv"));
    const CliRun none = cli({"synthesize", "--algorithm", "3", "--orbits", "20", "--steps", "10", "--set", "spectral.p=40",
                          "--set", "spectral.threshold=-1", "--out-dir", path("t")});
    EXPECT_EQ(none.code, exit_numeric);
}
