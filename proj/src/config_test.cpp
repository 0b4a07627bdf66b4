#include <gtest/gtest.h>

#include "kkl/config.hpp"

using namespace kkl;

TEST(Ini, SectionsCommentsAndLineNumbers) {
    const IniDocument doc = parse_ini("# top\n[observer]\nbeta = 0.95 \n; c\n[kernel.x]\nsigma=5\n", "t.ini");
    EXPECT_EQ(doc.at("observer").at("beta").value, "0.95");
    EXPECT_EQ(doc.at("observer").at("beta").line, 3);
    EXPECT_EQ(doc.at("kernel.x").at("sigma").value, "5");
}

TEST(Ini, MalformedInputCitesTheLine) {
    try {
        parse_ini("[run]\nseed = 1\nseed = 2\n", "cfg.ini");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("cfg.ini:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_ini("[run\n", "x"), ConfigError);
    EXPECT_THROW(parse_ini("[run]\njunk\n", "x"), ConfigError);
}

TEST(RunConfig, AppliesKnownKeysAndRejectsOthers) {
    const RunConfig c = apply_ini(parse_ini("[observer]\nm = 2\nbeta = 0.5\n[spectral]\nthreshold = 0.02\n"
                                            "[kernel.z]\nfamily = matern\nnu = 5/2\nsigma = 3\n",
                                            "a"),
                                  "a");
    EXPECT_EQ(c.order, 2);
    EXPECT_EQ(c.beta, 0.5);
    ASSERT_TRUE(c.threshold.has_value());
    EXPECT_EQ(*c.threshold, 0.02);
    const SynthesisConfig s = c.synthesis();
    EXPECT_EQ(kernel_spec(s.z_kernel), "matern nu=5/2 sigma=3");
    EXPECT_EQ(s.observer.order, 2);

    EXPECT_THROW(apply_ini(parse_ini("[observer]\ngamma = 1\n", "b"), "b"), ConfigError);
    EXPECT_THROW(apply_ini(parse_ini("[nonsense]\na = 1\n", "b"), "b"), ConfigError);
    EXPECT_THROW(apply_ini(parse_ini("[run]\nn = many\n", "b"), "b"), ConfigError);
}

TEST(RunConfig, ValidationCatchesBadValues) {
    RunConfig c;
    EXPECT_NO_THROW(validate(c));
    c.beta = 1.5;
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig{};
    c.system = "pendulum";
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig{};
    c.settle = c.test_steps;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(RunConfig, HashTracksEffectiveValues) {
    RunConfig a, b;
    EXPECT_EQ(a.hash(), b.hash());
    b.seed = 8;
    EXPECT_NE(a.hash(), b.hash());
    set_config_value(b, "run", "seed", "7", "test");
    EXPECT_EQ(a.hash(), b.hash());
}

TEST(RunConfig, BuildsEachSystem) {
    RunConfig c;
    for (const std::string name : {"lorenz", "circle", "limit-cycle"}) {
        c.system = name;
        EXPECT_EQ(c.build_system().name(), name);
    }
}
