#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "ipop/config.hpp"
#include "ipop/errors.hpp"

namespace {

using namespace ipop;

std::string error_of(const std::string& text) {
    try {
        (void)config::parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

TEST(Presets, AllSixShipAndValidate) {
    const auto names = config::preset_names();
    for (const char* expected : {"pc_floating", "cc_floating", "pc_grounded", "cc_grounded",
                                 "circuit_sec6", "lowfreq_410"}) {
        EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
    }
    for (const auto& n : names) {
        const auto cfg = config::load_preset(n);
        EXPECT_NO_THROW(config::validate_config(cfg)) << n;
    }
    EXPECT_THROW((void)config::load_preset("nope"), ConfigError);
}

TEST(Presets, CircuitValues) {
    const auto cfg = config::load_preset("circuit_sec6");
    const auto& p = cfg.circuit.value().params;
    EXPECT_EQ(p.c_res, 2e-6);
    EXPECT_EQ(p.r_load, 2e7);
    EXPECT_EQ(p.l_fly, 4e-3);
    EXPECT_EQ(p.v_initial, 5.0);
    EXPECT_EQ(p.c_store, 2.2e-9);
    EXPECT_EQ(p.sw.pulse_width, 2e-6);
    const auto& d = cfg.drive.value();
    EXPECT_EQ(d.c_max, 2.08e-10);
    EXPECT_EQ(d.c_min, 4.7e-11);
    EXPECT_EQ(d.frequency, 300.0);
    EXPECT_NEAR(p.sw.clock_period * d.frequency, 10.0, 1e-12);
}

TEST(Presets, MeasuredOperatingPoints) {
    const auto cc = config::load_preset("cc_grounded").energy.value().op;
    EXPECT_EQ(cc.c_max, 181e-12);
    EXPECT_EQ(cc.c_min, 47e-12);
    EXPECT_EQ(cc.frequency, 290.0);
    EXPECT_EQ(cc.v_in, 5.0);
    const auto pc = config::load_preset("pc_floating").energy.value().op;
    EXPECT_EQ(pc.c_max, 214e-12);
    EXPECT_EQ(pc.c_min, 140e-12);
    EXPECT_EQ(pc.frequency, 255.0);
}

TEST(Parse, PresetPassthrough) {
    const auto a = config::parse_config("preset = cc_grounded\n");
    const auto b = config::load_preset("cc_grounded");
    EXPECT_EQ(config::serialize_config(a), config::serialize_config(b));
    EXPECT_EQ(a.preset, "cc_grounded");
}

TEST(Parse, OverridesAfterPreset) {
    const auto cfg = config::parse_config("preset = cc_grounded\n[energy]\nv_in = 10\n");
    EXPECT_EQ(cfg.energy->op.v_in, 10.0);
    EXPECT_EQ(cfg.energy->op.c_min, 47e-12);
}

TEST(Parse, ZeroMinimumCapacitanceRejectedWithLine) {
    const std::string err = error_of("preset = cc_grounded\n[energy]\nc_min = 0\n");
    EXPECT_TRUE(contains(err, "line 3:")) << err;
    EXPECT_TRUE(contains(err, "c_min")) << err;
}

TEST(Parse, ReportsEveryError) {
    const std::string text =
        "[energy]\n"
        "v_in = 5 V\n"
        "c_max = 2e-10\n"
        "c_min = 1e-10\n"
        "frequency = 300\n"
        "colour = blue\n"
        "[circuit]\n"
        "pulse_width = 2e-6\n"
        "l_fly = -1\n"
        "[bogus]\n";
    const std::string err = error_of(text);
    EXPECT_TRUE(contains(err, "line 2:")) << err;
    EXPECT_TRUE(contains(err, "line 6: unknown key 'colour'")) << err;
    EXPECT_TRUE(contains(err, "line 9:")) << err;
    EXPECT_TRUE(contains(err, "line 10: unknown section [bogus]")) << err;
    EXPECT_GE(std::count(err.begin(), err.end(), '\n'), 3);
}

TEST(Parse, MissingRequiredKey) {
    const std::string err = error_of("[energy]\nv_in = 5\nc_max = 2e-10\nfrequency = 300\n");
    EXPECT_TRUE(contains(err, "missing required key 'c_min'")) << err;
    EXPECT_TRUE(contains(err, "line 1:")) << err;
}

TEST(Parse, StructuralErrors) {
    EXPECT_TRUE(contains(error_of("v_in = 5\n"), "outside of any section"));
    EXPECT_TRUE(contains(error_of("[energy\n"), "malformed section header"));
    EXPECT_TRUE(contains(error_of("preset = cc_grounded\n[energy]\nv_in\n"), "expected 'key = value'"));
    EXPECT_TRUE(contains(error_of("preset = cc_grounded\n[energy]\nv_in = 1\nv_in = 2\n"),
                         "line 4: duplicate key 'v_in'"));
    EXPECT_TRUE(contains(error_of("[energy]\npreset = cc_grounded\n"), "before the first section"));
    EXPECT_TRUE(contains(error_of("preset = unknown_one\n"), "unknown preset"));
}

TEST(Parse, EnumsAndBooleans) {
    EXPECT_TRUE(contains(error_of("preset = circuit_sec6\n[circuit]\nflyback = maybe\n"), "boolean"));
    EXPECT_TRUE(contains(error_of("preset = circuit_sec6\n[sweep]\naxis = colour\n"), "axis"));
    EXPECT_TRUE(contains(error_of("preset = pc_grounded\n[resonator]\nstopper_model = bouncy\n"),
                         "stopper_model"));
    const auto cfg =
        config::parse_config("preset = circuit_sec6\n[circuit]\nflyback = false\nduration = 0.1\n");
    EXPECT_FALSE(cfg.circuit->params.sw.enabled);
}

TEST(Parse, FlybackOffNeedsExplicitDuration) {
    EXPECT_TRUE(contains(error_of("preset = circuit_sec6\n[circuit]\nflyback = false\n"),
                         "duration must be set"));
}

TEST(Parse, CommentsAndBlankLines) {
    const auto cfg = config::parse_config(
        "# header\n\npreset = cc_grounded   # trailing\n\n[energy]\n  v_in = 7  \n");
    EXPECT_EQ(cfg.energy->op.v_in, 7.0);
}

TEST(Parse, ReservoirRuleIsConfigError) {
    const std::string err = error_of("preset = circuit_sec6\n[circuit]\nc_res = 1e-7\n");
    EXPECT_TRUE(contains(err, "line 3:")) << err;
    EXPECT_TRUE(contains(err, "100")) << err;
}

class RoundTrip : public ::testing::TestWithParam<std::string> {};

TEST_P(RoundTrip, SerializeParseIsIdempotent) {
    const auto cfg = config::load_preset(GetParam());
    const std::string once = config::serialize_config(cfg);
    const std::string twice = config::serialize_config(config::parse_config(once));
    EXPECT_EQ(once, twice);
}

TEST_P(RoundTrip, StandaloneTextWithoutPresetLine) {
    auto cfg = config::load_preset(GetParam());
    cfg.preset.clear();
    const std::string text = config::serialize_config(cfg);
    EXPECT_EQ(text.find("preset"), std::string::npos);
    EXPECT_EQ(config::serialize_config(config::parse_config(text)), text);
}

INSTANTIATE_TEST_SUITE_P(Config, RoundTrip,
                         ::testing::Values("pc_floating", "cc_floating", "pc_grounded", "cc_grounded",
                                           "circuit_sec6", "lowfreq_410"));

TEST(Derived, LowFrequencyClockFromCycles) {
    const auto cfg = config::load_preset("lowfreq_410");
    EXPECT_NEAR(cfg.circuit_params().sw.clock_period, 5.0 / 410.0, 1e-15);
    EXPECT_NEAR(cfg.circuit_duration(), 50 * 5.0 / 410.0, 1e-12);
}

TEST(Derived, SweepGrids) {
    auto s = config::load_preset("circuit_sec6").sweep.value();
    auto g = s.grid();
    ASSERT_EQ(g.size(), 20u);
    EXPECT_EQ(g.front(), 0.5e-6);
    EXPECT_DOUBLE_EQ(g.back(), 10e-6);
    s.spacing = config::GridSpacing::log;
    s.start = 1e-9;
    s.stop = 1e-7;
    s.points = 3;
    g = s.grid();
    EXPECT_NEAR(g[1], 1e-8, 1e-20);
}

TEST(Files, LoadFromDiskAndReportMissing) {
    const auto path = std::filesystem::temp_directory_path() / "ipop_config_test.cfg";
    {
        std::ofstream f(path);
        f << "preset = pc_grounded\n[energy]\nfrequency = 260\n";
    }
    const auto cfg = config::load_config_file(path.string());
    EXPECT_EQ(cfg.energy->op.frequency, 260.0);
    std::filesystem::remove(path);
    EXPECT_THROW((void)config::load_config_file(path.string()), IoError);
}

}  // namespace
