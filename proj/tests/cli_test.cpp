#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipop/cli.hpp"

namespace {

using namespace ipop;
namespace fs = std::filesystem;

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "ipop");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int status = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ipop_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

TEST_F(CliTest, EnergyOnCombGrounded) {
    const auto r = run({"energy", "--preset", "cc_grounded", "--out", dir_.string()});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("3.74 uW"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("58.1 uW/cm^3"), std::string::npos) << r.out;
    const std::string csv = slurp(dir_ / "energy.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "v_in_V,c_max_F,c_min_F,f_Hz,E_J,P_W,density_uW_per_cm3");
    EXPECT_EQ(slurp(dir_ / "summary.txt"), r.out);
}

TEST_F(CliTest, UnknownSubcommandPrintsUsage) {
    const auto r = run({"teleport", "--preset", "cc_grounded", "--out", dir_.string()});
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST_F(CliTest, ValidationErrorWritesErrorFile) {
    fs::create_directories(dir_);
    const fs::path cfg = dir_ / "bad.cfg";
    std::ofstream(cfg) << "preset = cc_grounded\n[energy]\nc_min = 0\n";
    const auto r = run({"energy", "--config", cfg.string(), "--out", dir_.string()});
    EXPECT_EQ(r.status, 1);
    const auto j = nlohmann::json::parse(slurp(dir_ / "error.json"));
    EXPECT_EQ(j["status"], 1);
    EXPECT_EQ(j["kind"], "validation");
    EXPECT_EQ(j["subcommand"], "energy");
    EXPECT_NE(j["message"].get<std::string>().find("line 3"), std::string::npos);
}

TEST_F(CliTest, MissingSectionIsValidationError) {
    const auto r = run({"circuit", "--preset", "cc_grounded", "--out", dir_.string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("[circuit]"), std::string::npos);
}

TEST_F(CliTest, MissingConfigFileIsIoError) {
    const auto r = run({"energy", "--config", (dir_ / "absent.cfg").string(), "--out", dir_.string()});
    EXPECT_EQ(r.status, 3);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "error.json"))["kind"], "io");
}

TEST_F(CliTest, UnwritableOutputIsIoError) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "file") << "x";
    const auto r = run({"energy", "--preset", "cc_grounded", "--out", (dir_ / "file" / "sub").string()});
    EXPECT_EQ(r.status, 3);
}

TEST_F(CliTest, DeviceAndMechOutputs) {
    ASSERT_EQ(run({"device", "--preset", "pc_grounded", "--out", dir_.string()}).status, 0);
    EXPECT_TRUE(fs::exists(dir_ / "device_capacitance.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "drie_depth.csv"));

    fs::create_directories(dir_);
    const fs::path cfg = dir_ / "mech.cfg";
    std::ofstream(cfg) << "preset = cc_grounded\n[resonator]\nsweep_start = 285\nsweep_stop = 295\n"
                          "duration = 0.05\n";
    const auto r = run({"mech", "--config", cfg.string(), "--out", dir_.string()});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(slurp(dir_ / "motion.csv").substr(0, 11), "time_s,x_m\n");
    EXPECT_TRUE(fs::exists(dir_ / "frequency_response.csv"));
}

TEST_F(CliTest, CircuitAndSweepAreByteIdenticalAcrossRuns) {
    fs::create_directories(dir_);
    const fs::path cfg = dir_ / "short.cfg";
    std::ofstream(cfg) << "preset = circuit_sec6\n[circuit]\nduration = 0.2\n"
                          "[sweep]\nstart = 1e-6\nstop = 3e-6\npoints = 3\nduration = 0.2\n";
    for (const char* sub : {"circuit", "sweep"}) {
        const fs::path a = dir_ / "a";
        const fs::path b = dir_ / "b";
        ASSERT_EQ(run({sub, "--config", cfg.string(), "--out", a.string(), "--seedless"}).status, 0);
        ASSERT_EQ(run({sub, "--config", cfg.string(), "--out", b.string()}).status, 0);
        for (const auto& entry : fs::directory_iterator(a)) {
            EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
        }
    }
    EXPECT_TRUE(fs::exists(dir_ / "a" / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "ledger.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "sweep.csv").substr(0, 23), "axis,value,metric,flag\n");
}

TEST_F(CliTest, ConfigAndPresetAreExclusive) {
    const auto r = run({"energy", "--preset", "cc_grounded", "--config", "x.cfg", "--out", dir_.string()});
    EXPECT_EQ(r.status, 1);
}

TEST(Subcommands, FullSet) {
    EXPECT_EQ(cli::subcommands(),
              (std::vector<std::string>{"device", "mech", "energy", "circuit", "sweep", "reproduce"}));
}

}  // namespace
