#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ipop/config.hpp"
#include "ipop/errors.hpp"
#include "ipop/mech_resonator.hpp"

namespace {

using namespace ipop;
using mech::ExcitationSpec;
using mech::ResonatorParams;
using mech::StopperModel;

constexpr double um = 1e-6;
constexpr double kStop = 50e-6;  // default stopper limit, exact

/// |X| / Y of a base-excited single-degree-of-freedom oscillator.
double transmissibility(double r, double q) {
    return r * r / std::hypot(1.0 - r * r, r / q);
}

ResonatorParams resonator(double f0, double q, StopperModel stops = StopperModel::none) {
    ResonatorParams p;
    p.mass = 63.3e-6;
    p.stiffness = p.mass * std::pow(2.0 * std::numbers::pi * f0, 2);
    p.quality_factor = q;
    p.stopper_model = stops;
    return p;
}

ExcitationSpec tone(double f, double amplitude = 5 * um) {
    ExcitationSpec e;
    e.amplitude = amplitude;
    e.frequency = f;
    return e;
}

double tail_peak(const mech::MotionTrace& trace, double from) {
    double peak = 0.0;
    for (std::size_t i = 0; i < trace.time.size(); ++i) {
        if (trace.time[i] >= from) peak = std::max(peak, std::abs(trace.displacement[i]));
    }
    return peak;
}

TEST(ProofMass, HandArithmetic) {
    // 71.5 mm^2 * 0.38 mm = 27.17 mm^3 of silicon at 2.33 mg/mm^3.
    EXPECT_NEAR(mech::proof_mass_from_geometry(71.5e-6, 380e-6, 2330, 0.0), 63.3061e-6, 1e-10);
    EXPECT_NEAR(mech::proof_mass_from_geometry(71.5e-6, 380e-6, 2330, 0.19), 51.2779e-6, 1e-10);
    EXPECT_THROW((void)mech::proof_mass_from_geometry(0.0, 380e-6, 2330, 0.0), DomainError);
    EXPECT_THROW((void)mech::proof_mass_from_geometry(71.5e-6, 380e-6, 2330, 1.0), DomainError);
}

TEST(Stiffness, FromResonance) {
    EXPECT_NEAR(mech::stiffness_from_resonance(63.3e-6, 300.0), 224.9, 0.05);
    EXPECT_THROW((void)mech::stiffness_from_resonance(63.3e-6, 0.0), DomainError);
    EXPECT_DOUBLE_EQ(mech::stiffness_from_resonance(2 * 63.3e-6, 300.0),
                     2 * mech::stiffness_from_resonance(63.3e-6, 300.0));
}

TEST(Resonator, PresetsDeriveMassAndStiffness) {
    const auto pc = config::load_preset("pc_grounded").resonator.value().params();
    const auto cc = config::load_preset("cc_grounded").resonator.value().params();
    EXPECT_NEAR(pc.mass, 71.5e-6 * 380e-6 * 2330, 1e-15);
    EXPECT_NEAR(cc.mass, 71.5e-6 * 380e-6 * 2330 * 0.81, 1e-15);
    EXPECT_NEAR(pc.natural_frequency(), 255.0, 1e-9);
    EXPECT_NEAR(cc.natural_frequency(), 290.0, 1e-9);
    EXPECT_EQ(pc.quality_factor, 20.0);
}

TEST(Resonator, RejectsOverdampedAndNonPositive) {
    auto p = resonator(300, 20);
    p.quality_factor = 0.5;
    EXPECT_THROW(p.validate(), DomainError);
    p = resonator(300, 20);
    p.mass = 0.0;
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(SimulateMotion, ZeroExcitationStaysAtRest) {
    const auto trace = mech::simulate_motion(resonator(290, 20), tone(290, 0.0), 0.05);
    for (double x : trace.displacement) EXPECT_EQ(x, 0.0);
}

TEST(SimulateMotion, StopperCapsResonantMotion) {
    const auto p = resonator(290, 20, StopperModel::inelastic_stop);
    const auto trace = mech::simulate_motion(p, tone(290), 0.5);
    double peak = 0.0;
    for (double x : trace.displacement) peak = std::max(peak, std::abs(x));
    EXPECT_EQ(peak, kStop);
    EXPECT_GT(trace.stopper_contacts, 0);

    auto clamp = p;
    clamp.stopper_model = StopperModel::clamp;
    const auto clamped = mech::simulate_motion(clamp, tone(290), 0.5);
    double clamped_peak = 0.0;
    for (double x : clamped.displacement) clamped_peak = std::max(clamped_peak, std::abs(x));
    EXPECT_EQ(clamped_peak, kStop);
}

TEST(SimulateMotion, FarAboveResonanceFollowsTransmissibility) {
    // Relative motion tends to the base amplitude itself, not to zero.
    const double f0 = 290;
    const auto trace = mech::simulate_motion(resonator(f0, 20), tone(10 * f0), 0.4);
    const double expected = 5 * um * transmissibility(10.0, 20);
    EXPECT_NEAR(expected, 5.05 * um, 0.01 * um);
    EXPECT_NEAR(tail_peak(trace, 0.3), expected, 0.01 * expected);
}

TEST(SimulateMotion, FreeVibrationLosesEnergyMonotonically) {
    const auto p = resonator(255, 20);
    mech::MotionOptions opt;
    opt.initial_displacement = 20 * um;
    const auto trace = mech::simulate_motion(p, tone(255, 0.0), 0.2, opt);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.time.size(); ++i) {
        const double e = 0.5 * p.mass * trace.velocity[i] * trace.velocity[i] +
                         0.5 * p.stiffness * trace.displacement[i] * trace.displacement[i];
        EXPECT_LE(e, prev * (1.0 + 1e-12));
        prev = e;
    }
}

TEST(SimulateMotion, HalvingStepChangesAmplitudeBelowHalfPercent) {
    const auto p = resonator(255, 20);
    const double f0 = p.natural_frequency();
    mech::MotionOptions coarse;
    coarse.max_step = 1.0 / (50.0 * f0);
    mech::MotionOptions fine;
    fine.max_step = coarse.max_step / 2;
    for (double f : {200.0, 255.0, 330.0}) {
        const double a = tail_peak(mech::simulate_motion(p, tone(f), 1.0, coarse), 0.75);
        const double b = tail_peak(mech::simulate_motion(p, tone(f), 1.0, fine), 0.75);
        EXPECT_LT(std::abs(a / b - 1.0), 0.005) << "f = " << f;
    }
}

TEST(SimulateMotion, RejectsStepAboveResolutionLimit) {
    mech::MotionOptions opt;
    opt.max_step = 1.0 / (10.0 * 255.0);
    EXPECT_THROW((void)mech::simulate_motion(resonator(255, 20), tone(255), 0.1, opt), DomainError);
}

TEST(SimulateMotion, ChirpSweepStaysBounded) {
    auto spec = tone(0.0);
    spec.kind = ExcitationSpec::Kind::frequency_sweep;
    spec.sweep_start = 200;
    spec.sweep_stop = 350;
    spec.sweep_step = 2.5;
    const auto trace =
        mech::simulate_motion(resonator(290, 20, StopperModel::inelastic_stop), spec, 2.0);
    double peak = 0.0;
    for (double x : trace.displacement) peak = std::max(peak, std::abs(x));
    EXPECT_LE(peak, kStop);
}

TEST(SimulateMotion, ElectrostaticCouplingSoftensResonance) {
    // A capacitance rising with |x| pulls the mass outward: negative stiffness.
    const auto p = resonator(255, 20);
    mech::MotionOptions opt;
    opt.initial_displacement = 10 * um;
    const auto free_run = mech::simulate_motion(p, tone(255, 0.0), 0.1, opt);
    opt.coupling = mech::ElectrostaticCoupling{200.0, [](double x) { return 1e-10 + 1e-3 * x * x; }};
    const auto pulled = mech::simulate_motion(p, tone(255, 0.0), 0.1, opt);
    auto first_zero = [](const mech::MotionTrace& t) {
        for (std::size_t i = 1; i < t.time.size(); ++i) {
            if (t.displacement[i] <= 0.0) return t.time[i];
        }
        return 0.0;
    };
    EXPECT_GT(first_zero(pulled), first_zero(free_run));
}

struct TransmissibilityCase {
    double q;
    double r;
};

class Transmissibility : public ::testing::TestWithParam<TransmissibilityCase> {};

TEST_P(Transmissibility, StopperFreeResponseMatchesClosedForm) {
    const auto [q, r] = GetParam();
    const double f0 = 280.0;
    const std::vector<double> f{r * f0};
    const auto resp = mech::frequency_response(resonator(f0, q), 5 * um, f);
    EXPECT_NEAR(resp.peak[0], 5 * um * transmissibility(r, q),
                0.02 * 5 * um * transmissibility(r, q));
}

INSTANTIATE_TEST_SUITE_P(Mech, Transmissibility,
                         ::testing::Values(TransmissibilityCase{5, 0.5}, TransmissibilityCase{5, 1.0},
                                           TransmissibilityCase{5, 2.0}, TransmissibilityCase{20, 0.8},
                                           TransmissibilityCase{20, 1.0}, TransmissibilityCase{20, 1.3},
                                           TransmissibilityCase{50, 0.5}, TransmissibilityCase{50, 1.0},
                                           TransmissibilityCase{50, 2.0}),
                         [](const auto& info) {
                             return "q" + std::to_string(static_cast<int>(info.param.q)) + "_r" +
                                    std::to_string(static_cast<int>(info.param.r * 10));
                         });

TEST(FrequencyResponse, PeaksAtPresetResonance) {
    for (const char* name : {"pc_grounded", "cc_grounded"}) {
        const auto rs = config::load_preset(name).resonator.value();
        auto p = rs.params();
        p.stopper_model = StopperModel::none;
        std::vector<double> grid;
        for (double f = rs.resonant_frequency - 10; f <= rs.resonant_frequency + 10; f += 2.5) {
            grid.push_back(f);
        }
        const auto resp = mech::frequency_response(p, rs.amplitude, grid);
        EXPECT_EQ(resp.stopper_limit, 0.0);
        EXPECT_NEAR(resp.peak_frequency(), rs.resonant_frequency, 2.5) << name;
    }
}

TEST(FrequencyResponse, CappedPlateauReportedByItsCentre) {
    mech::FrequencyResponse r;
    r.frequency = {1, 2, 3, 4, 5, 6};
    r.peak = {1, 3, 5, 5, 5, 2};
    r.stopper_limit = 5;
    EXPECT_EQ(r.peak_frequency(), 4.0);
    r.stopper_limit = 0;
    EXPECT_EQ(r.peak_frequency(), 3.0);
    r.peak.clear();
    EXPECT_THROW((void)r.peak_frequency(), DomainError);
}

TEST(Excitation, SweepGridIncludesEndpoints) {
    const auto rs = config::load_preset("cc_grounded").resonator.value();
    const auto grid = rs.sweep().sweep_grid();
    ASSERT_EQ(grid.size(), 61u);
    EXPECT_EQ(grid.front(), 200.0);
    EXPECT_DOUBLE_EQ(grid.back(), 350.0);
}

}  // namespace
