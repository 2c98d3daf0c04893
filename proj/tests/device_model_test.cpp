#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>

#include "ipop/config.hpp"
#include "ipop/device_model.hpp"
#include "ipop/errors.hpp"
#include "oracles/device_calibration.hpp"

namespace {

using namespace ipop;
using device::BacksideDrieModel;
using device::DeviceModel;

constexpr double pF = 1e-12;
constexpr double um = 1e-6;

DeviceModel preset_device(const std::string& name) {
    return config::load_preset(name).device.value().model;
}

TEST(LinearCapacitance, ZeroDisplacementMatchesClosedForm) {
    device::ElectrodeGeometry g;
    g.n_fingers = 12;
    g.finger_length = 2e-3;
    g.finger_width = 80 * um;
    g.dielectric_thickness = 0.4 * um;
    g.air_gap = 2 * um;
    g.dielectric_rel_permittivity = 4.0;
    g.stopper_limit = 80 * um;
    const double expected = 12 * 2 * 8.8541878128e-12 * 4.0 * 2e-3 * 80e-6 / (0.4e-6 + 4.0 * 2e-6);
    EXPECT_NEAR(device::linear_capacitance(g, 0.0), expected, 1e-12 * expected);
}

TEST(LinearCapacitance, VanishesAtFullTravelWhenStopperEqualsWidth) {
    device::ElectrodeGeometry g = preset_device("pc_floating").geometry;
    g.stopper_limit = g.finger_width;
    EXPECT_EQ(device::linear_capacitance(g, g.finger_width), 0.0);
}

TEST(LinearCapacitance, SymmetricAndAffineInTravel) {
    const device::ElectrodeGeometry g = preset_device("cc_grounded").geometry;
    const double c0 = device::linear_capacitance(g, 0.0);
    const double c_end = device::linear_capacitance(g, g.stopper_limit);
    for (int i = 0; i <= 20; ++i) {
        const double x = g.stopper_limit * i / 20.0;
        const double c = device::linear_capacitance(g, x);
        EXPECT_EQ(c, device::linear_capacitance(g, -x));
        EXPECT_NEAR(c, c0 + (c_end - c0) * i / 20.0, 1e-9 * c0);
        if (i > 0) {
            EXPECT_LT(c, device::linear_capacitance(g, g.stopper_limit * (i - 1) / 20.0));
        }
    }
}

TEST(LinearCapacitance, RejectsTravelBeyondStopper) {
    const device::ElectrodeGeometry g = preset_device("pc_floating").geometry;
    EXPECT_THROW((void)device::linear_capacitance(g, 50.01 * um), DomainError);
    EXPECT_THROW((void)device::linear_capacitance(g, std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(Geometry, ValidationRejectsBadValues) {
    device::ElectrodeGeometry g = preset_device("pc_floating").geometry;
    EXPECT_NO_THROW(g.validate());
    auto bad = g;
    bad.n_fingers = 0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = g;
    bad.dielectric_rel_permittivity = 0.9;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = g;
    bad.stopper_limit = g.finger_width * 1.01;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = g;
    bad.air_gap = 0.0;
    EXPECT_THROW(bad.validate(), DomainError);
}

struct MeasuredCase {
    const char* preset;
    double c_max;
    double c_min;
};

class MeasuredPairs : public ::testing::TestWithParam<MeasuredCase> {};

std::string case_name(const ::testing::TestParamInfo<MeasuredCase>& info) { return info.param.preset; }

TEST_P(MeasuredPairs, PresetReproducesMeasurement) {
    const auto& p = GetParam();
    const DeviceModel m = preset_device(p.preset);
    EXPECT_NEAR(device::total_capacitance(m, 0.0), p.c_max, 0.5 * pF);
    EXPECT_NEAR(device::total_capacitance(m, 50 * um), p.c_min, 0.5 * pF);
    EXPECT_NEAR(device::total_capacitance(m, -50 * um), p.c_min, 0.5 * pF);
    const auto range = device::capacitance_range(m);
    EXPECT_EQ(range.c_max, device::total_capacitance(m, 0.0));
    EXPECT_EQ(range.c_min, device::total_capacitance(m, m.geometry.stopper_limit));
}

INSTANTIATE_TEST_SUITE_P(Device, MeasuredPairs,
                         ::testing::Values(MeasuredCase{"pc_floating", 214 * pF, 140 * pF},
                                           MeasuredCase{"cc_floating", 214 * pF, 80 * pF},
                                           MeasuredCase{"pc_grounded", 181 * pF, 107 * pF},
                                           MeasuredCase{"cc_grounded", 181 * pF, 47 * pF}),
                         case_name);

TEST(Calibration, OracleFitAgreesWithShippedGeometry) {
    const oracle::CalibrationFit fit = oracle::fit_reference_geometry();
    EXPECT_LE(fit.worst_residual, 0.5 * pF);

    const DeviceModel pc = preset_device("pc_floating");
    const DeviceModel cc = preset_device("cc_floating");
    EXPECT_EQ(pc.geometry.n_fingers, fit.n_fingers);
    EXPECT_NEAR(pc.geometry.finger_length, fit.finger_length, 1e-9);
    EXPECT_NEAR(pc.geometry.finger_width, fit.finger_width, 1e-12);
    EXPECT_NEAR(pc.parasitics.c_substrate, fit.c_substrate, 0.05 * pF);
    EXPECT_NEAR(pc.parasitics.c_fringe_peak, fit.c_fringe_pc, 0.05 * pF);
    EXPECT_NEAR(cc.parasitics.c_fringe_peak, fit.c_fringe_cc, 0.05 * pF);
    EXPECT_NEAR(device::linear_capacitance(pc.geometry, 0.0), fit.c_lin_full, 0.05 * pF);
    EXPECT_NEAR(device::linear_capacitance(pc.geometry, 50 * um), fit.c_lin_travel, 0.05 * pF);
}

TEST(TotalCapacitance, GroundingSubtractsFixedAmount) {
    for (const char* kind : {"pc", "cc"}) {
        const DeviceModel floating = preset_device(std::string(kind) + "_floating");
        const DeviceModel grounded = preset_device(std::string(kind) + "_grounded");
        ASSERT_GE(floating.parasitics.c_substrate, 33 * pF);
        for (int i = -10; i <= 10; ++i) {
            const double x = 5 * um * i;
            const double cf = device::total_capacitance(floating, x);
            const double cg = device::total_capacitance(grounded, x);
            EXPECT_NEAR(cf - cg, 33 * pF, 1e-6 * pF);
            EXPECT_LE(cg, cf);
            EXPECT_GT(cg, 0.0);
        }
    }
}

TEST(TotalCapacitance, EffectiveSubstrateNeverNegative) {
    device::ParasiticModel p;
    p.c_substrate = 10 * pF;
    p.substrate_grounded = true;
    EXPECT_EQ(p.effective_substrate(), 0.0);
    p.substrate_grounded = false;
    EXPECT_EQ(p.effective_substrate(), 10 * pF);
}

TEST(TotalCapacitance, FloorKeepsCapacitancePositive) {
    DeviceModel m = preset_device("cc_grounded");
    m.parasitics.c_fringe_peak = 0.0;
    m.drie.depth = 40 * um;
    m.drie.cmin_plateau = 0.0;
    m.geometry.stopper_limit = m.geometry.finger_width;
    EXPECT_EQ(device::total_capacitance(m, m.geometry.finger_width), m.min_capacitance);
}

TEST(FringeShape, ZeroAtCentreOneAtStopper) {
    const auto g = preset_device("pc_floating").geometry;
    EXPECT_EQ(device::fringe_shape(g, 0.0), 0.0);
    EXPECT_NEAR(device::fringe_shape(g, g.stopper_limit), 1.0, 1e-15);
    EXPECT_NEAR(device::fringe_shape(g, -g.stopper_limit / 2), 0.5, 1e-15);
}

TEST(Drie, SwingEndpointsAndPlateau) {
    const BacksideDrieModel d = preset_device("pc_grounded").drie;
    EXPECT_NEAR(device::drie_capacitance_swing(d, 0.0), 64 * pF, 1e-3 * pF);
    EXPECT_NEAR(device::drie_capacitance_swing(d, 20 * um), 156 * pF, 1 * pF);
    EXPECT_EQ(device::cmin_vs_drie_depth(d, 40 * um), device::cmin_vs_drie_depth(d, 20 * um));
    EXPECT_EQ(device::cmin_vs_drie_depth(d, 1e-3), d.cmin_plateau);
}

TEST(Drie, CminNonIncreasingInDepth) {
    const BacksideDrieModel d = preset_device("pc_grounded").drie;
    double prev = device::cmin_vs_drie_depth(d, 0.0);
    for (int i = 1; i <= 400; ++i) {
        const double c = device::cmin_vs_drie_depth(d, 0.1 * um * i);
        EXPECT_LE(c, prev);
        prev = c;
    }
}

TEST(Drie, ExponentialShapeMatchesIndependentEvaluation) {
    const BacksideDrieModel d = preset_device("pc_grounded").drie;
    // Normalised exp(-k z) with exp(-k P) = residual, rescaled onto [plateau, baseline].
    const double k = std::log(1.0 / d.residual_fraction) / d.plateau_depth;
    for (double z : {1e-6, 5e-6, 12.5e-6, 19e-6}) {
        const double w = (std::exp(-k * z) - d.residual_fraction) / (1.0 - d.residual_fraction);
        EXPECT_NEAR(device::cmin_vs_drie_depth(d, z),
                    d.cmin_plateau + w * (d.cmin_baseline - d.cmin_plateau), 1e-18);
    }
}

TEST(Drie, MaximumIndependentOfDepth) {
    DeviceModel m = preset_device("pc_grounded");
    const double c0 = device::total_capacitance(m, 0.0);
    for (double z : {0.0, 5 * um, 20 * um, 60 * um}) {
        m.drie.depth = z;
        EXPECT_EQ(device::total_capacitance(m, 0.0), c0);
    }
    m.drie.depth = 20 * um;
    const double relief = m.drie.cmin_baseline - m.drie.cmin_plateau;
    EXPECT_NEAR(device::total_capacitance(m, 50 * um), 107 * pF - relief, 1e-6 * pF);
}

TEST(Drie, MassLossLinearInEtchedVolume) {
    const BacksideDrieModel d = preset_device("pc_grounded").drie;
    EXPECT_EQ(device::mass_loss_fraction(d, 0.0), 0.0);
    EXPECT_EQ(device::mass_loss_fraction(d, 20e-6), 0.025);
    EXPECT_NEAR(device::mass_loss_fraction(d, 10 * um), 0.0125, 1e-15);
    EXPECT_EQ(device::mass_loss_fraction(d, 35 * um), 0.025);
}

TEST(Drie, RejectsNegativeDepthAndInconsistentModel) {
    BacksideDrieModel d = preset_device("pc_grounded").drie;
    EXPECT_THROW((void)device::cmin_vs_drie_depth(d, -1e-9), DomainError);
    EXPECT_THROW((void)device::mass_loss_fraction(d, -1e-9), DomainError);
    d.cmin_plateau = d.cmin_baseline + 1 * pF;
    EXPECT_THROW(d.validate(), DomainError);
}

}  // namespace
