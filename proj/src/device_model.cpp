#include "ipop/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ipop/constants.hpp"
#include "ipop/errors.hpp"

namespace ipop::device {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw DomainError(message);
    }
}

void check_travel(const ElectrodeGeometry& geom, double x) {
    if (!std::isfinite(x) || std::abs(x) > geom.stopper_limit) {
        throw DomainError("displacement " + std::to_string(x) +
                          " m lies beyond the stopper limit " +
                          std::to_string(geom.stopper_limit) + " m");
    }
}

void check_depth(double depth) {
    require(std::isfinite(depth) && depth >= 0.0, "etch depth must be non-negative");
}

}  // namespace

void ElectrodeGeometry::validate() const {
    require(n_fingers >= 1, "n_fingers must be at least 1");
    require(finger_length > 0.0, "finger_length must be positive");
    require(finger_width > 0.0, "finger_width must be positive");
    require(dielectric_thickness > 0.0, "dielectric_thickness must be positive");
    require(air_gap > 0.0, "air_gap must be positive");
    require(dielectric_rel_permittivity >= 1.0, "dielectric_rel_permittivity must be >= 1");
    require(stopper_limit > 0.0, "stopper_limit must be positive");
    require(stopper_limit <= finger_width, "stopper_limit must not exceed finger_width");
}

void ParasiticModel::validate() const {
    require(c_substrate >= 0.0, "c_substrate must be non-negative");
    require(c_fringe_peak >= 0.0, "c_fringe_peak must be non-negative");
    require(grounding_reduction >= 0.0, "grounding_reduction must be non-negative");
}

double ParasiticModel::effective_substrate() const {
    return substrate_grounded ? std::max(0.0, c_substrate - grounding_reduction) : c_substrate;
}

void BacksideDrieModel::validate() const {
    check_depth(depth);
    require(cmin_plateau >= 0.0, "drie cmin_plateau must be non-negative");
    require(cmin_baseline >= cmin_plateau, "drie cmin_baseline must be >= cmin_plateau");
    require(c_max >= cmin_baseline, "drie c_max must be >= cmin_baseline");
    require(plateau_depth > 0.0, "drie plateau_depth must be positive");
    require(mass_loss_at_plateau >= 0.0 && mass_loss_at_plateau <= 1.0,
            "drie mass_loss_at_plateau must lie in [0, 1]");
    require(residual_fraction > 0.0 && residual_fraction < 1.0,
            "drie residual_fraction must lie in (0, 1)");
}

void DeviceModel::validate() const {
    geometry.validate();
    parasitics.validate();
    drie.validate();
    require(min_capacitance > 0.0, "min_capacitance must be positive");
}

double linear_capacitance(const ElectrodeGeometry& geom, double x) {
    check_travel(geom, x);
    const double er = geom.dielectric_rel_permittivity;
    const double per_width = geom.n_fingers * 2.0 * kVacuumPermittivity * er * geom.finger_length /
                             (geom.dielectric_thickness + er * geom.air_gap);
    return per_width * std::max(0.0, geom.finger_width - std::abs(x));
}

double fringe_shape(const ElectrodeGeometry& geom, double x) {
    check_travel(geom, x);
    const double s = std::sin(0.5 * std::numbers::pi * std::abs(x) / geom.stopper_limit);
    return s * s;
}

double total_capacitance(const DeviceModel& model, double x) {
    const double shape = fringe_shape(model.geometry, x);
    const double etch_relief =
        model.drie.cmin_baseline - cmin_vs_drie_depth(model.drie, model.drie.depth);
    const double c = linear_capacitance(model.geometry, x) +
                     model.parasitics.c_fringe_peak * shape +
                     model.parasitics.effective_substrate() - etch_relief * shape;
    return std::max(c, model.min_capacitance);
}

CapacitanceRange capacitance_range(const DeviceModel& model) {
    return {total_capacitance(model, 0.0),
            total_capacitance(model, model.geometry.stopper_limit)};
}

double cmin_vs_drie_depth(const BacksideDrieModel& drie, double depth) {
    check_depth(depth);
    if (depth >= drie.plateau_depth) {
        return drie.cmin_plateau;
    }
    // exp(-rate * plateau_depth) == residual_fraction; the curve is rescaled so
    // it lands on cmin_plateau exactly at plateau_depth.
    const double rate = -std::log(drie.residual_fraction) / drie.plateau_depth;
    const double decay =
        (std::exp(-rate * depth) - drie.residual_fraction) / (1.0 - drie.residual_fraction);
    return drie.cmin_plateau + (drie.cmin_baseline - drie.cmin_plateau) * decay;
}

double drie_capacitance_swing(const BacksideDrieModel& drie, double depth) {
    return drie.c_max - cmin_vs_drie_depth(drie, depth);
}

double mass_loss_fraction(const BacksideDrieModel& drie, double depth) {
    check_depth(depth);
    const double fraction =
        drie.mass_loss_at_plateau * std::min(depth, drie.plateau_depth) / drie.plateau_depth;
    return std::clamp(fraction, 0.0, 1.0);
}

}  // namespace ipop::device
