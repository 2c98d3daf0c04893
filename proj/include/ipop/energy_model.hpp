#pragma once

#include "ipop/constants.hpp"
#include "ipop/device_model.hpp"

namespace ipop::energy {

/// Operating point of an ideally lossless conditioning circuit.
struct HarvestOperatingPoint {
    double v_in = 0.0;       // V, starting voltage
    double c_max = 0.0;      // F
    double c_min = 0.0;      // F
    double frequency = 0.0;  // Hz, mechanical
    double device_volume = kDefaultDeviceVolume;  // m^3

    void validate() const;
};

/// E = 1/2 V_in^2 (C_max - C_min) (C_max / C_min)
[[nodiscard]] double cycle_energy(const HarvestOperatingPoint& op);

/// P = 2 f E; the capacitance reaches C_min twice per mechanical period.
[[nodiscard]] double harvested_power(const HarvestOperatingPoint& op);

/// W/m^3. Numerically 1 W/m^3 == 1 uW/cm^3.
[[nodiscard]] double power_density(const HarvestOperatingPoint& op);

[[nodiscard]] constexpr double to_uw_per_cm3(double w_per_m3) { return w_per_m3; }

/// Power density after a backside etch of `depth`: C_max from the etch
/// model, C_min from cmin_vs_drie_depth.
[[nodiscard]] double drie_power_density_projection(double v_in, double frequency,
                                                   const device::BacksideDrieModel& drie,
                                                   double depth,
                                                   double device_volume = kDefaultDeviceVolume);

}  // namespace ipop::energy
