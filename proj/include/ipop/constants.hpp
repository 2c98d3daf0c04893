#pragma once

#include <numbers>

namespace ipop {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kSiliconDensity = 2330.0;                // kg/m^3
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// 11 x 6.5 x 0.9 mm^3 package volume, pads excluded.
inline constexpr double kDefaultDeviceVolume = 11e-3 * 6.5e-3 * 0.9e-3;

}  // namespace ipop
