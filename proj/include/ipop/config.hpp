#pragma once

// Run configuration: a sectioned key/value text format.
//
//   # comment
//   preset = cc_grounded      (optional, before the first section)
//   [energy]
//   v_in = 5
//   c_min = 4.7e-11
//
// All numbers are plain SI values. A preset line loads the named bundle first;
// later keys override it. Sections that are neither in the file nor in the
// preset stay absent, and subcommands needing them report that.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipop/circuit_sim.hpp"
#include "ipop/device_model.hpp"
#include "ipop/energy_model.hpp"
#include "ipop/mech_resonator.hpp"
#include "ipop/sweep.hpp"

namespace ipop::config {

struct DeviceSection {
    device::DeviceModel model;
};

struct ResonatorSection {
    double footprint_area = 0.0;      // m^2
    double silicon_thickness = 0.0;   // m
    double removed_fraction = 0.0;    // silicon etched away between electrodes
    double resonant_frequency = 0.0;  // Hz
    double quality_factor = 20.0;
    double stopper_limit = 50e-6;     // m
    mech::StopperModel stopper_model = mech::StopperModel::inelastic_stop;
    double amplitude = 5e-6;          // m, base excitation
    double frequency = 0.0;           // Hz, single-tone run; 0 means resonant_frequency
    double duration = 0.0;            // s, single-tone run; 0 means 200 periods
    double sweep_start = 0.0;
    double sweep_stop = 0.0;
    double sweep_step = 0.0;

    [[nodiscard]] mech::ResonatorParams params() const;
    [[nodiscard]] mech::ExcitationSpec tone() const;
    [[nodiscard]] mech::ExcitationSpec sweep() const;
};

struct EnergySection {
    energy::HarvestOperatingPoint op;
    /// Backside-etch projection: depth (m) and frequency (Hz, 0 means
    /// op.frequency).
    double projection_depth = 0.0;
    double projection_frequency = 0.0;
};

struct CircuitSection {
    circuit::CircuitParams params;
    circuit::SimulationOptions options;
    double duration = 0.0;  // s; 0 means 60 clock periods
};

enum class DriveSource { abs_sine, direct_sine, coupled_mechanical };

struct DriveSection {
    DriveSource source = DriveSource::abs_sine;
    double c_max = 0.0;
    double c_min = 0.0;
    double frequency = 0.0;
    /// Clock period in mechanical periods; overrides circuit.clock_period when > 0.
    double clock_cycles = 0.0;
};

enum class GridSpacing { linear, log };

struct SweepSection {
    sweep::Axis axis = sweep::Axis::pulse_width;
    sweep::Metric metric = sweep::Metric::mean_v_out;
    double start = 0.0;
    double stop = 0.0;
    int points = 0;
    GridSpacing spacing = GridSpacing::linear;
    double duration = 0.0;  // s; 0 means 60 base clock periods
    int threads = 0;

    [[nodiscard]] std::vector<double> grid() const;
};

struct RunConfig {
    std::string preset;
    std::optional<DeviceSection> device;
    std::optional<ResonatorSection> resonator;
    std::optional<EnergySection> energy;
    std::optional<CircuitSection> circuit;
    std::optional<DriveSection> drive;
    std::optional<SweepSection> sweep;

    /// Circuit parameters with the drive's clock_cycles applied.
    [[nodiscard]] circuit::CircuitParams circuit_params() const;
    /// Capacitance drive; the coupled source needs device and resonator.
    [[nodiscard]] circuit::CapacitanceDrive capacitance_drive(double duration) const;
    [[nodiscard]] double circuit_duration() const;
    [[nodiscard]] sweep::SweepBase sweep_base() const;
};

/// Parses and validates. Throws ConfigError listing every problem, one per
/// line, prefixed with "line N: " when the location is known.
[[nodiscard]] RunConfig parse_config(std::string_view text);
[[nodiscard]] RunConfig load_config_file(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
[[nodiscard]] std::string serialize_config(const RunConfig& config);

/// Throws ConfigError for invariant violations of the present sections.
void validate_config(const RunConfig& config);

[[nodiscard]] std::vector<std::string> preset_names();
/// Shipped preset text; throws ConfigError for unknown names.
[[nodiscard]] std::string_view preset_text(std::string_view name);
[[nodiscard]] RunConfig load_preset(std::string_view name);

}  // namespace ipop::config
