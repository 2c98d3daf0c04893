#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ipop::mech {

enum class StopperModel {
    none,            // unlimited travel
    clamp,           // position saturates, velocity kept
    inelastic_stop,  // position saturates, velocity zeroed on contact
};

struct ResonatorParams {
    double mass = 0.0;            // kg
    double stiffness = 0.0;       // N/m
    double quality_factor = 20.0;
    double stopper_limit = 50e-6; // m
    StopperModel stopper_model = StopperModel::inelastic_stop;

    void validate() const;
    /// b = sqrt(k m) / Q
    [[nodiscard]] double damping() const;
    [[nodiscard]] double natural_frequency() const;
};

struct ExcitationSpec {
    enum class Kind { sinusoid, frequency_sweep };

    Kind kind = Kind::sinusoid;
    double amplitude = 5e-6;  // m, base displacement amplitude
    double frequency = 0.0;   // Hz, sinusoid
    // Linear chirp from sweep_start to sweep_stop over the run; sweep_step is
    // the grid spacing used by frequency_response.
    double sweep_start = 0.0;
    double sweep_stop = 0.0;
    double sweep_step = 0.0;

    void validate() const;
    [[nodiscard]] std::vector<double> sweep_grid() const;
};

/// Optional electrostatic back-force F = 1/2 V^2 dC/dx on the proof mass.
struct ElectrostaticCoupling {
    double bias_voltage = 0.0;
    std::function<double(double)> capacitance;  // C(x) in farads
};

struct MotionOptions {
    double max_step = 0.0;  // s; 0 selects T0 / 2000
    double initial_displacement = 0.0;
    double initial_velocity = 0.0;
    std::optional<ElectrostaticCoupling> coupling;
};

struct MotionTrace {
    std::vector<double> time;          // s
    std::vector<double> displacement;  // m, relative to the base
    std::vector<double> velocity;      // m/s
    int stopper_contacts = 0;
};

struct FrequencyResponse {
    std::vector<double> frequency;     // Hz
    std::vector<double> peak;          // m, max |x| over the retained window
    double stopper_limit = 0.0;        // m, 0 when stoppers are off

    /// Argmax of the response. A run of grid points pinned at the stopper is
    /// reported by its centre.
    [[nodiscard]] double peak_frequency() const;
};

[[nodiscard]] double proof_mass_from_geometry(double footprint_area, double silicon_thickness,
                                              double density, double removed_fraction);

[[nodiscard]] double stiffness_from_resonance(double mass, double f0);

/// Base-excited m x'' + b x' + k x = -m a_base(t) integrated with fixed-step
/// RK4; stoppers are applied after every step.
[[nodiscard]] MotionTrace simulate_motion(const ResonatorParams& params,
                                          const ExcitationSpec& excitation, double duration,
                                          const MotionOptions& options = {});

/// Steady-state peak displacement per frequency: 200 excitation periods,
/// the first 150 discarded.
[[nodiscard]] FrequencyResponse frequency_response(const ResonatorParams& params,
                                                   double amplitude,
                                                   std::span<const double> frequencies);

}  // namespace ipop::mech
