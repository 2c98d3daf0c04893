#pragma once

// Charge pump + flyback conditioning circuit driven by a time-varying
// capacitor.
//
//   C_RES --D1--> node_var --D2--> C_STORE --SW--> node_sw --L_FLY--> C_RES
//                    |                                |
//                  C_var                       D_FLY (anode to ground)
//
// R_LOAD sits across C_RES. States are the capacitor charges and the inductor
// current; voltages follow as v = q / C(t). Diodes and the switch are
// piecewise linear, so each conduction topology is a linear system stepped
// with the implicit trapezoidal rule. Conduction changes are located by
// bisection; when they start to cluster (trapezoidal ringing on a stiff diode
// branch) a few backward-Euler steps damp the oscillation.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ipop/device_model.hpp"
#include "ipop/mech_resonator.hpp"

namespace ipop::circuit {

struct DiodeModel {
    double forward_drop = 0.6;       // V
    double on_resistance = 10.0;     // ohm
    double off_conductance = 1e-10;  // S

    void validate(const std::string& name) const;
    /// V_f = 0, R_on = 1 mOhm.
    [[nodiscard]] static DiodeModel ideal();
};

struct SwitchModel {
    double on_resistance = 10.0;     // ohm
    double off_conductance = 1e-10;  // S
    double clock_period = 0.0;       // s
    double pulse_width = 0.0;        // s
    double clock_offset = 0.0;       // s, first rising edge
    bool enabled = true;             // false keeps the switch open forever

    void validate() const;
    [[nodiscard]] bool conducting(double t) const;
};

struct CircuitParams {
    double c_res = 2e-6;
    double c_store = 2.2e-9;
    double l_fly = 4e-3;
    double r_load = 20e6;
    DiodeModel d1;
    DiodeModel d2;
    DiodeModel d_fly;
    SwitchModel sw;
    double v_initial = 5.0;  // precharge of C_RES, C_STORE and C_var

    /// Throws ConfigError when C_RES < 100 C_STORE, DomainError otherwise.
    void validate() const;
};

enum class DriveKind {
    analytic_abs_sine,   // C_max - (C_max - C_min) |sin(2 pi f t)|
    coupled_mechanical,  // device C(x(t)) from a resonator run
    direct_sine,         // midpoint + half-range cos(2 pi f t); debugging aid
};

/// Uniformly sampled C(t) for the coupled drive.
struct CapacitanceTable {
    double dt = 0.0;
    std::vector<double> values;
};

struct CapacitanceDrive {
    DriveKind kind = DriveKind::analytic_abs_sine;
    double c_max = 0.0;
    double c_min = 0.0;
    double mech_frequency = 0.0;
    std::shared_ptr<const CapacitanceTable> table;

    void validate() const;
    [[nodiscard]] static CapacitanceDrive abs_sine(double c_max, double c_min, double frequency);
};

[[nodiscard]] double capacitance_drive_eval(const CapacitanceDrive& drive, double t);

/// Runs the resonator for `duration` and maps x(t) through the device model.
[[nodiscard]] CapacitanceDrive coupled_drive(const device::DeviceModel& device,
                                             const mech::ResonatorParams& resonator,
                                             const mech::ExcitationSpec& excitation,
                                             double duration);

enum Flag : std::uint32_t {
    kFlagD1 = 1u << 0,
    kFlagD2 = 1u << 1,
    kFlagDFly = 1u << 2,
    kFlagSwitch = 1u << 3,
    kFlagShortCircuit = 1u << 4,
};

[[nodiscard]] std::string flags_to_string(std::uint32_t flags);

struct CircuitState {
    double t = 0.0;
    double q_var = 0.0;
    double q_store = 0.0;
    double q_res = 0.0;
    double i_fly = 0.0;
    bool d1_on = false;
    bool d2_on = false;
    bool dfly_on = false;
    bool switch_on = false;

    /// Everything precharged to v, inductor idle, diodes open.
    [[nodiscard]] static CircuitState precharged(const CircuitParams& params, double c_var, double v,
                                                 double t = 0.0);
    [[nodiscard]] double v_store(const CircuitParams& params) const { return q_store / params.c_store; }
    [[nodiscard]] double v_res(const CircuitParams& params) const { return q_res / params.c_res; }
};

struct EnergyLedger {
    double e_mech_in = 0.0;       // -integral(v_var^2 / 2 dC)
    double e_source = 0.0;        // no independent source in this topology
    double e_load = 0.0;
    double e_dissipated = 0.0;    // diodes, switch, leakage
    double e_stored_delta = 0.0;  // all capacitors + inductor
    double net_converted = 0.0;   // e_load + e_stored_delta - e_source
    // Output-port accounting (not part of the balance).
    double e_res_delta = 0.0;     // change of C_RES energy
    double e_to_output = 0.0;     // delivered to C_RES by the inductor
    double e_from_output = 0.0;   // drawn from C_RES through D1

    [[nodiscard]] double imbalance() const;
    [[nodiscard]] double largest_term() const;
    [[nodiscard]] double relative_imbalance() const;
};

struct TrajectorySample {
    double t = 0.0;
    double c_var = 0.0;
    double v_var = 0.0;
    double v_store = 0.0;
    double v_out = 0.0;
    double i_fly = 0.0;
    std::uint32_t flags = 0;
};

struct SimulationOptions {
    double step_scale = 1.0;       // multiplies every step bound
    double sample_interval = 0.0;  // s; 0 records start and end only
    double tail_fraction = 0.2;    // window for mean_v_out_tail
    double event_resolution = 1e-9;
    int restart_steps = 0;         // forced backward-Euler steps after a discontinuity
};

struct SimulationResult {
    std::vector<TrajectorySample> samples;
    EnergyLedger ledger;
    CircuitState final_state;
    double mean_v_out_tail = 0.0;
    bool short_circuit_regime = false;
    double short_circuit_time = 0.0;  // s spent with both pump diodes on under a closed switch
    long long accepted_steps = 0;
    long long conduction_events = 0;
    long long flybacks = 0;
};

/// Transient run from the precharged state at t = 0 with C_var at C(0).
[[nodiscard]] SimulationResult simulate(const CircuitParams& params,
                                        const CapacitanceDrive& drive, double duration,
                                        const SimulationOptions& options = {});

/// Continue a run from an arbitrary state for `duration`.
[[nodiscard]] SimulationResult simulate_from(const CircuitState& start, const CircuitParams& params,
                                             const CapacitanceDrive& drive, double duration,
                                             const SimulationOptions& options = {});

/// One ideal-diode pump stroke C_max -> C_min:
/// v' = (C_max v_res + C_store v) / (C_min + C_store). Below the pump regime
/// (v < v_res) C_STORE is first topped up to v_res through D1-D2; above the
/// fixed point D2 never opens and v is returned unchanged.
[[nodiscard]] double charge_pump_cycle(double v_store, double v_res, double c_max, double c_min,
                                       double c_store);

struct FlybackOutcome {
    CircuitState state;
    EnergyLedger ledger;
    double energy_to_reservoir = 0.0;  // J delivered into C_RES by the inductor
    double duration = 0.0;             // s from closure until the freewheel ends
    bool short_circuit_regime = false;
};

/// Closes the switch at state.t for params.sw.pulse_width, then lets the
/// inductor freewheel through D_FLY until its current is back to zero.
[[nodiscard]] FlybackOutcome flyback_event(const CircuitState& state, const CircuitParams& params,
                                           const CapacitanceDrive& drive);

/// Returns the run's ledger; throws NumericalError when the balance residual
/// exceeds `tolerance` relative to the largest term.
[[nodiscard]] EnergyLedger energy_ledger(const SimulationResult& result, double tolerance = 1e-3);

}  // namespace ipop::circuit
