#pragma once

// Variable capacitance of the in-plane overlap plate structure.
//
// C(x) = C_lin(x) + C_ff(x) + C_sub - dC_drie(depth) * s(|x|)
//
// C_lin is the analytic overlap term, C_ff a fringe contribution that grows
// as the electrodes slide apart, and C_sub the substrate parasitic (reduced
// by a fixed amount when the substrate is grounded). A backside etch lowers
// the minimum-capacitance end of the curve without touching C(0).

namespace ipop::device {

struct ElectrodeGeometry {
    int n_fingers = 1;
    double finger_length = 0.0;                // m
    double finger_width = 0.0;                 // m
    double dielectric_thickness = 0.0;         // m, nitride passivation
    double air_gap = 1.5e-6;                   // m
    double dielectric_rel_permittivity = 1.0;
    double stopper_limit = 50e-6;              // m

    void validate() const;
};

struct ParasiticModel {
    double c_substrate = 0.0;         // F
    double c_fringe_peak = 0.0;       // F, fringe term at full travel
    bool substrate_grounded = false;
    double grounding_reduction = 33e-12;  // F

    void validate() const;
    [[nodiscard]] double effective_substrate() const;
};

struct BacksideDrieModel {
    double depth = 0.0;             // m, applied etch depth
    double c_max = 0.0;             // F, depth-independent maximum
    double cmin_baseline = 0.0;     // F, minimum capacitance without etch
    double cmin_plateau = 0.0;      // F, minimum capacitance for depth >= plateau_depth
    double plateau_depth = 20e-6;   // m
    double mass_loss_at_plateau = 0.025;
    /// Fraction of the (baseline - plateau) span the un-normalised exponential
    /// still carries at plateau_depth; fixes the decay rate.
    double residual_fraction = 0.01;

    void validate() const;
};

struct DeviceModel {
    ElectrodeGeometry geometry;
    ParasiticModel parasitics;
    BacksideDrieModel drie;
    double min_capacitance = 1e-12;  // F, floor that keeps C(x) away from zero

    void validate() const;
};

struct CapacitanceRange {
    double c_max = 0.0;
    double c_min = 0.0;
};

/// Analytic overlap capacitance N * 2 e0 er L_F (W_F - |x|) / (t_NIT + er g_AIR).
/// Throws DomainError when |x| exceeds the stopper limit.
[[nodiscard]] double linear_capacitance(const ElectrodeGeometry& geom, double x);

/// Smooth weight in [0, 1]: zero at full overlap, one at the stopper.
[[nodiscard]] double fringe_shape(const ElectrodeGeometry& geom, double x);

[[nodiscard]] double total_capacitance(const DeviceModel& model, double x);

/// Extremes over the admissible travel: C(0) and C(+-stopper).
[[nodiscard]] CapacitanceRange capacitance_range(const DeviceModel& model);

/// Minimum capacitance after a backside etch of the given depth. Decays
/// exponentially from cmin_baseline and is exactly cmin_plateau from
/// plateau_depth on.
[[nodiscard]] double cmin_vs_drie_depth(const BacksideDrieModel& drie, double depth);

/// c_max - cmin_vs_drie_depth(depth).
[[nodiscard]] double drie_capacitance_swing(const BacksideDrieModel& drie, double depth);

/// Proof-mass fraction removed by the etch; linear in etched volume.
[[nodiscard]] double mass_loss_fraction(const BacksideDrieModel& drie, double depth);

}  // namespace ipop::device
