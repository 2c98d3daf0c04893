#pragma once

// Reproduction checks for the published figures and numbers. Each check
// loads the shipped presets, runs the models and compares against pinned
// targets and tolerances.

#include <functional>
#include <string>
#include <vector>

namespace ipop::acceptance {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;  // measured values against their targets
    double seconds = 0.0;
};

struct AcceptanceOptions {
    unsigned threads = 0;  // sweep workers; 0 means hardware concurrency
    /// Called after every criterion (progress reporting).
    std::function<void(const CriterionResult&)> on_result;
};

/// |X|/Y for base excitation of an underdamped oscillator, r = f / f0.
[[nodiscard]] double relative_transmissibility(double r, double quality_factor);

/// Ideal-diode pump strokes v_n starting from v0 with a fixed reservoir.
[[nodiscard]] std::vector<double> pump_recurrence(double v0, double v_res, double c_max,
                                                  double c_min, double c_store, int strokes);

/// Median spacing of upward jumps in v(t); 0 when fewer than two are found.
[[nodiscard]] double sawtooth_period(const std::vector<double>& t, const std::vector<double>& v,
                                     double min_separation);

[[nodiscard]] CriterionResult power_regression();          // 1
[[nodiscard]] CriterionResult power_density();             // 2
[[nodiscard]] CriterionResult drie_projection();           // 3
[[nodiscard]] CriterionResult charge_pump_equivalence();   // 4
[[nodiscard]] CriterionResult energy_balance();            // 5
[[nodiscard]] CriterionResult pulse_width_sweep(unsigned threads = 0);   // 6
[[nodiscard]] CriterionResult clock_period_sweep(unsigned threads = 0);  // 7
[[nodiscard]] CriterionResult cstore_optimum(unsigned threads = 0);      // 8
[[nodiscard]] CriterionResult low_frequency_run();         // 9
[[nodiscard]] CriterionResult mechanics();                 // 10
[[nodiscard]] CriterionResult calibration_round_trip();    // 11

[[nodiscard]] std::vector<CriterionResult> run_all(const AcceptanceOptions& options = {});

/// "[PASS] 1 title: detail" per line.
[[nodiscard]] std::string format_table(const std::vector<CriterionResult>& results);

}  // namespace ipop::acceptance
