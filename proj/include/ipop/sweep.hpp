#pragma once

// Grid sweeps over circuit and drive parameters. Every grid point is an
// independent transient run; points may be evaluated concurrently but the
// result is always assembled in grid order.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ipop/circuit_sim.hpp"

namespace ipop::sweep {

enum class Axis { pulse_width, clock_period, c_store, frequency, c_min, l_fly };
enum class Metric { mean_v_out, net_converted_energy };

[[nodiscard]] std::string_view axis_name(Axis axis);
[[nodiscard]] std::string_view metric_name(Metric metric);
/// Throws ConfigError for unknown names.
[[nodiscard]] Axis parse_axis(std::string_view name);
[[nodiscard]] Metric parse_metric(std::string_view name);

/// Everything held fixed while one parameter moves.
struct SweepBase {
    circuit::CircuitParams circuit;
    circuit::CapacitanceDrive drive;
    circuit::SimulationOptions options;
    /// Run length shared by every point; 0 means 60 clock periods of the
    /// base clock.
    double duration = 0.0;

    [[nodiscard]] double run_duration() const;
    void validate() const;
};

/// Copy of `base` with one parameter replaced.
[[nodiscard]] SweepBase with_axis_value(const SweepBase& base, Axis axis, double value);

struct SweepSpec {
    Axis axis = Axis::pulse_width;
    std::vector<double> grid;
    SweepBase base;
    Metric metric = Metric::mean_v_out;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct SweepPoint {
    double value = 0.0;
    double metric = 0.0;
    double mean_v_out = 0.0;
    double net_converted = 0.0;
    bool ok = false;
    bool short_circuit = false;
    std::string error;  // set when the run failed
};

struct SweepResult {
    Axis axis = Axis::pulse_width;
    Metric metric = Metric::mean_v_out;
    std::vector<SweepPoint> points;
    std::size_t argmax = 0;
    /// Slope sign of the 3-point moving median between neighbouring points:
    /// +1 rising, -1 falling, 0 flat. One entry fewer than `points`.
    std::vector<int> trend;

    [[nodiscard]] const SweepPoint& best() const { return points.at(argmax); }
    /// Rises to the argmax then falls, judged on the moving median.
    [[nodiscard]] bool unimodal() const;
};

/// Runs `job(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

[[nodiscard]] double metric_of(const circuit::SimulationResult& run, Metric metric);
[[nodiscard]] SweepResult run_sweep(const SweepSpec& spec);

/// 3-point moving median; end points use their two-point window's lower value.
[[nodiscard]] std::vector<double> moving_median3(const std::vector<double>& values);

/// Metric-maximizing C_STORE over `grid`.
[[nodiscard]] double optimize_cstore(const SweepBase& base, const std::vector<double>& grid,
                                     Metric metric = Metric::mean_v_out, unsigned threads = 0);

/// Mechanical cycles per flyback: T_clk * f_mech.
[[nodiscard]] double clock_ratio(double clock_period, double mech_frequency);
/// clock_ratio at the argmax of a clock-period sweep.
[[nodiscard]] double clock_ratio_report(const SweepBase& base, const SweepResult& result);

struct SweepMap {
    Axis row_axis = Axis::pulse_width;
    Axis col_axis = Axis::c_store;
    Metric metric = Metric::mean_v_out;
    std::vector<double> rows;
    std::vector<double> cols;
    std::vector<SweepPoint> cells;  // row-major
    std::size_t argmax_row = 0;
    std::size_t argmax_col = 0;

    [[nodiscard]] const SweepPoint& at(std::size_t r, std::size_t c) const {
        return cells.at(r * cols.size() + c);
    }
};

[[nodiscard]] SweepMap run_sweep_2d(const SweepBase& base, Axis row_axis,
                                    const std::vector<double>& rows, Axis col_axis,
                                    const std::vector<double>& cols, Metric metric,
                                    unsigned threads = 0);

struct ViabilitySettings {
    double c_store = 2.2e-9;
    double pulse_width = 2e-6;
    double clock_cycles = 5.0;   // clock period in mechanical periods
    double clock_periods = 50.0; // run length in clock periods
};

/// Net converted energy over (frequency x C_min). Each cell uses its own
/// clock (clock_cycles / f) and runs for clock_periods of it.
[[nodiscard]] SweepMap low_frequency_viability_search(const std::vector<double>& frequencies,
                                                      const std::vector<double>& c_mins,
                                                      const SweepBase& base,
                                                      const ViabilitySettings& settings = {},
                                                      unsigned threads = 0);

}  // namespace ipop::sweep
