#include "ipop/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "ipop/errors.hpp"

namespace ipop::sweep {

namespace {

constexpr double kDefaultClockPeriods = 60.0;

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw DomainError(message);
    }
}

void check_grid(const std::vector<double>& grid, const std::string& what) {
    require(!grid.empty(), what + " grid must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(std::isfinite(grid[i]), what + " grid values must be finite");
        if (i > 0) {
            require(grid[i] > grid[i - 1], what + " grid must be strictly increasing");
        }
    }
}

SweepPoint evaluate(const SweepBase& base, double value, Metric metric, double duration) {
    SweepPoint pt;
    pt.value = value;
    try {
        const circuit::SimulationResult run =
            circuit::simulate(base.circuit, base.drive, duration, base.options);
        pt.mean_v_out = run.mean_v_out_tail;
        pt.net_converted = run.ledger.net_converted;
        pt.metric = metric_of(run, metric);
        pt.short_circuit = run.short_circuit_regime;
        pt.ok = std::isfinite(pt.metric);
        if (!pt.ok) {
            pt.error = "metric is not finite";
        }
    } catch (const std::exception& e) {
        pt.ok = false;
        pt.error = e.what();
    }
    return pt;
}

std::size_t argmax_of(const std::vector<SweepPoint>& points) {
    std::size_t best = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].ok && (best == points.size() || points[i].metric > points[best].metric)) {
            best = i;
        }
    }
    if (best == points.size()) {
        throw NumericalError("every sweep point failed");
    }
    return best;
}

int sign_of(double d, double scale) {
    const double tol = 1e-12 * std::max(scale, 1e-300);
    if (d > tol) return 1;
    if (d < -tol) return -1;
    return 0;
}

}  // namespace

std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::pulse_width: return "pulse_width";
        case Axis::clock_period: return "clock_period";
        case Axis::c_store: return "c_store";
        case Axis::frequency: return "frequency";
        case Axis::c_min: return "c_min";
        case Axis::l_fly: return "l_fly";
    }
    return "?";
}

std::string_view metric_name(Metric metric) {
    return metric == Metric::mean_v_out ? "mean_v_out" : "net_converted_energy";
}

Axis parse_axis(std::string_view name) {
    for (Axis a : {Axis::pulse_width, Axis::clock_period, Axis::c_store, Axis::frequency,
                   Axis::c_min, Axis::l_fly}) {
        if (axis_name(a) == name) {
            return a;
        }
    }
    throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::mean_v_out, Metric::net_converted_energy}) {
        if (metric_name(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown sweep metric '" + std::string(name) + "'");
}

double SweepBase::run_duration() const {
    if (duration > 0.0) {
        return duration;
    }
    require(circuit.sw.enabled && circuit.sw.clock_period > 0.0,
            "sweep duration must be set when the switch is disabled");
    return kDefaultClockPeriods * circuit.sw.clock_period;
}

void SweepBase::validate() const {
    circuit.validate();
    drive.validate();
    require(duration >= 0.0 && std::isfinite(duration), "sweep duration must be non-negative");
    (void)run_duration();
}

SweepBase with_axis_value(const SweepBase& base, Axis axis, double value) {
    SweepBase b = base;
    switch (axis) {
        case Axis::pulse_width: b.circuit.sw.pulse_width = value; break;
        case Axis::clock_period: b.circuit.sw.clock_period = value; break;
        case Axis::c_store: b.circuit.c_store = value; break;
        case Axis::l_fly: b.circuit.l_fly = value; break;
        case Axis::frequency:
            require(b.drive.kind != circuit::DriveKind::coupled_mechanical,
                    "frequency axis needs an analytic capacitance drive");
            b.drive.mech_frequency = value;
            break;
        case Axis::c_min:
            require(b.drive.kind != circuit::DriveKind::coupled_mechanical,
                    "c_min axis needs an analytic capacitance drive");
            b.drive.c_min = value;
            break;
    }
    return b;
}

void SweepSpec::validate() const {
    check_grid(grid, std::string(axis_name(axis)));
    base.validate();
}

bool SweepResult::unimodal() const {
    // Rising (or flat) up to the argmax, falling (or flat) after it.
    for (std::size_t i = 0; i < trend.size(); ++i) {
        if (i < argmax && trend[i] < 0) return false;
        if (i >= argmax && trend[i] > 0) return false;
    }
    return true;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& job) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    }
    for (auto& t : pool) t.join();
}

double metric_of(const circuit::SimulationResult& run, Metric metric) {
    return metric == Metric::mean_v_out ? run.mean_v_out_tail : run.ledger.net_converted;
}

std::vector<double> moving_median3(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (n < 3) {
            out[i] = values[i];
        } else if (i == 0) {
            out[i] = std::min(values[0], values[1]);
        } else if (i == n - 1) {
            out[i] = std::min(values[n - 2], values[n - 1]);
        } else {
            double w[3] = {values[i - 1], values[i], values[i + 1]};
            std::sort(w, w + 3);
            out[i] = w[1];
        }
    }
    return out;
}

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepBase> bases;
    bases.reserve(spec.grid.size());
    for (double v : spec.grid) {
        bases.push_back(with_axis_value(spec.base, spec.axis, v));
    }
    const double duration = spec.base.run_duration();

    SweepResult result;
    result.axis = spec.axis;
    result.metric = spec.metric;
    result.points.resize(spec.grid.size());
    parallel_for(spec.grid.size(), spec.threads, [&](std::size_t i) {
        result.points[i] = evaluate(bases[i], spec.grid[i], spec.metric, duration);
    });
    result.argmax = argmax_of(result.points);

    std::vector<double> metric;
    double scale = 0.0;
    for (const auto& p : result.points) {
        metric.push_back(p.ok ? p.metric : -std::numeric_limits<double>::infinity());
        if (p.ok) scale = std::max(scale, std::abs(p.metric));
    }
    const std::vector<double> smooth = moving_median3(metric);
    for (std::size_t i = 0; i + 1 < smooth.size(); ++i) {
        result.trend.push_back(sign_of(smooth[i + 1] - smooth[i], scale));
    }
    return result;
}

double optimize_cstore(const SweepBase& base, const std::vector<double>& grid, Metric metric,
                       unsigned threads) {
    SweepSpec spec;
    spec.axis = Axis::c_store;
    spec.grid = grid;
    spec.base = base;
    spec.metric = metric;
    spec.threads = threads;
    return run_sweep(spec).best().value;
}

double clock_ratio(double clock_period, double mech_frequency) {
    require(clock_period > 0.0 && mech_frequency > 0.0,
            "clock ratio needs positive clock period and frequency");
    return clock_period * mech_frequency;
}

double clock_ratio_report(const SweepBase& base, const SweepResult& result) {
    require(result.axis == Axis::clock_period, "clock ratio needs a clock-period sweep");
    return clock_ratio(result.best().value, base.drive.mech_frequency);
}

SweepMap run_sweep_2d(const SweepBase& base, Axis row_axis, const std::vector<double>& rows,
                      Axis col_axis, const std::vector<double>& cols, Metric metric,
                      unsigned threads) {
    require(row_axis != col_axis, "2-D sweep needs two distinct axes");
    check_grid(rows, std::string(axis_name(row_axis)));
    check_grid(cols, std::string(axis_name(col_axis)));
    base.validate();
    const double duration = base.run_duration();

    SweepMap map;
    map.row_axis = row_axis;
    map.col_axis = col_axis;
    map.metric = metric;
    map.rows = rows;
    map.cols = cols;
    map.cells.resize(rows.size() * cols.size());
    parallel_for(map.cells.size(), threads, [&](std::size_t k) {
        const std::size_t r = k / cols.size();
        const std::size_t c = k % cols.size();
        const SweepBase b =
            with_axis_value(with_axis_value(base, row_axis, rows[r]), col_axis, cols[c]);
        map.cells[k] = evaluate(b, cols[c], metric, duration);
    });
    const std::size_t best = argmax_of(map.cells);
    map.argmax_row = best / cols.size();
    map.argmax_col = best % cols.size();
    return map;
}

SweepMap low_frequency_viability_search(const std::vector<double>& frequencies,
                                        const std::vector<double>& c_mins, const SweepBase& base,
                                        const ViabilitySettings& settings, unsigned threads) {
    check_grid(frequencies, "frequency");
    check_grid(c_mins, "c_min");
    require(settings.clock_cycles > 0.0 && settings.clock_periods > 0.0,
            "viability clock settings must be positive");

    SweepMap map;
    map.row_axis = Axis::frequency;
    map.col_axis = Axis::c_min;
    map.metric = Metric::net_converted_energy;
    map.rows = frequencies;
    map.cols = c_mins;
    map.cells.resize(frequencies.size() * c_mins.size());

    SweepBase fixed = base;
    fixed.circuit.c_store = settings.c_store;
    fixed.circuit.sw.pulse_width = settings.pulse_width;
    fixed.circuit.sw.enabled = true;

    parallel_for(map.cells.size(), threads, [&](std::size_t k) {
        const std::size_t r = k / c_mins.size();
        const std::size_t c = k % c_mins.size();
        SweepBase b = with_axis_value(with_axis_value(fixed, Axis::frequency, frequencies[r]),
                                      Axis::c_min, c_mins[c]);
        b.circuit.sw.clock_period = settings.clock_cycles / frequencies[r];
        map.cells[k] = evaluate(b, c_mins[c], Metric::net_converted_energy,
                                settings.clock_periods * b.circuit.sw.clock_period);
    });
    const std::size_t best = argmax_of(map.cells);
    map.argmax_row = best / c_mins.size();
    map.argmax_col = best % c_mins.size();
    return map;
}

}  // namespace ipop::sweep
