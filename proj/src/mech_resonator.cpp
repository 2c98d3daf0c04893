#include "ipop/mech_resonator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ipop/constants.hpp"
#include "ipop/errors.hpp"

namespace ipop::mech {

namespace {

constexpr int kSteadyStatePeriods = 200;
constexpr int kDiscardedPeriods = 150;
constexpr int kStepsPerPeriod = 2000;

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw DomainError(message);
    }
}

/// Base acceleration and the excitation phase helpers.
struct BaseMotion {
    ExcitationSpec spec;
    double duration;

    [[nodiscard]] double acceleration(double t) const {
        const double a = spec.amplitude;
        if (spec.kind == ExcitationSpec::Kind::sinusoid) {
            const double w = kTwoPi * spec.frequency;
            return -a * w * w * std::sin(w * t);
        }
        // y = A sin(phi), phi = 2 pi (f0 t + r t^2 / 2)
        const double rate = (spec.sweep_stop - spec.sweep_start) / duration;
        const double phase = kTwoPi * (spec.sweep_start * t + 0.5 * rate * t * t);
        const double dphase = kTwoPi * (spec.sweep_start + rate * t);
        const double ddphase = kTwoPi * rate;
        return a * (ddphase * std::cos(phase) - dphase * dphase * std::sin(phase));
    }

    [[nodiscard]] double highest_frequency() const {
        return spec.kind == ExcitationSpec::Kind::sinusoid
                   ? spec.frequency
                   : std::max(spec.sweep_start, spec.sweep_stop);
    }
};

}  // namespace

void ResonatorParams::validate() const {
    require(mass > 0.0 && std::isfinite(mass), "mass must be positive");
    require(stiffness > 0.0 && std::isfinite(stiffness), "stiffness must be positive");
    require(quality_factor > 0.5, "quality_factor must exceed 0.5 (underdamped)");
    require(stopper_limit > 0.0, "stopper_limit must be positive");
}

double ResonatorParams::damping() const { return std::sqrt(stiffness * mass) / quality_factor; }

double ResonatorParams::natural_frequency() const {
    return std::sqrt(stiffness / mass) / kTwoPi;
}

void ExcitationSpec::validate() const {
    require(amplitude >= 0.0, "excitation amplitude must be non-negative");
    if (kind == Kind::sinusoid) {
        require(frequency > 0.0, "excitation frequency must be positive");
    } else {
        require(sweep_start > 0.0 && sweep_stop > 0.0, "sweep frequencies must be positive");
        require(sweep_stop > sweep_start, "sweep_stop must exceed sweep_start");
        require(sweep_step > 0.0, "sweep_step must be positive");
    }
}

std::vector<double> ExcitationSpec::sweep_grid() const {
    std::vector<double> grid;
    const auto count = static_cast<int>(std::floor((sweep_stop - sweep_start) / sweep_step + 1e-9));
    grid.reserve(static_cast<std::size_t>(count) + 1);
    for (int i = 0; i <= count; ++i) {
        grid.push_back(sweep_start + i * sweep_step);
    }
    return grid;
}

double FrequencyResponse::peak_frequency() const {
    if (peak.empty()) {
        throw DomainError("empty frequency response");
    }
    const auto it = std::max_element(peak.begin(), peak.end());
    const auto best = static_cast<std::size_t>(it - peak.begin());
    if (stopper_limit <= 0.0 || *it < stopper_limit * (1.0 - 1e-9)) {
        return frequency[best];
    }
    // Flat-topped: centre of the contiguous run of capped points.
    auto capped = [&](std::size_t i) { return peak[i] >= stopper_limit * (1.0 - 1e-9); };
    std::size_t lo = best;
    std::size_t hi = best;
    while (lo > 0 && capped(lo - 1)) {
        --lo;
    }
    while (hi + 1 < peak.size() && capped(hi + 1)) {
        ++hi;
    }
    return 0.5 * (frequency[lo] + frequency[hi]);
}

double proof_mass_from_geometry(double footprint_area, double silicon_thickness, double density,
                                double removed_fraction) {
    require(footprint_area > 0.0, "footprint_area must be positive");
    require(silicon_thickness > 0.0, "silicon_thickness must be positive");
    require(density > 0.0, "density must be positive");
    require(removed_fraction >= 0.0 && removed_fraction < 1.0,
            "removed_fraction must lie in [0, 1)");
    return footprint_area * silicon_thickness * density * (1.0 - removed_fraction);
}

double stiffness_from_resonance(double mass, double f0) {
    require(mass > 0.0, "mass must be positive");
    require(f0 > 0.0, "resonance frequency must be positive");
    const double w = kTwoPi * f0;
    return mass * w * w;
}

MotionTrace simulate_motion(const ResonatorParams& params, const ExcitationSpec& excitation,
                            double duration, const MotionOptions& options) {
    params.validate();
    excitation.validate();
    require(duration > 0.0, "duration must be positive");

    const double f0 = params.natural_frequency();
    const double limit_step = 1.0 / (50.0 * f0);
    const double max_step = options.max_step > 0.0 ? options.max_step : 1.0 / (kStepsPerPeriod * f0);
    require(max_step <= limit_step * (1.0 + 1e-12),
            "max_step must not exceed 1/(50 f0) = " + std::to_string(limit_step) + " s");

    const BaseMotion base{excitation, duration};
    // The excitation must be resolved as well as the resonator.
    const double f_hi = std::max(f0, base.highest_frequency());
    const double step_bound = std::min(max_step, 1.0 / (50.0 * f_hi));
    const auto steps = static_cast<long long>(std::ceil(duration / step_bound - 1e-9));
    const double h = duration / static_cast<double>(steps);

    const double m = params.mass;
    const double k = params.stiffness;
    const double b = params.damping();
    const bool stops = params.stopper_model != StopperModel::none;
    const double xlim = params.stopper_limit;

    auto force_es = [&](double x) {
        if (!options.coupling || options.coupling->bias_voltage == 0.0) {
            return 0.0;
        }
        const auto& c = options.coupling->capacitance;
        const double dx = 1e-3 * xlim;
        const double lo = stops ? std::max(x - dx, -xlim) : x - dx;
        const double hi = stops ? std::min(x + dx, xlim) : x + dx;
        const double v = options.coupling->bias_voltage;
        return 0.5 * v * v * (c(hi) - c(lo)) / (hi - lo);
    };
    auto accel = [&](double t, double x, double v) {
        return (-b * v - k * x + force_es(x)) / m - base.acceleration(t);
    };

    MotionTrace trace;
    trace.time.reserve(static_cast<std::size_t>(steps) + 1);
    trace.displacement.reserve(static_cast<std::size_t>(steps) + 1);
    trace.velocity.reserve(static_cast<std::size_t>(steps) + 1);

    double x = options.initial_displacement;
    double v = options.initial_velocity;
    if (stops && std::abs(x) > xlim) {
        throw DomainError("initial displacement beyond the stopper");
    }
    trace.time.push_back(0.0);
    trace.displacement.push_back(x);
    trace.velocity.push_back(v);

    for (long long n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * h;
        const double k1x = v;
        const double k1v = accel(t, x, v);
        const double k2x = v + 0.5 * h * k1v;
        const double k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x, k2x);
        const double k3x = v + 0.5 * h * k2v;
        const double k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x, k3x);
        const double k4x = v + h * k3v;
        const double k4v = accel(t + h, x + h * k3x, k4x);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

        if (!std::isfinite(x) || !std::isfinite(v)) {
            throw NumericalError("resonator integration diverged at t = " +
                                 std::to_string(t + h) + " s (step " + std::to_string(h) + " s)");
        }
        if (stops && std::abs(x) > xlim) {
            x = std::copysign(xlim, x);
            if (params.stopper_model == StopperModel::inelastic_stop) {
                v = 0.0;
            }
            ++trace.stopper_contacts;
        }
        trace.time.push_back(static_cast<double>(n + 1) * h);
        trace.displacement.push_back(x);
        trace.velocity.push_back(v);
    }
    return trace;
}

FrequencyResponse frequency_response(const ResonatorParams& params, double amplitude,
                                     std::span<const double> frequencies) {
    params.validate();
    FrequencyResponse response;
    response.stopper_limit =
        params.stopper_model == StopperModel::none ? 0.0 : params.stopper_limit;
    const double f0 = params.natural_frequency();
    for (double f : frequencies) {
        require(f > 0.0, "frequency grid values must be positive");
        ExcitationSpec exc;
        exc.amplitude = amplitude;
        exc.frequency = f;
        MotionOptions options;
        options.max_step = 1.0 / (kStepsPerPeriod * std::max(f, f0));
        const double period = 1.0 / f;
        const MotionTrace trace = simulate_motion(params, exc, kSteadyStatePeriods * period, options);
        const double keep_from = kDiscardedPeriods * period;
        double peak = 0.0;
        for (std::size_t i = 0; i < trace.time.size(); ++i) {
            if (trace.time[i] >= keep_from) {
                peak = std::max(peak, std::abs(trace.displacement[i]));
            }
        }
        response.frequency.push_back(f);
        response.peak.push_back(peak);
    }
    return response;
}

}  // namespace ipop::mech
