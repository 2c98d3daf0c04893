#include "ipop/circuit_sim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ipop/constants.hpp"
#include "ipop/errors.hpp"

namespace ipop::circuit {

namespace {

using Vec = Eigen::Vector4d;
using Mat = Eigen::Matrix4d;

enum StateIndex { kRes = 0, kVar = 1, kStore = 2, kFly = 3 };

constexpr double kTimeTolerance = 1e-13;      // s, breakpoint coincidence
constexpr double kVoltageTolerance = 1e-12;   // V, diode turn-on margin
constexpr double kDivergenceVoltage = 1e6;    // V
constexpr int kMaxChatter = 64;
constexpr int kDampAfterChatter = 3;

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw DomainError(message);
    }
}

/// Piecewise-linear branch law i = g * v - c.
struct BranchLaw {
    double g;
    double c;
};

BranchLaw diode_law(const DiodeModel& d, bool on) {
    if (on) {
        return {1.0 / d.on_resistance, d.forward_drop / d.on_resistance};
    }
    return {d.off_conductance, 0.0};
}

/// Current below which a conducting diode is considered reverse biased. Chosen
/// so a diode just switched on by the voltage margin is never immediately
/// reported as reverse biased.
double reverse_current_tolerance(const DiodeModel& d) {
    return 0.5 * kVoltageTolerance / d.on_resistance;
}

struct Topology {
    bool d1 = false;
    bool d2 = false;
    bool dfly = false;
    bool sw = false;

    [[nodiscard]] bool inductor_active() const { return sw || dfly; }
};

struct Observables {
    double c_var, v_res, v_var, v_store, v_sw;
    double i_d1, i_d2, i_sw, i_dfly, i_load, i_fly;
    double p_load, p_dissipated;
};

std::uint32_t topology_flags(const Topology& topo) {
    std::uint32_t f = 0;
    if (topo.d1) f |= kFlagD1;
    if (topo.d2) f |= kFlagD2;
    if (topo.dfly) f |= kFlagDFly;
    if (topo.sw) f |= kFlagSwitch;
    return f;
}

class Engine {
public:
    Engine(const CircuitParams& params, const CapacitanceDrive& drive,
           const SimulationOptions& options)
        : p_(params), drive_(drive), opt_(options) {
        p_.validate();
        drive_.validate();
        require(opt_.step_scale > 0.0, "step_scale must be positive");
        require(opt_.sample_interval >= 0.0, "sample_interval must be non-negative");
        require(opt_.tail_fraction > 0.0 && opt_.tail_fraction <= 1.0,
                "tail_fraction must lie in (0, 1]");
        require(opt_.event_resolution > 0.0, "event_resolution must be positive");

        const double t_mech = 1.0 / drive_.mech_frequency;
        h_slow_ = opt_.step_scale * t_mech / 2000.0;
        double fast = t_mech / 2000.0;
        fast = std::min(fast, std::sqrt(p_.l_fly * p_.c_store) / 50.0);
        if (p_.sw.enabled) {
            fast = std::min(fast, p_.sw.pulse_width / 20.0);
        }
        h_fast_ = opt_.step_scale * fast;
    }

    SimulationResult run(const CircuitState& start, double duration, bool stop_after_flyback) {
        require(duration > 0.0 && std::isfinite(duration), "duration must be positive");
        load_state(start);
        const double t0 = t_;
        t_end_ = t0 + duration;
        tail_start_ = t_end_ - opt_.tail_fraction * duration;
        tail_pending_ = true;
        stop_after_flyback_ = stop_after_flyback;
        init_breakpoints(t0);

        stored_start_ = stored_energy(x_, t_);
        res_start_ = reservoir_energy(x_);
        record_sample();

        while (t_end_ - t_ > kTimeTolerance) {
            if (stop_after_flyback_ && flyback_done_) {
                break;
            }
            const double bp = next_breakpoint();
            const double h_nominal = topo_.inductor_active() ? h_fast_ : h_slow_;
            double h = std::min(h_nominal, bp - t_);
            bool reaches_bp = h_nominal >= bp - t_;
            const bool backward = restart_left_ > 0;

            Vec x1 = trial(x_, t_, h, topo_, backward);
            if (inconsistent(x1, t_ + h, topo_)) {
                double lo = 0.0;
                double hi = h;
                while (hi - lo > opt_.event_resolution) {
                    const double mid = 0.5 * (lo + hi);
                    if (inconsistent(trial(x_, t_, mid, topo_, backward), t_ + mid, topo_)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if (hi < h) {
                    h = hi;
                    x1 = trial(x_, t_, h, topo_, backward);
                    reaches_bp = false;
                }
                accept(x1, reaches_bp ? bp : t_ + h, h);
                chatter_ = h <= 2.0 * opt_.event_resolution ? chatter_ + 1 : 0;
                if (chatter_ > kMaxChatter) {
                    throw NumericalError("conduction state chatter at t = " + std::to_string(t_) +
                                         " s");
                }
                toggle_conduction();
                if (chatter_ >= kDampAfterChatter) {
                    // trapezoidal ringing on a stiff diode branch: damp it
                    restart_left_ = std::max(restart_left_, 2);
                }
            } else {
                accept(x1, reaches_bp ? bp : t_ + h, h);
                chatter_ = 0;
                if (restart_left_ > 0) {
                    --restart_left_;
                }
            }
            if (reaches_bp) {
                process_breakpoints();
            }
        }

        if (result_.samples.empty() || result_.samples.back().t < t_ - kTimeTolerance) {
            record_sample();
        }
        finish(t0);
        return std::move(result_);
    }

    [[nodiscard]] CircuitState state() const {
        CircuitState s;
        s.t = t_;
        s.q_res = x_[kRes];
        s.q_var = x_[kVar];
        s.q_store = x_[kStore];
        s.i_fly = x_[kFly];
        s.d1_on = topo_.d1;
        s.d2_on = topo_.d2;
        s.dfly_on = topo_.dfly;
        s.switch_on = topo_.sw;
        return s;
    }

private:
    [[nodiscard]] double capacitance(double t) const { return capacitance_drive_eval(drive_, t); }

    void load_state(const CircuitState& s) {
        t_ = s.t;
        x_ << s.q_res, s.q_var, s.q_store, s.i_fly;
        topo_.d1 = s.d1_on;
        topo_.d2 = s.d2_on;
        topo_.sw = p_.sw.conducting(s.t);
        topo_.dfly = s.dfly_on;
        if (!topo_.inductor_active()) {
            x_[kFly] = 0.0;
        }
        restart_left_ = opt_.restart_steps;
    }

    /// dx/dt = A x + b for the given topology at time t.
    void system(double t, const Topology& topo, Mat& a_mat, Vec& b_vec) const {
        const double ar = 1.0 / p_.c_res;
        const double av = 1.0 / capacitance(t);
        const double as = 1.0 / p_.c_store;
        const BranchLaw d1 = diode_law(p_.d1, topo.d1);
        const BranchLaw d2 = diode_law(p_.d2, topo.d2);
        const BranchLaw df = diode_law(p_.d_fly, topo.dfly);
        const double gs = topo.sw ? 1.0 / p_.sw.on_resistance : p_.sw.off_conductance;
        const double gtot = std::max(gs + df.g, 1e-300);
        const bool l_active = topo.inductor_active();

        a_mat.setZero();
        b_vec.setZero();
        // q_res' = -i_d1 - i_load + i_fly
        a_mat(kRes, kRes) = -d1.g * ar - ar / p_.r_load;
        a_mat(kRes, kVar) = d1.g * av;
        a_mat(kRes, kFly) = l_active ? 1.0 : 0.0;
        b_vec[kRes] = d1.c;
        // q_var' = i_d1 - i_d2
        a_mat(kVar, kRes) = d1.g * ar;
        a_mat(kVar, kVar) = -(d1.g + d2.g) * av;
        a_mat(kVar, kStore) = d2.g * as;
        b_vec[kVar] = d2.c - d1.c;
        // q_store' = i_d2 - i_sw, with v_sw eliminated through KCL at node_sw
        a_mat(kStore, kVar) = d2.g * av;
        a_mat(kStore, kStore) = -d2.g * as - gs * as * df.g / gtot;
        a_mat(kStore, kFly) = l_active ? -gs / gtot : 0.0;
        b_vec[kStore] = -d2.c - gs * df.c / gtot;
        if (l_active) {
            // L i_fly' = v_sw - v_res
            a_mat(kFly, kRes) = -ar / p_.l_fly;
            a_mat(kFly, kStore) = gs * as / (gtot * p_.l_fly);
            a_mat(kFly, kFly) = -1.0 / (gtot * p_.l_fly);
            b_vec[kFly] = -df.c / (gtot * p_.l_fly);
        }
    }

    [[nodiscard]] Vec trial(const Vec& x0, double t0, double h, const Topology& topo,
                            bool backward) const {
        Mat a1;
        Vec b1;
        system(t0 + h, topo, a1, b1);
        const Mat identity = Mat::Identity();
        if (backward) {
            return (identity - h * a1).partialPivLu().solve(x0 + h * b1);
        }
        Mat a0;
        Vec b0;
        system(t0, topo, a0, b0);
        const Vec rhs = x0 + 0.5 * h * (a0 * x0 + b0 + b1);
        return (identity - 0.5 * h * a1).partialPivLu().solve(rhs);
    }

    [[nodiscard]] Observables observe(const Vec& x, double t, const Topology& topo) const {
        Observables o{};
        o.c_var = capacitance(t);
        o.v_res = x[kRes] / p_.c_res;
        o.v_var = x[kVar] / o.c_var;
        o.v_store = x[kStore] / p_.c_store;
        o.i_fly = topo.inductor_active() ? x[kFly] : 0.0;

        const BranchLaw d1 = diode_law(p_.d1, topo.d1);
        const BranchLaw d2 = diode_law(p_.d2, topo.d2);
        const BranchLaw df = diode_law(p_.d_fly, topo.dfly);
        const double gs = topo.sw ? 1.0 / p_.sw.on_resistance : p_.sw.off_conductance;
        o.v_sw = (gs * o.v_store - df.c - o.i_fly) / std::max(gs + df.g, 1e-300);

        const double vd1 = o.v_res - o.v_var;
        const double vd2 = o.v_var - o.v_store;
        const double vdf = -o.v_sw;
        const double vsw = o.v_store - o.v_sw;
        o.i_d1 = d1.g * vd1 - d1.c;
        o.i_d2 = d2.g * vd2 - d2.c;
        o.i_dfly = df.g * vdf - df.c;
        o.i_sw = gs * vsw;
        o.i_load = o.v_res / p_.r_load;
        o.p_load = o.v_res * o.i_load;
        o.p_dissipated = vd1 * o.i_d1 + vd2 * o.i_d2 + vdf * o.i_dfly + vsw * o.i_sw;
        return o;
    }

    [[nodiscard]] double stored_energy(const Vec& x, double t) const {
        const double c = capacitance(t);
        return 0.5 * x[kRes] * x[kRes] / p_.c_res + 0.5 * x[kVar] * x[kVar] / c +
               0.5 * x[kStore] * x[kStore] / p_.c_store + 0.5 * p_.l_fly * x[kFly] * x[kFly];
    }

    [[nodiscard]] double reservoir_energy(const Vec& x) const {
        return 0.5 * x[kRes] * x[kRes] / p_.c_res;
    }

    struct Transitions {
        bool d1 = false;
        bool d2 = false;
        bool dfly = false;
        [[nodiscard]] bool any() const { return d1 || d2 || dfly; }
    };

    [[nodiscard]] Transitions pending_transitions(const Observables& o,
                                                  const Topology& topo) const {
        Transitions tr;
        const auto flips = [](const DiodeModel& d, bool on, double vd, double i) {
            return on ? i < -reverse_current_tolerance(d) : vd - d.forward_drop > kVoltageTolerance;
        };
        tr.d1 = flips(p_.d1, topo.d1, o.v_res - o.v_var, o.i_d1);
        tr.d2 = flips(p_.d2, topo.d2, o.v_var - o.v_store, o.i_d2);
        // With the inductor open no current can be forced through D_FLY.
        tr.dfly = topo.inductor_active() && flips(p_.d_fly, topo.dfly, -o.v_sw, o.i_dfly);
        return tr;
    }

    [[nodiscard]] bool inconsistent(const Vec& x, double t, const Topology& topo) const {
        if (!x.allFinite()) {
            return false;  // reported by accept()
        }
        return pending_transitions(observe(x, t, topo), topo).any();
    }

    void accept(const Vec& x1, double t1, double h) {
        if (!x1.allFinite()) {
            throw NumericalError("circuit integration diverged at t = " + std::to_string(t_) +
                                 " s (step " + std::to_string(h) + " s)");
        }
        const Observables o0 = observe(x_, t_, topo_);
        const Observables o1 = observe(x1, t1, topo_);
        if (std::abs(o1.v_var) > kDivergenceVoltage || std::abs(o1.v_store) > kDivergenceVoltage ||
            std::abs(o1.v_res) > kDivergenceVoltage) {
            throw NumericalError("circuit voltages diverged at t = " + std::to_string(t1) + " s");
        }
        auto& led = result_.ledger;
        led.e_load += 0.5 * h * (o0.p_load + o1.p_load);
        led.e_dissipated += 0.5 * h * (o0.p_dissipated + o1.p_dissipated);
        led.e_mech_in +=
            -0.25 * (o0.v_var * o0.v_var + o1.v_var * o1.v_var) * (o1.c_var - o0.c_var);
        led.e_to_output += 0.5 * h * (o0.v_res * o0.i_fly + o1.v_res * o1.i_fly);
        led.e_from_output += 0.5 * h * (o0.v_res * o0.i_d1 + o1.v_res * o1.i_d1);

        if (!tail_pending_) {
            tail_integral_ += 0.5 * h * (o0.v_res + o1.v_res);
        }
        if (topo_.sw && topo_.d1 && topo_.d2 && o1.v_sw - o1.v_res < 0.0) {
            result_.short_circuit_regime = true;
            result_.short_circuit_time += h;
        }
        x_ = x1;
        t_ = t1;
        ++result_.accepted_steps;
    }

    void toggle_conduction() {
        const Observables o = observe(x_, t_, topo_);
        const Transitions tr = pending_transitions(o, topo_);
        if (tr.d1) topo_.d1 = !topo_.d1;
        if (tr.d2) topo_.d2 = !topo_.d2;
        if (tr.dfly) {
            topo_.dfly = !topo_.dfly;
            if (!topo_.inductor_active()) {
                open_inductor();
            }
        }
        ++result_.conduction_events;
        restart_left_ = opt_.restart_steps;
    }

    /// Freewheel finished (or switch opened with no forward path): the residual
    /// inductor energy is lost in the off-state branches.
    void open_inductor() {
        result_.ledger.e_dissipated += 0.5 * p_.l_fly * x_[kFly] * x_[kFly];
        x_[kFly] = 0.0;
        if (stop_after_flyback_ && fell_) {
            flyback_done_ = true;
        }
    }

    // --- breakpoints -----------------------------------------------------

    [[nodiscard]] double rise_time(long long k) const {
        return p_.sw.clock_offset + static_cast<double>(k) * p_.sw.clock_period;
    }
    [[nodiscard]] double fall_time(long long k) const { return rise_time(k) + p_.sw.pulse_width; }
    [[nodiscard]] double sample_time(long long k) const {
        return run_start_ + static_cast<double>(k) * opt_.sample_interval;
    }
    [[nodiscard]] double kink_time(long long k) const {
        return static_cast<double>(k) / (2.0 * drive_.mech_frequency);
    }

    void init_breakpoints(double t0) {
        run_start_ = t0;
        constexpr double inf = std::numeric_limits<double>::infinity();
        next_rise_ = next_fall_ = next_kink_ = inf;
        if (p_.sw.enabled) {
            rise_k_ = static_cast<long long>(
                std::floor((t0 - p_.sw.clock_offset) / p_.sw.clock_period));
            while (rise_time(rise_k_) <= t0 + kTimeTolerance) ++rise_k_;
            fall_k_ = rise_k_ - 1;
            while (fall_time(fall_k_) <= t0 + kTimeTolerance) ++fall_k_;
            next_rise_ = rise_time(rise_k_);
            next_fall_ = fall_time(fall_k_);
        }
        sample_k_ = 1;
        next_sample_ = opt_.sample_interval > 0.0 ? sample_time(sample_k_) : inf;
        if (drive_.kind == DriveKind::analytic_abs_sine) {
            kink_k_ = static_cast<long long>(std::floor(t0 * 2.0 * drive_.mech_frequency));
            while (kink_time(kink_k_) <= t0 + kTimeTolerance) ++kink_k_;
            next_kink_ = kink_time(kink_k_);
        }
    }

    [[nodiscard]] double next_breakpoint() const {
        double bp = std::min({next_rise_, next_fall_, next_sample_, next_kink_, t_end_});
        if (tail_pending_) {
            bp = std::min(bp, tail_start_);
        }
        return bp;
    }

    void process_breakpoints() {
        const double now = t_ + kTimeTolerance;
        bool restart = false;
        if (tail_pending_ && tail_start_ <= now) {
            tail_pending_ = false;
        }
        if (next_fall_ <= now) {
            on_switch_open();
            next_fall_ = fall_time(++fall_k_);
            restart = true;
        }
        if (next_rise_ <= now) {
            topo_.sw = true;
            ++result_.flybacks;
            next_rise_ = rise_time(++rise_k_);
            restart = true;
        }
        if (next_kink_ <= now) {
            next_kink_ = kink_time(++kink_k_);
            restart = true;
        }
        if (next_sample_ <= now) {
            record_sample();
            next_sample_ = sample_time(++sample_k_);
        }
        if (restart) {
            restart_left_ = opt_.restart_steps;
        }
    }

    void on_switch_open() {
        topo_.sw = false;
        fell_ = true;
        if (topo_.dfly) {
            return;
        }
        if (x_[kFly] > 0.0) {
            topo_.dfly = true;  // inductor current commutates into the freewheel diode
        } else {
            open_inductor();
        }
    }

    void record_sample() {
        const Observables o = observe(x_, t_, topo_);
        std::uint32_t flags = topology_flags(topo_);
        if (topo_.sw && topo_.d1 && topo_.d2 && o.v_sw - o.v_res < 0.0) {
            flags |= kFlagShortCircuit;
        }
        result_.samples.push_back({t_, o.c_var, o.v_var, o.v_store, o.v_res, o.i_fly, flags});
    }

    void finish(double t0) {
        auto& led = result_.ledger;
        led.e_stored_delta = stored_energy(x_, t_) - stored_start_;
        led.e_res_delta = reservoir_energy(x_) - res_start_;
        led.e_source = 0.0;
        led.net_converted = led.e_load + led.e_stored_delta - led.e_source;
        const double tail_len = t_ - std::max(tail_start_, t0);
        result_.mean_v_out_tail =
            tail_len > 0.0 ? tail_integral_ / tail_len : x_[kRes] / p_.c_res;
        result_.final_state = state();
    }

    CircuitParams p_;
    CapacitanceDrive drive_;
    SimulationOptions opt_;
    double h_slow_ = 0.0;
    double h_fast_ = 0.0;

    Vec x_ = Vec::Zero();
    double t_ = 0.0;
    Topology topo_;
    int restart_left_ = 0;
    int chatter_ = 0;

    double run_start_ = 0.0;
    double t_end_ = 0.0;
    double tail_start_ = 0.0;
    bool tail_pending_ = true;
    double tail_integral_ = 0.0;
    double stored_start_ = 0.0;
    double res_start_ = 0.0;

    long long rise_k_ = 0, fall_k_ = 0, sample_k_ = 0, kink_k_ = 0;
    double next_rise_ = 0.0, next_fall_ = 0.0, next_sample_ = 0.0, next_kink_ = 0.0;

    bool stop_after_flyback_ = false;
    bool fell_ = false;
    bool flyback_done_ = false;

    SimulationResult result_;
};

}  // namespace

// --- parameters ------------------------------------------------------------

void DiodeModel::validate(const std::string& name) const {
    require(forward_drop >= 0.0, name + ": forward_drop must be non-negative");
    require(on_resistance > 0.0, name + ": on_resistance must be positive");
    require(off_conductance >= 0.0, name + ": off_conductance must be non-negative");
    require(off_conductance * on_resistance < 1e-3,
            name + ": off_conductance must be far below 1/on_resistance");
}

DiodeModel DiodeModel::ideal() { return {0.0, 1e-3, 1e-10}; }

void SwitchModel::validate() const {
    require(on_resistance > 0.0, "switch on_resistance must be positive");
    require(off_conductance >= 0.0, "switch off_conductance must be non-negative");
    if (enabled) {
        require(clock_period > 0.0, "clock_period must be positive");
        require(pulse_width > 0.0 && pulse_width < clock_period,
                "pulse_width must lie in (0, clock_period)");
        require(clock_offset >= 0.0 && clock_offset < clock_period,
                "clock_offset must lie in [0, clock_period)");
    }
}

bool SwitchModel::conducting(double t) const {
    if (!enabled || t < clock_offset - kTimeTolerance) {
        return false;
    }
    const double k = std::floor((t - clock_offset + kTimeTolerance) / clock_period);
    const double phase = t - clock_offset - k * clock_period;
    return phase < pulse_width - kTimeTolerance;
}

void CircuitParams::validate() const {
    require(c_res > 0.0 && c_store > 0.0, "capacitances must be positive");
    require(l_fly > 0.0, "l_fly must be positive");
    require(r_load > 0.0, "r_load must be positive");
    require(std::isfinite(v_initial), "v_initial must be finite");
    d1.validate("d1");
    d2.validate("d2");
    d_fly.validate("d_fly");
    sw.validate();
    if (c_res < 100.0 * c_store) {
        throw ConfigError("c_res must be at least 100 x c_store to hold the output voltage");
    }
}

// --- drive -------------------------------------------------------------------

void CapacitanceDrive::validate() const {
    require(mech_frequency > 0.0, "drive mech_frequency must be positive");
    if (kind == DriveKind::coupled_mechanical) {
        require(table && table->dt > 0.0 && table->values.size() >= 2,
                "coupled drive needs a sampled capacitance table");
        return;
    }
    require(c_min > 0.0, "drive c_min must be positive");
    require(c_max >= c_min, "drive c_max must be >= c_min");
}

CapacitanceDrive CapacitanceDrive::abs_sine(double c_max, double c_min, double frequency) {
    CapacitanceDrive d;
    d.kind = DriveKind::analytic_abs_sine;
    d.c_max = c_max;
    d.c_min = c_min;
    d.mech_frequency = frequency;
    return d;
}

double capacitance_drive_eval(const CapacitanceDrive& drive, double t) {
    switch (drive.kind) {
        case DriveKind::analytic_abs_sine:
            return drive.c_max -
                   (drive.c_max - drive.c_min) * std::abs(std::sin(kTwoPi * drive.mech_frequency * t));
        case DriveKind::direct_sine:
            return 0.5 * (drive.c_max + drive.c_min) +
                   0.5 * (drive.c_max - drive.c_min) * std::cos(kTwoPi * drive.mech_frequency * t);
        case DriveKind::coupled_mechanical: {
            const auto& values = drive.table->values;
            const double pos = std::max(0.0, t) / drive.table->dt;
            const auto last = values.size() - 1;
            const auto i = static_cast<std::size_t>(pos);
            if (i >= last) {
                return values[last];
            }
            const double frac = pos - static_cast<double>(i);
            return values[i] + frac * (values[i + 1] - values[i]);
        }
    }
    return drive.c_max;
}

CapacitanceDrive coupled_drive(const device::DeviceModel& device,
                               const mech::ResonatorParams& resonator,
                               const mech::ExcitationSpec& excitation, double duration) {
    device.validate();
    const mech::MotionTrace trace = mech::simulate_motion(resonator, excitation, duration);
    auto table = std::make_shared<CapacitanceTable>();
    table->dt = trace.time.size() > 1 ? trace.time[1] - trace.time[0] : duration;
    table->values.reserve(trace.displacement.size());
    const double limit = device.geometry.stopper_limit;
    for (double x : trace.displacement) {
        table->values.push_back(device::total_capacitance(device, std::clamp(x, -limit, limit)));
    }
    CapacitanceDrive drive;
    drive.kind = DriveKind::coupled_mechanical;
    drive.c_max = *std::max_element(table->values.begin(), table->values.end());
    drive.c_min = *std::min_element(table->values.begin(), table->values.end());
    drive.mech_frequency = excitation.kind == mech::ExcitationSpec::Kind::sinusoid
                               ? excitation.frequency
                               : excitation.sweep_stop;
    drive.table = std::move(table);
    return drive;
}

std::string flags_to_string(std::uint32_t flags) {
    std::string out;
    const auto add = [&](std::uint32_t bit, const char* name) {
        if (flags & bit) {
            if (!out.empty()) out += '|';
            out += name;
        }
    };
    add(kFlagD1, "D1");
    add(kFlagD2, "D2");
    add(kFlagDFly, "DFLY");
    add(kFlagSwitch, "SW");
    add(kFlagShortCircuit, "SHORT");
    return out.empty() ? "-" : out;
}

// --- state & ledger ----------------------------------------------------------

CircuitState CircuitState::precharged(const CircuitParams& params, double c_var, double v,
                                      double t) {
    CircuitState s;
    s.t = t;
    s.q_var = c_var * v;
    s.q_store = params.c_store * v;
    s.q_res = params.c_res * v;
    return s;
}

double EnergyLedger::imbalance() const {
    return e_mech_in + e_source - e_load - e_dissipated - e_stored_delta;
}

double EnergyLedger::largest_term() const {
    return std::max({std::abs(e_mech_in), std::abs(e_source), std::abs(e_load),
                     std::abs(e_dissipated), std::abs(e_stored_delta)});
}

double EnergyLedger::relative_imbalance() const {
    const double scale = largest_term();
    return scale > 0.0 ? std::abs(imbalance()) / scale : 0.0;
}

EnergyLedger energy_ledger(const SimulationResult& result, double tolerance) {
    const EnergyLedger& led = result.ledger;
    if (led.relative_imbalance() > tolerance) {
        throw NumericalError("energy balance violated: relative residual " +
                             std::to_string(led.relative_imbalance()) + " exceeds " +
                             std::to_string(tolerance) + "; reduce the integrator step");
    }
    return led;
}

// --- entry points ------------------------------------------------------------

SimulationResult simulate_from(const CircuitState& start, const CircuitParams& params,
                               const CapacitanceDrive& drive, double duration,
                               const SimulationOptions& options) {
    Engine engine(params, drive, options);
    return engine.run(start, duration, false);
}

SimulationResult simulate(const CircuitParams& params, const CapacitanceDrive& drive,
                          double duration, const SimulationOptions& options) {
    params.validate();
    drive.validate();
    const CircuitState start =
        CircuitState::precharged(params, capacitance_drive_eval(drive, 0.0), params.v_initial);
    return simulate_from(start, params, drive, duration, options);
}

double charge_pump_cycle(double v_store, double v_res, double c_max, double c_min,
                         double c_store) {
    require(c_min > 0.0 && c_max >= c_min && c_store > 0.0,
            "charge pump needs 0 < c_min <= c_max and c_store > 0");
    const double start = std::max(v_store, v_res);
    const double pumped = (c_max * v_res + c_store * start) / (c_min + c_store);
    return std::max(start, pumped);
}

FlybackOutcome flyback_event(const CircuitState& state, const CircuitParams& params,
                             const CapacitanceDrive& drive) {
    FlybackOutcome out;
    out.state = state;
    if (!(params.sw.pulse_width > 0.0)) {
        return out;
    }
    // A single closure at state.t: the clock period is stretched so that no
    // second edge falls inside the window.
    const double lc = std::sqrt(params.l_fly * params.c_store);
    const double horizon = params.sw.pulse_width + 200.0 * lc + 1e-3;
    CircuitParams single = params;
    single.sw.enabled = true;
    single.sw.clock_offset = state.t;
    single.sw.clock_period = state.t + 2.0 * horizon + params.sw.pulse_width;

    Engine engine(single, drive, SimulationOptions{});
    SimulationResult run = engine.run(state, horizon, true);
    out.state = run.final_state;
    out.ledger = run.ledger;
    out.energy_to_reservoir = run.ledger.e_to_output;
    out.duration = run.final_state.t - state.t;
    out.short_circuit_regime = run.short_circuit_regime;
    return out;
}

}  // namespace ipop::circuit
