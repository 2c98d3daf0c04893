#include "ipop/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "ipop/acceptance.hpp"
#include "ipop/errors.hpp"
#include "ipop/report.hpp"

namespace ipop::cli {

namespace fs = std::filesystem;

namespace {

std::string line(const char* pattern, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a);
    return std::string(buf) + "\n";
}

std::string line(const char* pattern, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return std::string(buf) + "\n";
}

template <typename T>
const T& need(const std::optional<T>& section, const char* name) {
    if (!section) {
        throw ConfigError(std::string("configuration has no [") + name + "] section");
    }
    return *section;
}

void write_csv(const fs::path& dir, const char* file, const report::CsvTable& table) {
    report::write_text(dir / file, table.str());
}

std::string run_device(const config::RunConfig& cfg, const fs::path& dir) {
    const device::DeviceModel& model = need(cfg.device, "device").model;
    model.validate();
    const double limit = model.geometry.stopper_limit;

    report::CsvTable curve({"x_m", "c_F", "c_lin_F", "fringe_shape"});
    constexpr int kPoints = 101;
    for (int i = 0; i < kPoints; ++i) {
        const double x = -limit + 2.0 * limit * i / (kPoints - 1);
        curve.add_numbers({x, device::total_capacitance(model, x),
                           device::linear_capacitance(model.geometry, x),
                           device::fringe_shape(model.geometry, x)});
    }
    write_csv(dir, "device_capacitance.csv", curve);

    report::CsvTable etch({"depth_m", "c_min_F", "swing_F", "mass_loss"});
    const double span = 2.0 * model.drie.plateau_depth;
    for (int i = 0; i <= 40; ++i) {
        const double d = span * i / 40.0;
        etch.add_numbers({d, device::cmin_vs_drie_depth(model.drie, d),
                          device::drie_capacitance_swing(model.drie, d),
                          device::mass_loss_fraction(model.drie, d)});
    }
    write_csv(dir, "drie_depth.csv", etch);

    const device::CapacitanceRange range = device::capacitance_range(model);
    std::string s = "device\n";
    s += line("  C_max = %.6g pF, C_min = %.6g pF", range.c_max * 1e12, range.c_min * 1e12);
    s += line("  ratio C_max/C_min = %.4g", range.c_max / range.c_min);
    s += line("  effective substrate = %.6g pF", model.parasitics.effective_substrate() * 1e12);
    return s;
}

std::string run_mech(const config::RunConfig& cfg, const fs::path& dir) {
    const config::ResonatorSection& rs = need(cfg.resonator, "resonator");
    const mech::ResonatorParams params = rs.params();
    const mech::ExcitationSpec tone = rs.tone();
    const double duration = rs.duration > 0.0 ? rs.duration : 200.0 / tone.frequency;
    const mech::MotionTrace trace = mech::simulate_motion(params, tone, duration);
    write_csv(dir, "motion.csv", report::motion_table(trace));

    double peak = 0.0;
    for (double x : trace.displacement) peak = std::max(peak, std::abs(x));
    std::string s = "mech\n";
    s += line("  mass = %.6g mg, stiffness = %.6g N/m", params.mass * 1e6, params.stiffness);
    s += line("  natural frequency = %.6g Hz, Q = %.4g", params.natural_frequency(),
              params.quality_factor);
    s += line("  tone %.6g Hz: max |x| = %.4g um", tone.frequency, peak * 1e6);
    s += line("  stopper contacts = %.0f", static_cast<double>(trace.stopper_contacts));
    if (rs.sweep_step > 0.0) {
        const std::vector<double> grid = rs.sweep().sweep_grid();
        const mech::FrequencyResponse resp = mech::frequency_response(params, rs.amplitude, grid);
        write_csv(dir, "frequency_response.csv", report::response_table(resp));
        s += line("  response peak at %.6g Hz", resp.peak_frequency());
    }
    return s;
}

std::string run_energy(const config::RunConfig& cfg, const fs::path& dir) {
    const config::EnergySection& e = need(cfg.energy, "energy");
    std::vector<report::EnergyRow> rows{report::evaluate_energy(e.op)};
    std::string s = "energy\n";
    s += line("  E = %.4g nJ per conversion, P = %.3g uW", rows[0].energy * 1e9, rows[0].power * 1e6);
    s += line("  power density = %.3g uW/cm^3", rows[0].density);
    if (e.projection_depth > 0.0 && cfg.device) {
        const device::BacksideDrieModel& drie = cfg.device->model.drie;
        energy::HarvestOperatingPoint op = e.op;
        op.c_max = drie.c_max;
        op.c_min = device::cmin_vs_drie_depth(drie, e.projection_depth);
        op.frequency = e.projection_frequency > 0.0 ? e.projection_frequency : e.op.frequency;
        rows.push_back(report::evaluate_energy(op));
        s += line("  backside etch %.3g um at %.4g Hz:", e.projection_depth * 1e6, op.frequency);
        s += line("    swing = %.4g pF, density = %.4g uW/cm^3", (op.c_max - op.c_min) * 1e12,
                  rows.back().density);
    }
    write_csv(dir, "energy.csv", report::energy_table(rows));
    return s;
}

std::string run_circuit(const config::RunConfig& cfg, const fs::path& dir) {
    const config::CircuitSection& cs = need(cfg.circuit, "circuit");
    (void)need(cfg.drive, "drive");
    const circuit::CircuitParams p = cfg.circuit_params();
    const double duration = cfg.circuit_duration();
    const circuit::SimulationResult run =
        circuit::simulate(p, cfg.capacitance_drive(duration), duration, cs.options);
    write_csv(dir, "trajectory.csv", report::trajectory_table(run.samples));
    write_csv(dir, "ledger.csv", report::ledger_table(run.ledger));

    const circuit::EnergyLedger& l = run.ledger;
    std::string s = "circuit\n";
    s += line("  duration = %.6g s, flybacks = %.0f", duration, static_cast<double>(run.flybacks));
    s += line("  final V_OUT = %.6g V, V_STORE = %.6g V", run.final_state.v_res(p),
              run.final_state.v_store(p));
    s += line("  mean V_OUT over the tail = %.6g V", run.mean_v_out_tail);
    s += line("  E_mech_in = %.4g J, E_load = %.4g J", l.e_mech_in, l.e_load);
    s += line("  E_dissipated = %.4g J, dE_stored = %.4g J", l.e_dissipated, l.e_stored_delta);
    s += line("  net converted = %.4g J, balance residual = %.3g", l.net_converted,
              l.relative_imbalance());
    s += std::string("  short-circuit regime: ") + (run.short_circuit_regime ? "yes" : "no") + "\n";
    return s;
}

std::string run_sweep(const config::RunConfig& cfg, const fs::path& dir) {
    const config::SweepSection& ss = need(cfg.sweep, "sweep");
    sweep::SweepSpec spec;
    spec.axis = ss.axis;
    spec.metric = ss.metric;
    spec.grid = ss.grid();
    spec.base = cfg.sweep_base();
    spec.threads = static_cast<unsigned>(ss.threads);
    const sweep::SweepResult res = sweep::run_sweep(spec);
    write_csv(dir, "sweep.csv", report::sweep_table(res));

    std::string s = "sweep\n";
    s += "  axis " + std::string(sweep::axis_name(res.axis)) + ", metric " +
         std::string(sweep::metric_name(res.metric)) + "\n";
    s += line("  argmax at %.6g (metric %.6g)", res.best().value, res.best().metric);
    if (res.axis == sweep::Axis::clock_period) {
        s += line("  mechanical cycles per flyback = %.4g", sweep::clock_ratio_report(spec.base, res));
    }
    std::size_t failed = 0;
    std::size_t shorted = 0;
    for (const auto& p : res.points) {
        failed += p.ok ? 0 : 1;
        shorted += p.short_circuit ? 1 : 0;
    }
    s += line("  points = %.0f, failed = %.0f", static_cast<double>(res.points.size()),
              static_cast<double>(failed));
    s += line("  short-circuit points = %.0f", static_cast<double>(shorted));
    s += std::string("  unimodal (3-point median): ") + (res.unimodal() ? "yes" : "no") + "\n";
    return s;
}

std::string run_reproduce(const fs::path& dir, unsigned threads) {
    acceptance::AcceptanceOptions opt;
    opt.threads = threads;
    const auto results = acceptance::run_all(opt);
    report::CsvTable table({"criterion", "result", "title", "detail"});
    for (const auto& r : results) {
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        std::string title = r.title;
        std::replace(title.begin(), title.end(), ',', ';');
        table.add_row({std::to_string(r.id), r.passed ? "pass" : "fail", title, detail});
    }
    write_csv(dir, "acceptance.csv", table);
    return acceptance::format_table(results);
}

struct Failure {
    int code;
    const char* kind;
    std::string message;
};

void write_error_file(const fs::path& dir, const std::string& subcommand, const Failure& f,
                      std::ostream& err) {
    nlohmann::json j;
    j["status"] = f.code;
    j["kind"] = f.kind;
    j["subcommand"] = subcommand;
    j["message"] = f.message;
    try {
        fs::create_directories(dir);
        report::write_text(dir / "error.json", j.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "could not write error file: " << e.what() << "\n";
    }
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"device", "mech",  "energy",
                                                "circuit", "sweep", "reproduce"};
    return names;
}

std::string run_subcommand(const std::string& subcommand, const config::RunConfig& config,
                           const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    }
    if (subcommand == "device") return run_device(config, out_dir);
    if (subcommand == "mech") return run_mech(config, out_dir);
    if (subcommand == "energy") return run_energy(config, out_dir);
    if (subcommand == "circuit") return run_circuit(config, out_dir);
    if (subcommand == "sweep") return run_sweep(config, out_dir);
    if (subcommand == "reproduce") {
        const unsigned threads =
            config.sweep ? static_cast<unsigned>(config.sweep->threads) : 0u;
        return run_reproduce(out_dir, threads);
    }
    throw ConfigError("unknown subcommand '" + subcommand + "'");
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Electrostatic vibration energy harvester simulator"};
    app.name("ipop");
    std::string subcommand;
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    bool seedless = false;

    std::string names;
    for (const auto& s : subcommands()) names += (names.empty() ? "" : "|") + s;
    app.add_option("subcommand", subcommand, names)->required();
    app.add_option("--config", config_path, "Run configuration file");
    app.add_option("--preset", preset, "Shipped preset name");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--seedless", seedless,
                 "Refuse nondeterministic inputs (every run is deterministic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int status = app.exit(e, out, err);
        return status == 0 ? kExitOk : kExitValidation;
    }

    // No run draws on randomness or wall-clock state, so --seedless has
    // nothing to reject.
    (void)seedless;

    const auto& known = subcommands();
    if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
        err << "unknown subcommand '" << subcommand << "'\n\n" << app.help();
        return kExitValidation;
    }

    Failure failure{kExitOk, "", ""};
    try {
        config::RunConfig cfg;
        if (!config_path.empty() && !preset.empty()) {
            throw ConfigError("use either --config or --preset, not both");
        }
        if (!config_path.empty()) {
            cfg = config::load_config_file(config_path);
        } else if (!preset.empty()) {
            cfg = config::load_preset(preset);
        } else if (subcommand != "reproduce") {
            throw ConfigError("no configuration: pass --config FILE or --preset NAME");
        }
        const std::string summary = run_subcommand(subcommand, cfg, out_dir);
        report::write_text(fs::path(out_dir) / "summary.txt", summary);
        out << summary;
        return kExitOk;
    } catch (const ConfigError& e) {
        failure = {kExitValidation, "validation", e.what()};
    } catch (const DomainError& e) {
        failure = {kExitValidation, "validation", e.what()};
    } catch (const NumericalError& e) {
        failure = {kExitNumerical, "numerical", e.what()};
    } catch (const IoError& e) {
        failure = {kExitIo, "io", e.what()};
    } catch (const fs::filesystem_error& e) {
        failure = {kExitIo, "io", e.what()};
    } catch (const std::exception& e) {
        failure = {kExitNumerical, "numerical", e.what()};
    }
    err << "error (" << failure.kind << "): " << failure.message << "\n";
    write_error_file(out_dir, subcommand, failure, err);
    return failure.code;
}

}  // namespace ipop::cli
