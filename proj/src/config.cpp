#include "ipop/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ipop/errors.hpp"
#include "presets_embedded.hpp"

namespace ipop::config {

namespace {

enum class Section { device, resonator, energy, circuit, drive, sweep };

constexpr Section kSections[] = {Section::device,  Section::resonator, Section::energy,
                                 Section::circuit, Section::drive,     Section::sweep};

std::string_view section_name(Section s) {
    switch (s) {
        case Section::device: return "device";
        case Section::resonator: return "resonator";
        case Section::energy: return "energy";
        case Section::circuit: return "circuit";
        case Section::drive: return "drive";
        case Section::sweep: return "sweep";
    }
    return "?";
}

std::optional<Section> parse_section(std::string_view name) {
    for (Section s : kSections) {
        if (section_name(s) == name) return s;
    }
    return std::nullopt;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& token) {
    double v = 0.0;
    const char* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v, std::chars_format::general);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw ConfigError("'" + token + "' is not a plain SI number (no units or suffixes)");
    }
    return v;
}

int parse_integer(const std::string& token) {
    int v = 0;
    const char* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("'" + token + "' is not an integer");
    }
    return v;
}

bool parse_bool(const std::string& token) {
    if (token == "true") return true;
    if (token == "false") return false;
    throw ConfigError("'" + token + "' is not a boolean (true or false)");
}

template <typename E>
struct Choice {
    std::string_view name;
    E value;
};

template <typename E, std::size_t N>
E parse_choice(const std::string& token, const Choice<E> (&choices)[N]) {
    std::string allowed;
    for (const auto& c : choices) {
        if (c.name == token) return c.value;
        allowed += (allowed.empty() ? "" : ", ") + std::string(c.name);
    }
    throw ConfigError("'" + token + "' is not one of: " + allowed);
}

template <typename E, std::size_t N>
std::string choice_name(E value, const Choice<E> (&choices)[N]) {
    for (const auto& c : choices) {
        if (c.value == value) return std::string(c.name);
    }
    return "?";
}

constexpr Choice<mech::StopperModel> kStopperModels[] = {
    {"none", mech::StopperModel::none},
    {"clamp", mech::StopperModel::clamp},
    {"inelastic_stop", mech::StopperModel::inelastic_stop},
};
constexpr Choice<DriveSource> kDriveSources[] = {
    {"abs_sine", DriveSource::abs_sine},
    {"direct_sine", DriveSource::direct_sine},
    {"coupled_mechanical", DriveSource::coupled_mechanical},
};
constexpr Choice<GridSpacing> kSpacings[] = {
    {"linear", GridSpacing::linear},
    {"log", GridSpacing::log},
};

/// One recognised key: how to read it from text and write it back.
struct KeySpec {
    Section section;
    std::string_view name;
    bool required;  // when the section does not come from a preset
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

DeviceSection& dev(RunConfig& c) { return *c.device; }
ResonatorSection& res(RunConfig& c) { return *c.resonator; }
EnergySection& ene(RunConfig& c) { return *c.energy; }
CircuitSection& cir(RunConfig& c) { return *c.circuit; }
DriveSection& drv(RunConfig& c) { return *c.drive; }
SweepSection& swp(RunConfig& c) { return *c.sweep; }

template <typename Access>
KeySpec number(Section s, std::string_view name, bool required, Access access) {
    return {s, name, required,
            [access](RunConfig& c, const std::string& v) { access(c) = parse_number(v); },
            [access](const RunConfig& c) {
                return format_number(access(const_cast<RunConfig&>(c)));
            }};
}

template <typename Access>
KeySpec integer(Section s, std::string_view name, bool required, Access access) {
    return {s, name, required,
            [access](RunConfig& c, const std::string& v) { access(c) = parse_integer(v); },
            [access](const RunConfig& c) {
                return std::to_string(access(const_cast<RunConfig&>(c)));
            }};
}

template <typename Access>
KeySpec boolean(Section s, std::string_view name, Access access) {
    return {s, name, false,
            [access](RunConfig& c, const std::string& v) { access(c) = parse_bool(v); },
            [access](const RunConfig& c) {
                return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
            }};
}

template <typename E, std::size_t N, typename Access>
KeySpec choice(Section s, std::string_view name, bool required, const Choice<E> (&choices)[N],
               Access access) {
    return {s, name, required,
            [access, &choices](RunConfig& c, const std::string& v) {
                access(c) = parse_choice(v, choices);
            },
            [access, &choices](const RunConfig& c) {
                return choice_name(access(const_cast<RunConfig&>(c)), choices);
            }};
}

template <typename Access>
KeySpec axis_key(Section s, std::string_view name, bool required, Access access) {
    return {s, name, required,
            [access](RunConfig& c, const std::string& v) { access(c) = sweep::parse_axis(v); },
            [access](const RunConfig& c) {
                return std::string(sweep::axis_name(access(const_cast<RunConfig&>(c))));
            }};
}

const std::vector<KeySpec>& key_table() {
    using S = Section;
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> k;
        // device
        k.push_back(integer(S::device, "n_fingers", true,
                            [](RunConfig& c) -> int& { return dev(c).model.geometry.n_fingers; }));
        k.push_back(number(S::device, "finger_length", true, [](RunConfig& c) -> double& {
            return dev(c).model.geometry.finger_length;
        }));
        k.push_back(number(S::device, "finger_width", true, [](RunConfig& c) -> double& {
            return dev(c).model.geometry.finger_width;
        }));
        k.push_back(number(S::device, "dielectric_thickness", true, [](RunConfig& c) -> double& {
            return dev(c).model.geometry.dielectric_thickness;
        }));
        k.push_back(number(S::device, "dielectric_rel_permittivity", true,
                           [](RunConfig& c) -> double& {
                               return dev(c).model.geometry.dielectric_rel_permittivity;
                           }));
        k.push_back(number(S::device, "air_gap", false, [](RunConfig& c) -> double& {
            return dev(c).model.geometry.air_gap;
        }));
        k.push_back(number(S::device, "stopper_limit", false, [](RunConfig& c) -> double& {
            return dev(c).model.geometry.stopper_limit;
        }));
        k.push_back(number(S::device, "c_substrate", false, [](RunConfig& c) -> double& {
            return dev(c).model.parasitics.c_substrate;
        }));
        k.push_back(number(S::device, "c_fringe_peak", false, [](RunConfig& c) -> double& {
            return dev(c).model.parasitics.c_fringe_peak;
        }));
        k.push_back(boolean(S::device, "substrate_grounded", [](RunConfig& c) -> bool& {
            return dev(c).model.parasitics.substrate_grounded;
        }));
        k.push_back(number(S::device, "grounding_reduction", false, [](RunConfig& c) -> double& {
            return dev(c).model.parasitics.grounding_reduction;
        }));
        k.push_back(number(S::device, "min_capacitance", false, [](RunConfig& c) -> double& {
            return dev(c).model.min_capacitance;
        }));
        k.push_back(number(S::device, "drie_depth", false,
                           [](RunConfig& c) -> double& { return dev(c).model.drie.depth; }));
        k.push_back(number(S::device, "drie_c_max", false,
                           [](RunConfig& c) -> double& { return dev(c).model.drie.c_max; }));
        k.push_back(number(S::device, "drie_cmin_baseline", false, [](RunConfig& c) -> double& {
            return dev(c).model.drie.cmin_baseline;
        }));
        k.push_back(number(S::device, "drie_cmin_plateau", false, [](RunConfig& c) -> double& {
            return dev(c).model.drie.cmin_plateau;
        }));
        k.push_back(number(S::device, "drie_plateau_depth", false, [](RunConfig& c) -> double& {
            return dev(c).model.drie.plateau_depth;
        }));
        k.push_back(number(S::device, "drie_mass_loss_at_plateau", false,
                           [](RunConfig& c) -> double& {
                               return dev(c).model.drie.mass_loss_at_plateau;
                           }));
        k.push_back(number(S::device, "drie_residual_fraction", false,
                           [](RunConfig& c) -> double& {
                               return dev(c).model.drie.residual_fraction;
                           }));
        // resonator
        k.push_back(number(S::resonator, "footprint_area", true,
                           [](RunConfig& c) -> double& { return res(c).footprint_area; }));
        k.push_back(number(S::resonator, "silicon_thickness", true,
                           [](RunConfig& c) -> double& { return res(c).silicon_thickness; }));
        k.push_back(number(S::resonator, "removed_fraction", false,
                           [](RunConfig& c) -> double& { return res(c).removed_fraction; }));
        k.push_back(number(S::resonator, "resonant_frequency", true,
                           [](RunConfig& c) -> double& { return res(c).resonant_frequency; }));
        k.push_back(number(S::resonator, "quality_factor", false,
                           [](RunConfig& c) -> double& { return res(c).quality_factor; }));
        k.push_back(number(S::resonator, "stopper_limit", false,
                           [](RunConfig& c) -> double& { return res(c).stopper_limit; }));
        k.push_back(choice(S::resonator, "stopper_model", false, kStopperModels,
                           [](RunConfig& c) -> mech::StopperModel& {
                               return res(c).stopper_model;
                           }));
        k.push_back(number(S::resonator, "amplitude", false,
                           [](RunConfig& c) -> double& { return res(c).amplitude; }));
        k.push_back(number(S::resonator, "frequency", false,
                           [](RunConfig& c) -> double& { return res(c).frequency; }));
        k.push_back(number(S::resonator, "duration", false,
                           [](RunConfig& c) -> double& { return res(c).duration; }));
        k.push_back(number(S::resonator, "sweep_start", false,
                           [](RunConfig& c) -> double& { return res(c).sweep_start; }));
        k.push_back(number(S::resonator, "sweep_stop", false,
                           [](RunConfig& c) -> double& { return res(c).sweep_stop; }));
        k.push_back(number(S::resonator, "sweep_step", false,
                           [](RunConfig& c) -> double& { return res(c).sweep_step; }));
        // energy
        k.push_back(number(S::energy, "v_in", true,
                           [](RunConfig& c) -> double& { return ene(c).op.v_in; }));
        k.push_back(number(S::energy, "c_max", true,
                           [](RunConfig& c) -> double& { return ene(c).op.c_max; }));
        k.push_back(number(S::energy, "c_min", true,
                           [](RunConfig& c) -> double& { return ene(c).op.c_min; }));
        k.push_back(number(S::energy, "frequency", true,
                           [](RunConfig& c) -> double& { return ene(c).op.frequency; }));
        k.push_back(number(S::energy, "device_volume", false,
                           [](RunConfig& c) -> double& { return ene(c).op.device_volume; }));
        k.push_back(number(S::energy, "projection_depth", false,
                           [](RunConfig& c) -> double& { return ene(c).projection_depth; }));
        k.push_back(number(S::energy, "projection_frequency", false,
                           [](RunConfig& c) -> double& { return ene(c).projection_frequency; }));
        // circuit
        k.push_back(number(S::circuit, "c_res", false,
                           [](RunConfig& c) -> double& { return cir(c).params.c_res; }));
        k.push_back(number(S::circuit, "c_store", false,
                           [](RunConfig& c) -> double& { return cir(c).params.c_store; }));
        k.push_back(number(S::circuit, "l_fly", false,
                           [](RunConfig& c) -> double& { return cir(c).params.l_fly; }));
        k.push_back(number(S::circuit, "r_load", false,
                           [](RunConfig& c) -> double& { return cir(c).params.r_load; }));
        k.push_back(number(S::circuit, "v_initial", false,
                           [](RunConfig& c) -> double& { return cir(c).params.v_initial; }));
        k.push_back(number(S::circuit, "diode_forward_drop", false, [](RunConfig& c) -> double& {
            return cir(c).params.d1.forward_drop;
        }));
        k.push_back(number(S::circuit, "diode_on_resistance", false, [](RunConfig& c) -> double& {
            return cir(c).params.d1.on_resistance;
        }));
        k.push_back(number(S::circuit, "diode_off_conductance", false,
                           [](RunConfig& c) -> double& {
                               return cir(c).params.d1.off_conductance;
                           }));
        k.push_back(number(S::circuit, "switch_on_resistance", false,
                           [](RunConfig& c) -> double& {
                               return cir(c).params.sw.on_resistance;
                           }));
        k.push_back(number(S::circuit, "switch_off_conductance", false,
                           [](RunConfig& c) -> double& {
                               return cir(c).params.sw.off_conductance;
                           }));
        k.push_back(number(S::circuit, "clock_period", false,
                           [](RunConfig& c) -> double& { return cir(c).params.sw.clock_period; }));
        k.push_back(number(S::circuit, "pulse_width", true,
                           [](RunConfig& c) -> double& { return cir(c).params.sw.pulse_width; }));
        k.push_back(number(S::circuit, "clock_offset", false,
                           [](RunConfig& c) -> double& { return cir(c).params.sw.clock_offset; }));
        k.push_back(boolean(S::circuit, "flyback",
                            [](RunConfig& c) -> bool& { return cir(c).params.sw.enabled; }));
        k.push_back(number(S::circuit, "duration", false,
                           [](RunConfig& c) -> double& { return cir(c).duration; }));
        k.push_back(number(S::circuit, "sample_interval", false, [](RunConfig& c) -> double& {
            return cir(c).options.sample_interval;
        }));
        k.push_back(number(S::circuit, "step_scale", false,
                           [](RunConfig& c) -> double& { return cir(c).options.step_scale; }));
        k.push_back(number(S::circuit, "tail_fraction", false,
                           [](RunConfig& c) -> double& { return cir(c).options.tail_fraction; }));
        // drive
        k.push_back(choice(S::drive, "source", false, kDriveSources,
                           [](RunConfig& c) -> DriveSource& { return drv(c).source; }));
        k.push_back(number(S::drive, "c_max", false,
                           [](RunConfig& c) -> double& { return drv(c).c_max; }));
        k.push_back(number(S::drive, "c_min", false,
                           [](RunConfig& c) -> double& { return drv(c).c_min; }));
        k.push_back(number(S::drive, "frequency", true,
                           [](RunConfig& c) -> double& { return drv(c).frequency; }));
        k.push_back(number(S::drive, "clock_cycles", false,
                           [](RunConfig& c) -> double& { return drv(c).clock_cycles; }));
        // sweep
        k.push_back(axis_key(S::sweep, "axis", true,
                          [](RunConfig& c) -> sweep::Axis& { return swp(c).axis; }));
        k.push_back({S::sweep, "metric", false,
                     [](RunConfig& c, const std::string& v) {
                         swp(c).metric = sweep::parse_metric(v);
                     },
                     [](const RunConfig& c) {
                         return std::string(sweep::metric_name(c.sweep->metric));
                     }});
        k.push_back(number(S::sweep, "start", true,
                           [](RunConfig& c) -> double& { return swp(c).start; }));
        k.push_back(number(S::sweep, "stop", true,
                           [](RunConfig& c) -> double& { return swp(c).stop; }));
        k.push_back(integer(S::sweep, "points", true,
                            [](RunConfig& c) -> int& { return swp(c).points; }));
        k.push_back(choice(S::sweep, "spacing", false, kSpacings,
                           [](RunConfig& c) -> GridSpacing& { return swp(c).spacing; }));
        k.push_back(number(S::sweep, "duration", false,
                           [](RunConfig& c) -> double& { return swp(c).duration; }));
        k.push_back(integer(S::sweep, "threads", false,
                            [](RunConfig& c) -> int& { return swp(c).threads; }));
        return k;
    }();
    return table;
}

const KeySpec* find_key(Section s, std::string_view name) {
    for (const auto& k : key_table()) {
        if (k.section == s && k.name == name) return &k;
    }
    return nullptr;
}

bool has_section(const RunConfig& c, Section s) {
    switch (s) {
        case Section::device: return c.device.has_value();
        case Section::resonator: return c.resonator.has_value();
        case Section::energy: return c.energy.has_value();
        case Section::circuit: return c.circuit.has_value();
        case Section::drive: return c.drive.has_value();
        case Section::sweep: return c.sweep.has_value();
    }
    return false;
}

void ensure_section(RunConfig& c, Section s) {
    switch (s) {
        case Section::device: if (!c.device) c.device.emplace(); break;
        case Section::resonator: if (!c.resonator) c.resonator.emplace(); break;
        case Section::energy: if (!c.energy) c.energy.emplace(); break;
        case Section::circuit: if (!c.circuit) c.circuit.emplace(); break;
        case Section::drive: if (!c.drive) c.drive.emplace(); break;
        case Section::sweep: if (!c.sweep) c.sweep.emplace(); break;
    }
}

struct Diagnostic {
    int line;  // 0 when unknown
    std::string message;
};

[[noreturn]] void raise(std::vector<Diagnostic> diags) {
    std::stable_sort(diags.begin(), diags.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
    std::string text;
    for (const auto& d : diags) {
        if (!text.empty()) text += '\n';
        if (d.line > 0) text += "line " + std::to_string(d.line) + ": ";
        text += d.message;
    }
    throw ConfigError(text);
}

using Reporter = std::function<void(Section, const std::string&)>;

template <typename F>
void check(Section s, const Reporter& report, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(s, e.what());
    }
}

void validate_sections(const RunConfig& c, const Reporter& report) {
    if (c.device) {
        check(Section::device, report, [&] { c.device->model.validate(); });
    }
    if (c.resonator) {
        check(Section::resonator, report, [&] {
            const ResonatorSection& r = *c.resonator;
            r.params().validate();
            r.tone().validate();
            if (r.sweep_step != 0.0 || r.sweep_start != 0.0 || r.sweep_stop != 0.0) {
                r.sweep().validate();
            }
            if (r.duration < 0.0) throw DomainError("duration must be non-negative");
        });
    }
    if (c.energy) {
        check(Section::energy, report, [&] {
            c.energy->op.validate();
            if (c.energy->projection_depth < 0.0) {
                throw DomainError("projection_depth must be non-negative");
            }
            if (c.energy->projection_frequency < 0.0) {
                throw DomainError("projection_frequency must be non-negative");
            }
        });
    }
    if (c.drive) {
        check(Section::drive, report, [&] {
            const DriveSection& d = *c.drive;
            if (d.frequency <= 0.0) throw DomainError("frequency must be positive");
            if (d.clock_cycles < 0.0) throw DomainError("clock_cycles must be non-negative");
            if (d.source == DriveSource::coupled_mechanical) {
                if (!c.device || !c.resonator) {
                    throw DomainError("source coupled_mechanical needs [device] and [resonator]");
                }
            } else {
                if (d.c_min <= 0.0) throw DomainError("c_min must be positive");
                if (d.c_max < d.c_min) throw DomainError("c_max must be >= c_min");
            }
        });
    }
    if (c.circuit) {
        check(Section::circuit, report, [&] {
            c.circuit_params().validate();
            const auto& o = c.circuit->options;
            if (o.step_scale <= 0.0) throw DomainError("step_scale must be positive");
            if (o.sample_interval < 0.0) throw DomainError("sample_interval must be non-negative");
            if (!(o.tail_fraction > 0.0 && o.tail_fraction <= 1.0)) {
                throw DomainError("tail_fraction must lie in (0, 1]");
            }
            if (c.circuit->duration < 0.0) throw DomainError("duration must be non-negative");
            if (c.circuit->duration == 0.0 && !c.circuit->params.sw.enabled) {
                throw DomainError("duration must be set when flyback is false");
            }
        });
    }
    if (c.sweep) {
        check(Section::sweep, report, [&] {
            if (!c.circuit || !c.drive) {
                throw DomainError("[sweep] needs [circuit] and [drive] sections");
            }
            if (c.sweep->threads < 0) throw DomainError("threads must be non-negative");
            if (c.sweep->duration < 0.0) throw DomainError("duration must be non-negative");
            (void)c.sweep->grid();
        });
    }
}

/// Line of the key named in `message`, else the section header line.
int locate(const std::map<std::string, int>& key_lines, int section_line,
           const std::string& message) {
    int best_line = section_line;
    std::size_t best_len = 0;
    for (const auto& [key, line] : key_lines) {
        std::size_t pos = message.find(key);
        while (pos != std::string::npos) {
            const bool left = pos == 0 || !(std::isalnum(static_cast<unsigned char>(message[pos - 1])) ||
                                            message[pos - 1] == '_');
            const std::size_t end = pos + key.size();
            const bool right = end >= message.size() ||
                               !(std::isalnum(static_cast<unsigned char>(message[end])) ||
                                 message[end] == '_');
            if (left && right && key.size() > best_len) {
                best_len = key.size();
                best_line = line;
                break;
            }
            pos = message.find(key, pos + 1);
        }
    }
    return best_line;
}

RunConfig parse_impl(std::string_view text, bool allow_preset) {
    RunConfig cfg;
    std::vector<Diagnostic> diags;
    std::optional<Section> current;
    bool seen_section = false;
    std::map<Section, int> section_lines;
    std::map<Section, std::map<std::string, int>> key_lines;
    std::map<Section, bool> from_preset;
    std::set<Section> broken;
    bool structural_error = false;  // a malformed header or unusable preset

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                diags.push_back({line_no, "malformed section header '" + line + "'"});
                structural_error = true;
                current.reset();
                continue;
            }
            const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
            current = parse_section(name);
            seen_section = true;
            if (!current) {
                diags.push_back({line_no, "unknown section [" + name + "]"});
                continue;
            }
            if (section_lines.count(*current)) {
                diags.push_back({line_no, "duplicate section [" + name + "]"});
                broken.insert(*current);
            }
            section_lines[*current] = line_no;
            ensure_section(cfg, *current);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            diags.push_back({line_no, "expected 'key = value', got '" + line + "'"});
            if (current) broken.insert(*current);
            continue;
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty() || value.empty()) {
            diags.push_back({line_no, "expected 'key = value', got '" + line + "'"});
            if (current) broken.insert(*current);
            continue;
        }

        if (key == "preset") {
            if (!allow_preset) {
                diags.push_back({line_no, "presets cannot reference other presets"});
            } else if (seen_section) {
                diags.push_back({line_no, "preset must come before the first section"});
            } else if (!cfg.preset.empty()) {
                diags.push_back({line_no, "duplicate key 'preset'"});
            } else {
                try {
                    RunConfig base = load_preset(value);
                    base.preset = value;
                    cfg = std::move(base);
                    for (Section s : kSections) from_preset[s] = has_section(cfg, s);
                } catch (const ConfigError& e) {
                    diags.push_back({line_no, e.what()});
                    structural_error = true;
                }
            }
            continue;
        }
        if (!current) {
            if (!seen_section) {
                diags.push_back({line_no, "key '" + key + "' outside of any section"});
            }
            continue;  // unknown section already reported
        }
        const KeySpec* spec = find_key(*current, key);
        if (!spec) {
            diags.push_back({line_no, "unknown key '" + key + "' in [" +
                                          std::string(section_name(*current)) + "]"});
            broken.insert(*current);
            continue;
        }
        auto& lines = key_lines[*current];
        if (lines.count(key)) {
            diags.push_back({line_no, "duplicate key '" + key + "'"});
            broken.insert(*current);
            continue;
        }
        lines[key] = line_no;
        try {
            spec->set(cfg, value);
        } catch (const std::exception& e) {
            diags.push_back({line_no, key + ": " + e.what()});
            broken.insert(*current);
        }
    }

    for (Section s : kSections) {
        if (!section_lines.count(s) || from_preset[s]) continue;
        for (const auto& k : key_table()) {
            if (k.section == s && k.required && !key_lines[s].count(std::string(k.name))) {
                diags.push_back({section_lines[s], "missing required key '" +
                                                       std::string(k.name) + "' in [" +
                                                       std::string(section_name(s)) + "]"});
                broken.insert(s);
            }
        }
    }

    // Invariants are checked for every section whose own keys parsed; a
    // section with a bad value would only produce follow-on noise.
    if (!structural_error) {
        validate_sections(cfg, [&](Section s, const std::string& msg) {
            if (broken.count(s)) return;
            const int sl = section_lines.count(s) ? section_lines[s] : 0;
            diags.push_back({locate(key_lines[s], sl, msg),
                             "[" + std::string(section_name(s)) + "] " + msg});
        });
    }
    if (!diags.empty()) {
        raise(std::move(diags));
    }
    return cfg;
}

}  // namespace

// --- sections -----------------------------------------------------------------

mech::ResonatorParams ResonatorSection::params() const {
    mech::ResonatorParams p;
    p.mass = mech::proof_mass_from_geometry(footprint_area, silicon_thickness, kSiliconDensity,
                                            removed_fraction);
    p.stiffness = mech::stiffness_from_resonance(p.mass, resonant_frequency);
    p.quality_factor = quality_factor;
    p.stopper_limit = stopper_limit;
    p.stopper_model = stopper_model;
    return p;
}

mech::ExcitationSpec ResonatorSection::tone() const {
    mech::ExcitationSpec e;
    e.kind = mech::ExcitationSpec::Kind::sinusoid;
    e.amplitude = amplitude;
    e.frequency = frequency > 0.0 ? frequency : resonant_frequency;
    return e;
}

mech::ExcitationSpec ResonatorSection::sweep() const {
    mech::ExcitationSpec e;
    e.kind = mech::ExcitationSpec::Kind::frequency_sweep;
    e.amplitude = amplitude;
    e.sweep_start = sweep_start;
    e.sweep_stop = sweep_stop;
    e.sweep_step = sweep_step;
    return e;
}

std::vector<double> SweepSection::grid() const {
    if (points < 1) throw DomainError("points must be at least 1");
    if (!(std::isfinite(start) && std::isfinite(stop))) throw DomainError("start/stop must be finite");
    if (points == 1) {
        if (start != stop) throw DomainError("a single-point grid needs start == stop");
        return {start};
    }
    if (!(stop > start)) throw DomainError("stop must exceed start");
    if (spacing == GridSpacing::log && !(start > 0.0)) {
        throw DomainError("log spacing needs start > 0");
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double u = static_cast<double>(i) / (points - 1);
        g[static_cast<std::size_t>(i)] =
            spacing == GridSpacing::linear ? start + u * (stop - start)
                                           : start * std::pow(stop / start, u);
    }
    g.back() = stop;
    return g;
}

circuit::CircuitParams RunConfig::circuit_params() const {
    if (!circuit) throw ConfigError("configuration has no [circuit] section");
    circuit::CircuitParams p = circuit->params;
    // One diode model for D1, D2 and D_FLY.
    p.d2 = p.d1;
    p.d_fly = p.d1;
    if (drive && drive->clock_cycles > 0.0) {
        p.sw.clock_period = drive->clock_cycles / drive->frequency;
    }
    return p;
}

circuit::CapacitanceDrive RunConfig::capacitance_drive(double duration) const {
    if (!drive) throw ConfigError("configuration has no [drive] section");
    switch (drive->source) {
        case DriveSource::abs_sine:
            return circuit::CapacitanceDrive::abs_sine(drive->c_max, drive->c_min, drive->frequency);
        case DriveSource::direct_sine: {
            auto d = circuit::CapacitanceDrive::abs_sine(drive->c_max, drive->c_min, drive->frequency);
            d.kind = circuit::DriveKind::direct_sine;
            return d;
        }
        case DriveSource::coupled_mechanical: {
            if (!device || !resonator) {
                throw ConfigError("coupled_mechanical drive needs [device] and [resonator]");
            }
            mech::ExcitationSpec tone = resonator->tone();
            tone.frequency = drive->frequency;
            return circuit::coupled_drive(device->model, resonator->params(), tone, duration);
        }
    }
    throw ConfigError("unknown drive source");
}

double RunConfig::circuit_duration() const {
    if (!circuit) throw ConfigError("configuration has no [circuit] section");
    if (circuit->duration > 0.0) return circuit->duration;
    return 60.0 * circuit_params().sw.clock_period;
}

sweep::SweepBase RunConfig::sweep_base() const {
    sweep::SweepBase b;
    b.circuit = circuit_params();
    b.options = circuit->options;
    b.duration = sweep && sweep->duration > 0.0 ? sweep->duration : 0.0;
    b.drive = capacitance_drive(b.run_duration());
    return b;
}

// --- parse / serialize ----------------------------------------------------------

RunConfig parse_config(std::string_view text) { return parse_impl(text, true); }

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    if (!config.preset.empty()) {
        out << "preset = " << config.preset << "\n";
    }
    for (Section s : kSections) {
        if (!has_section(config, s)) continue;
        out << "\n[" << section_name(s) << "]\n";
        for (const auto& k : key_table()) {
            if (k.section == s) {
                out << k.name << " = " << k.get(config) << "\n";
            }
        }
    }
    return out.str();
}

void validate_config(const RunConfig& config) {
    std::vector<Diagnostic> diags;
    validate_sections(config, [&](Section s, const std::string& msg) {
        diags.push_back({0, "[" + std::string(section_name(s)) + "] " + msg});
    });
    if (!diags.empty()) raise(std::move(diags));
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < detail::kEmbeddedPresetCount; ++i) {
        names.emplace_back(detail::kEmbeddedPresets[i].name);
    }
    return names;
}

std::string_view preset_text(std::string_view name) {
    for (std::size_t i = 0; i < detail::kEmbeddedPresetCount; ++i) {
        if (detail::kEmbeddedPresets[i].name == name) return detail::kEmbeddedPresets[i].text;
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

RunConfig load_preset(std::string_view name) {
    const std::string_view text = preset_text(name);
    try {
        RunConfig c = parse_impl(text, false);
        c.preset = std::string(name);
        return c;
    } catch (const ConfigError& e) {
        throw ConfigError("preset '" + std::string(name) + "': " + e.what());
    }
}

}  // namespace ipop::config
