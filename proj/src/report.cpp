#include "ipop/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ipop/errors.hpp"

namespace ipop::report {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) {
        throw std::invalid_argument("CSV row width does not match the header");
    }
    rows_.push_back(std::move(cells));
}

void CsvTable::add_numbers(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_value(v));
    add_row(std::move(cells));
}

std::string CsvTable::str() const {
    std::ostringstream out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out.str();
}

EnergyRow evaluate_energy(const energy::HarvestOperatingPoint& op) {
    EnergyRow row;
    row.op = op;
    row.energy = energy::cycle_energy(op);
    row.power = energy::harvested_power(op);
    row.density = energy::to_uw_per_cm3(energy::power_density(op));
    return row;
}

CsvTable energy_table(const std::vector<EnergyRow>& rows) {
    CsvTable t({"v_in_V", "c_max_F", "c_min_F", "f_Hz", "E_J", "P_W", "density_uW_per_cm3"});
    for (const auto& r : rows) {
        t.add_numbers({r.op.v_in, r.op.c_max, r.op.c_min, r.op.frequency, r.energy, r.power,
                       r.density});
    }
    return t;
}

std::string point_flag(const sweep::SweepPoint& p) {
    if (!p.ok) return "error";
    return p.short_circuit ? "short_circuit" : "ok";
}

CsvTable sweep_table(const sweep::SweepResult& result) {
    CsvTable t({"axis", "value", "metric", "flag"});
    const std::string axis(sweep::axis_name(result.axis));
    for (const auto& p : result.points) {
        t.add_row({axis, format_value(p.value), p.ok ? format_value(p.metric) : "nan",
                   point_flag(p)});
    }
    return t;
}

CsvTable sweep_map_table(const sweep::SweepMap& map) {
    std::vector<std::string> header{std::string(sweep::axis_name(map.row_axis)) + "\\" +
                                    std::string(sweep::axis_name(map.col_axis))};
    for (double c : map.cols) header.push_back(format_value(c));
    CsvTable t(std::move(header));
    for (std::size_t r = 0; r < map.rows.size(); ++r) {
        std::vector<std::string> cells{format_value(map.rows[r])};
        for (std::size_t c = 0; c < map.cols.size(); ++c) {
            const auto& p = map.at(r, c);
            cells.push_back(p.ok ? format_value(p.metric) : "nan");
        }
        t.add_row(std::move(cells));
    }
    return t;
}

CsvTable sweep_map_long_table(const sweep::SweepMap& map) {
    CsvTable t({"row_axis", "row_value", "col_axis", "col_value", "metric", "flag"});
    const std::string ra(sweep::axis_name(map.row_axis));
    const std::string ca(sweep::axis_name(map.col_axis));
    for (std::size_t r = 0; r < map.rows.size(); ++r) {
        for (std::size_t c = 0; c < map.cols.size(); ++c) {
            const auto& p = map.at(r, c);
            t.add_row({ra, format_value(map.rows[r]), ca, format_value(map.cols[c]),
                       p.ok ? format_value(p.metric) : "nan", point_flag(p)});
        }
    }
    return t;
}

CsvTable trajectory_table(const std::vector<circuit::TrajectorySample>& samples) {
    CsvTable t({"t_s", "c_var_F", "v_var_V", "v_store_V", "v_out_V", "i_fly_A", "flags"});
    for (const auto& s : samples) {
        t.add_row({format_value(s.t), format_value(s.c_var), format_value(s.v_var),
                   format_value(s.v_store), format_value(s.v_out), format_value(s.i_fly),
                   circuit::flags_to_string(s.flags)});
    }
    return t;
}

CsvTable ledger_table(const circuit::EnergyLedger& l) {
    CsvTable t({"term", "J"});
    const auto add = [&](const char* name, double v) { t.add_row({name, format_value(v)}); };
    add("e_mech_in", l.e_mech_in);
    add("e_source", l.e_source);
    add("e_load", l.e_load);
    add("e_dissipated", l.e_dissipated);
    add("e_stored_delta", l.e_stored_delta);
    add("net_converted", l.net_converted);
    add("e_res_delta", l.e_res_delta);
    add("e_to_output", l.e_to_output);
    add("e_from_output", l.e_from_output);
    add("imbalance", l.imbalance());
    add("relative_imbalance", l.relative_imbalance());
    return t;
}

CsvTable motion_table(const mech::MotionTrace& trace) {
    CsvTable t({"time_s", "x_m"});
    for (std::size_t i = 0; i < trace.time.size(); ++i) {
        t.add_numbers({trace.time[i], trace.displacement[i]});
    }
    return t;
}

CsvTable response_table(const mech::FrequencyResponse& response) {
    CsvTable t({"f_Hz", "peak_m"});
    for (std::size_t i = 0; i < response.frequency.size(); ++i) {
        t.add_numbers({response.frequency[i], response.peak[i]});
    }
    return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

}  // namespace ipop::report
