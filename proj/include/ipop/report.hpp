#pragma once

// CSV tables and text files for run outputs. Numbers are printed with six
// significant digits, so identical inputs give byte-identical files.

#include <filesystem>
#include <string>
#include <vector>

#include "ipop/circuit_sim.hpp"
#include "ipop/energy_model.hpp"
#include "ipop/mech_resonator.hpp"
#include "ipop/sweep.hpp"

namespace ipop::report {

[[nodiscard]] std::string format_value(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    void add_numbers(const std::vector<double>& values);

    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
    [[nodiscard]] std::size_t rows() const { return rows_.size(); }
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

struct EnergyRow {
    energy::HarvestOperatingPoint op;
    double energy = 0.0;   // J per conversion cycle
    double power = 0.0;    // W
    double density = 0.0;  // uW/cm^3
};

[[nodiscard]] EnergyRow evaluate_energy(const energy::HarvestOperatingPoint& op);

/// v_in_V, c_max_F, c_min_F, f_Hz, E_J, P_W, density_uW_per_cm3
[[nodiscard]] CsvTable energy_table(const std::vector<EnergyRow>& rows);
/// Long format: axis, value, metric, flag.
[[nodiscard]] CsvTable sweep_table(const sweep::SweepResult& result);
/// First column the row-axis value, one column per col-axis value.
[[nodiscard]] CsvTable sweep_map_table(const sweep::SweepMap& map);
/// Long format of a 2-D map: row_axis, row_value, col_axis, col_value, metric, flag.
[[nodiscard]] CsvTable sweep_map_long_table(const sweep::SweepMap& map);
[[nodiscard]] CsvTable trajectory_table(const std::vector<circuit::TrajectorySample>& samples);
[[nodiscard]] CsvTable ledger_table(const circuit::EnergyLedger& ledger);
[[nodiscard]] CsvTable motion_table(const mech::MotionTrace& trace);
[[nodiscard]] CsvTable response_table(const mech::FrequencyResponse& response);

[[nodiscard]] std::string point_flag(const sweep::SweepPoint& p);

/// Throws IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ipop::report
