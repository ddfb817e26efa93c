#pragma once

// CSV readers and writers for the tabular artifacts. Numbers are written with
// 17 significant digits so files round-trip exactly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "afcmem/afc.hpp"
#include "afcmem/core.hpp"
#include "afcmem/routing.hpp"
#include "afcmem/stats.hpp"

namespace afcmem::io {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a named column; throws IoError when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

std::string format_number(double v);

Table read_csv(std::istream& in);
Table read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

// detuning_hz, re, im
Table to_table(const ComplexSpectrum& s);
// detuning_hz, power
Table to_table(const PowerSpectrum& s);
// t_s, re, im
Table to_table(const Waveform& w);
// detuning_hz, absorption_hz_per_hz, shelved_fraction, baseline_hz
Table to_table(const afc::AbsorptionSpectrum& s);
// start_s, voltage_v
Table to_table(const routing::VoltageSchedule& s);
// delay_s, counts
Table to_table(const stats::CoincidenceRecord& r);

PowerSpectrum power_spectrum_from(const Table& t, double carrier_hz = 0.0);
Waveform waveform_from(const Table& t);
afc::AbsorptionSpectrum absorption_from(const Table& t);
routing::VoltageSchedule schedule_from(const Table& t);
stats::CoincidenceRecord histogram_from(const Table& t, double coincidence_window, double acquisition);

// Fit input: x, y and an optional sigma column.
struct FitData {
  std::vector<double> x, y, sigma;
};
FitData fit_data_from(const Table& t);

using Record = std::vector<std::pair<std::string, std::string>>;
void write_record(std::ostream& out, const Record& r);

}  // namespace afcmem::io
