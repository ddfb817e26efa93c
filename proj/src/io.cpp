#include "afcmem/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace afcmem::io {

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  fail(ErrorCode::IoError, "missing CSV column '" + name + "'");
}

std::vector<double> Table::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto cells = split(s);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream os;
      os << "line " << lineno << ": expected " << t.header.size() << " fields, got " << cells.size();
      fail(ErrorCode::IoError, os.str());
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << "line " << lineno << ": not a number: '" << c << "'";
        fail(ErrorCode::IoError, os.str());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) fail(ErrorCode::IoError, "CSV has no header");
  if (t.rows.empty()) fail(ErrorCode::IoError, "CSV has no data rows");
  return t;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  write_csv(out, table);
}

Table to_table(const ComplexSpectrum& s) {
  Table t{{"detuning_hz", "re", "im"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.frequency(i), s.values[i].real(), s.values[i].imag()});
  return t;
}

Table to_table(const PowerSpectrum& s) {
  Table t{{"detuning_hz", "power"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.frequency(i), s.values[i]});
  return t;
}

Table to_table(const Waveform& w) {
  Table t{{"t_s", "re", "im"}, {}};
  for (std::size_t i = 0; i < w.size(); ++i) t.rows.push_back({w.time(i), w.samples[i].real(), w.samples[i].imag()});
  return t;
}

Table to_table(const afc::AbsorptionSpectrum& s) {
  Table t{{"detuning_hz", "absorption_hz_per_hz", "shelved_fraction", "baseline_hz"}, {}};
  for (std::size_t i = 0; i < s.size(); ++i)
    t.rows.push_back({s.grid.frequency(i), s.absorption(i), s.shelved[i], s.baseline[i]});
  return t;
}

Table to_table(const routing::VoltageSchedule& s) {
  Table t{{"start_s", "voltage_v"}, {}};
  for (const auto& seg : s.segments) t.rows.push_back({seg.start, seg.voltage});
  return t;
}

Table to_table(const stats::CoincidenceRecord& r) {
  Table t{{"delay_s", "counts"}, {}};
  for (std::size_t i = 0; i < r.delay.size(); ++i) t.rows.push_back({r.delay[i], static_cast<double>(r.counts[i])});
  return t;
}

namespace {

FrequencyGrid grid_from(const std::vector<double>& f) {
  if (f.size() < 2) fail(ErrorCode::GridMismatch, "need at least two grid points");
  const double df = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
  if (!(df > 0.0)) fail(ErrorCode::GridMismatch, "grid must be ascending");
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::abs(f[i] - (f.front() + static_cast<double>(i) * df)) > 1e-6 * df)
      fail(ErrorCode::GridMismatch, "grid must be uniformly spaced");
  return FrequencyGrid{f.front(), df, f.size()};
}

}  // namespace

PowerSpectrum power_spectrum_from(const Table& t, double carrier_hz) {
  PowerSpectrum s;
  s.carrier_hz = carrier_hz;
  s.grid = grid_from(t.values("detuning_hz"));
  s.values = t.values("power");
  return s;
}

Waveform waveform_from(const Table& t) {
  const auto ts = t.values("t_s");
  const auto grid = grid_from(ts);
  const auto re = t.values("re");
  const auto im = t.values("im");
  Waveform w{grid.f0, grid.df, {}};
  for (std::size_t i = 0; i < re.size(); ++i) w.samples.emplace_back(re[i], im[i]);
  return validate(w);
}

afc::AbsorptionSpectrum absorption_from(const Table& t) {
  afc::AbsorptionSpectrum s;
  s.grid = grid_from(t.values("detuning_hz"));
  s.baseline = t.values("baseline_hz");
  s.shelved = t.values("shelved_fraction");
  s.active.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) s.active[i] = 1.0 - s.shelved[i];
  return afc::validate(s);
}

routing::VoltageSchedule schedule_from(const Table& t) {
  routing::VoltageSchedule s;
  const auto start = t.values("start_s");
  const auto v = t.values("voltage_v");
  for (std::size_t i = 0; i < start.size(); ++i) s.segments.push_back({start[i], v[i]});
  return routing::validate(s);
}

stats::CoincidenceRecord histogram_from(const Table& t, double coincidence_window, double acquisition) {
  stats::CoincidenceRecord r;
  r.delay = t.values("delay_s");
  for (double c : t.values("counts")) {
    if (c < 0.0 || c != std::floor(c)) fail(ErrorCode::IoError, "counts must be non-negative integers");
    r.counts.push_back(static_cast<std::int64_t>(c));
  }
  r.coincidence_window = coincidence_window;
  r.acquisition = acquisition;
  return stats::validate(r);
}

FitData fit_data_from(const Table& t) {
  FitData d{t.values("x"), t.values("y"), {}};
  for (const auto& h : t.header)
    if (h == "sigma") d.sigma = t.values("sigma");
  return d;
}

void write_record(std::ostream& out, const Record& r) {
  for (const auto& [k, v] : r) out << k << " = " << v << '\n';
}

}  // namespace afcmem::io
