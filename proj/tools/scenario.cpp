#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "afcmem/afc.hpp"
#include "afcmem/cavity.hpp"
#include "afcmem/echo.hpp"
#include "afcmem/fit.hpp"
#include "afcmem/routing.hpp"
#include "afcmem/stats.hpp"

namespace afcmem::cli {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::ConfigError, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Library validation failures on config values are config errors.
template <typename F>
auto checked(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

std::string fmt(double v) { return io::format_number(v); }

io::Table table(std::vector<std::string> header) { return io::Table{std::move(header), {}}; }

}  // namespace

// ---------------------------------------------------------------------------
// Block

Block::Block(const json& node, std::string path) : node_(&node), path_(std::move(path)) {
  if (!node.is_object()) config_error(path_, "expected an object");
}

std::string Block::path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Block::has(const std::string& key) const { return node_->contains(key); }

const json& Block::raw(const std::string& key) const {
  seen_.insert(key);
  if (!node_->contains(key)) config_error(path_of(key), "required field is missing");
  return node_->at(key);
}

double Block::number(const std::string& key) const {
  const json& v = raw(key);
  if (!v.is_number()) config_error(path_of(key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(path_of(key), "expected a finite number");
  return d;
}

double Block::number(const std::string& key, double fallback) const {
  seen_.insert(key);
  return has(key) ? number(key) : fallback;
}

int Block::integer(const std::string& key, int fallback) const {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_number_integer()) config_error(path_of(key), "expected an integer");
  return v.get<int>();
}

bool Block::boolean(const std::string& key, bool fallback) const {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_boolean()) config_error(path_of(key), "expected true or false");
  return v.get<bool>();
}

std::string Block::text(const std::string& key) const {
  const json& v = raw(key);
  if (!v.is_string()) config_error(path_of(key), "expected a string");
  return v.get<std::string>();
}

std::string Block::text(const std::string& key, const std::string& fallback) const {
  seen_.insert(key);
  return has(key) ? text(key) : fallback;
}

std::vector<double> Block::numbers(const std::string& key) const {
  const json& v = raw(key);
  if (!v.is_array()) config_error(path_of(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_error(path_of(key) + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::optional<Block> Block::child(const std::string& key) const {
  seen_.insert(key);
  if (!has(key)) return std::nullopt;
  return Block(node_->at(key), path_of(key));
}

Block Block::require(const std::string& key) const { return Block(raw(key), path_of(key)); }

std::vector<Block> Block::children(const std::string& key) const {
  const json& v = raw(key);
  if (!v.is_array()) config_error(path_of(key), "expected an array of objects");
  std::vector<Block> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], path_of(key) + "[" + std::to_string(i) + "]");
  return out;
}

void Block::done() const {
  for (const auto& item : node_->items())
    if (!seen_.count(item.key())) config_error(path_of(item.key()), "unknown field");
}

// ---------------------------------------------------------------------------
// Common blocks

namespace {

CombSpec read_comb(const std::optional<Block>& b, CombSpec c = {}) {
  if (!b) return c;
  c.n_teeth = b->integer("n_teeth", c.n_teeth);
  c.delta = b->number("delta", c.delta);
  c.finesse = b->number("finesse", c.finesse);
  const std::string shape = b->text("tooth_shape", "gaussian");
  if (shape == "gaussian") {
    c.tooth_shape = ToothShape::Gaussian;
  } else if (shape == "square") {
    c.tooth_shape = ToothShape::Square;
  } else {
    config_error(b->path_of("tooth_shape"), "expected \"gaussian\" or \"square\"");
  }
  c.eta_spectral = b->number("eta_spectral", c.eta_spectral);
  c.center_offset = b->number("center_offset", c.center_offset);
  b->done();
  return checked(b->path(), [&] { return validate(c); });
}

// Either explicit (kappa_ext, kappa_loss, kappa_ions) or the total-linewidth
// shortcut, where kappa_loss absorbs what the comb's residual absorption and
// the coupling leave of the measured loaded linewidth.
CavityParams read_device(const Block& b, const CombSpec* comb) {
  CavityParams p;
  p.f_res = b.number("f_res", 195.69e12);
  p.kappa_ext = b.number("kappa_ext");
  p.kappa_ions = b.number("kappa_ions", 0.0);
  if (b.has("total_linewidth")) {
    if (b.has("kappa_loss")) config_error(b.path_of("kappa_loss"), "give either kappa_loss or total_linewidth");
    if (comb == nullptr) config_error(b.path_of("total_linewidth"), "needs a comb block");
    p.kappa_loss = b.number("total_linewidth") - p.kappa_ext - p.kappa_ions * echo::residual_weight(*comb);
    if (p.kappa_loss < 0.0) config_error(b.path_of("total_linewidth"), "smaller than kappa_ext plus residual ion loss");
  } else {
    p.kappa_loss = b.number("kappa_loss");
  }
  b.done();
  return checked(b.path(), [&] { return validate(p); });
}

EnsembleParams read_ensemble(const std::optional<Block>& b) {
  EnsembleParams e;
  if (!b) return e;
  e.center_wavelength = b->number("center_wavelength", e.center_wavelength);
  e.inhom_fwhm = b->number("inhom_fwhm", e.inhom_fwhm);
  e.gamma_h = b->number("gamma_h", e.gamma_h);
  e.t_afc = b->number("t_afc", e.t_afc);
  b->done();
  return checked(b->path(), [&] { return validate(e); });
}

afc::SideholeSpec read_sideholes(const std::optional<Block>& b, afc::SideholeSpec s = {}) {
  if (!b) return s;
  s.slope_nb = b->number("slope_nb", s.slope_nb);
  s.slope_li = b->number("slope_li", s.slope_li);
  s.relative_depth = b->number("relative_depth", s.relative_depth);
  s.intercept_nb = b->number("intercept_nb", s.intercept_nb);
  s.intercept_li = b->number("intercept_li", s.intercept_li);
  b->done();
  return checked(b->path(), [&] { return afc::validate(s); });
}

afc::SideholeSpec no_sideholes() {
  afc::SideholeSpec s;
  s.relative_depth = 0.0;
  return s;
}

// Absorption spectrum of a prepared comb on a grid covering it with margin.
afc::AbsorptionSpectrum comb_spectrum(const EnsembleParams& ens, double kappa_ions, const CombSpec& comb,
                                      const afc::SideholeSpec& sh, double b_field, int divisions) {
  const double half = (comb.n_teeth / 2.0 + 8.0) * comb.delta + std::abs(comb.center_offset);
  const auto s0 = afc::inhomogeneous_profile(ens, kappa_ions, FrequencyGrid::symmetric(0.0, half, comb.delta / divisions));
  return afc::build_comb(s0, comb, sh, b_field);
}

std::uint64_t require_seed(const RunContext& ctx, const std::optional<std::uint64_t>& config_seed,
                           const std::string& path) {
  if (ctx.seed) return *ctx.seed;
  if (config_seed) return *config_seed;
  config_error(path, "stochastic sampling is enabled but no seed was given (config \"seed\" or --seed)");
}

// ---------------------------------------------------------------------------
// Pipelines

struct Inputs {
  const Block& root;
  const RunContext& ctx;
  std::optional<std::uint64_t> config_seed;
};

Artifacts simulate_transmission(const Inputs& in) {
  const auto dev = read_device(in.root.require("device"), nullptr);
  const double kie = in.root.number("kappa_ions_eff", dev.kappa_ions);
  const double kt = dev.kappa_total() + kie;
  double half = 6.0 * kt, df = kt / 40.0;
  if (auto g = in.root.child("grid")) {
    half = g->number("half_span", half);
    df = g->number("df", df);
    g->done();
  }
  const bool do_fit = in.root.boolean("fano_fit", true);
  double noise = 0.0;
  std::optional<std::uint64_t> seed;
  if (auto n = in.root.child("noise")) {
    noise = n->number("sigma");
    n->done();
    if (noise > 0.0) seed = require_seed(in.ctx, in.config_seed, n->path_of("sigma"));
  }
  in.root.done();

  const auto grid = checked("grid", [&] { return validate(FrequencyGrid::symmetric(0.0, half, df)); });
  const auto t = cavity::transmission(dev, grid, kie);
  auto p = cavity::power_transmission(dev, grid, kie);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::normal_distribution<double> g(0.0, noise);
    for (auto& v : p.values) v += g(rng);
  }
  Artifacts out;
  out.seed_used = seed;
  auto tab = table({"detuning_hz", "power", "re", "im"});
  for (std::size_t i = 0; i < grid.n; ++i)
    tab.rows.push_back({grid.frequency(i), p.values[i], t.values[i].real(), t.values[i].imag()});
  out.tables.emplace_back("transmission.csv", std::move(tab));
  out.summary.emplace_back("kappa_total_hz", fmt(kt));
  out.summary.emplace_back("q_from_kappa", fmt(q_from_kappa(dev.f_res, kt)));
  out.summary.emplace_back("on_resonance_abs_t", fmt(std::abs(cavity::field_transmission(dev, kie, 0.0))));
  if (do_fit) {
    const auto r = cavity::fano_extract(p);
    out.summary.emplace_back("fit_q_loaded", fmt(r.q_loaded));
    out.summary.emplace_back("fit_fwhm_hz", fmt(r.fwhm));
    out.summary.emplace_back("fit_center_hz", fmt(r.f_center));
    out.summary.emplace_back("fit_extinction_db", fmt(r.extinction_ratio_db()));
    out.summary.emplace_back("fit_fano_q", fmt(r.fano_q));
  }
  return out;
}

Artifacts power_sweep(const Inputs& in) {
  const auto dev = read_device(in.root.require("device"), nullptr);
  cavity::SaturationModel model{dev.kappa_ions, 1e-9};
  if (auto s = in.root.child("saturation")) {
    model.kappa_ions0 = s->number("kappa_ions0", model.kappa_ions0);
    model.p_sat = s->number("p_sat", model.p_sat);
    s->done();
  }
  checked("saturation", [&] { return cavity::validate(model); });
  std::vector<double> powers;
  int per_decade = 0;
  if (in.root.has("powers")) {
    powers = in.root.numbers("powers");
  } else {
    const auto r = in.root.require("power_range");
    const double lo = r.number("min"), hi = r.number("max");
    per_decade = r.integer("per_decade", 20);
    r.done();
    if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) config_error("power_range", "need 0 < min < max and per_decade >= 1");
    const int n = static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9));
    for (int i = 0; i <= n; ++i) powers.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  }
  in.root.done();

  cavity::SweepOptions opts;
  opts.threads = in.ctx.threads;
  const auto pts = cavity::power_sweep(dev, model, powers, opts);
  Artifacts out;
  auto tab = table({"power_w", "kappa_ions_hz", "q_loaded", "extinction_ratio", "extinction_db"});
  for (const auto& p : pts)
    tab.rows.push_back({p.power, p.kappa_ions, p.q_loaded, p.extinction_ratio, 10.0 * std::log10(p.extinction_ratio)});
  out.tables.emplace_back("power_sweep.csv", std::move(tab));
  const auto best = std::max_element(pts.begin(), pts.end(),
                                     [](const auto& a, const auto& b) { return a.extinction_ratio < b.extinction_ratio; });
  const double pc = cavity::critical_coupling_power(dev, model);
  out.summary.emplace_back("critical_coupling_power_w", fmt(pc));
  out.summary.emplace_back("max_extinction_power_w", fmt(best->power));
  out.summary.emplace_back("max_extinction_db", fmt(10.0 * std::log10(best->extinction_ratio)));
  if (per_decade > 0 && pc > 0.0)
    out.summary.emplace_back("grid_steps_from_critical", fmt(std::abs(std::log10(best->power / pc)) * per_decade));
  return out;
}

Artifacts prepare_afc(const Inputs& in) {
  const auto ens = read_ensemble(in.root.child("ensemble"));
  const double kappa_ions = in.root.number("kappa_ions", 1778e6);
  const auto comb = read_comb(in.root.child("comb"));
  const auto sh = read_sideholes(in.root.child("sideholes"));
  const double b_field = in.root.number("b_field", 0.0);
  const int divisions = in.root.integer("grid_divisions", 64);
  const double wait = in.root.number("wait", 0.0);
  in.root.done();
  if (divisions < 2) config_error("grid_divisions", "must be >= 2");
  if (wait < 0.0) config_error("wait", "must be >= 0");

  auto s = comb_spectrum(ens, kappa_ions, comb, sh, b_field, divisions);
  if (wait > 0.0) s = afc::decay(s, wait, ens.t_afc);

  // Teeth are local maxima inside the comb band.
  const double half_band = 0.5 * comb.n_teeth * comb.delta;
  int teeth = 0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double f = s.grid.frequency(i) - comb.center_offset;
    const double a = s.absorption(i);
    if (std::abs(f) < half_band && a > s.absorption(i - 1) && a >= s.absorption(i + 1) && a > 0.5 * s.baseline[i]) ++teeth;
  }
  const double trough_f = comb.center_offset + (comb.n_teeth % 2 == 1 ? 0.5 * comb.delta : 0.0);
  const auto ti = static_cast<std::size_t>(std::lround((trough_f - s.grid.f0) / s.grid.df));

  Artifacts out;
  out.tables.emplace_back("absorption.csv", io::to_table(s));
  const auto [nb, li] = afc::sidehole_offsets(sh, b_field);
  out.summary.emplace_back("teeth_found", std::to_string(teeth));
  out.summary.emplace_back("trough_fraction", fmt(s.absorption(ti) / s.baseline[ti]));
  out.summary.emplace_back("removed_absorption_hz2", fmt(s.removed_absorption()));
  out.summary.emplace_back("sidehole_nb_hz", fmt(nb));
  out.summary.emplace_back("sidehole_li_hz", fmt(li));
  out.summary.emplace_back("residual_weight", fmt(echo::residual_weight(comb)));
  return out;
}

Artifacts optimize_field(const Inputs& in) {
  const double delta = in.root.number("delta", 10e6);
  const auto sh = read_sideholes(in.root.child("sideholes"));
  const auto range = in.root.numbers("b_range");
  const int scan = in.root.integer("scan_points", 1501);
  in.root.done();
  if (range.size() != 2) config_error("b_range", "expected [low, high]");
  if (scan < 2) config_error("scan_points", "must be >= 2");

  const double b = checked("b_range", [&] { return afc::optimize_field(delta, sh, range[0], range[1]); });
  Artifacts out;
  auto tab = table({"b_field_t", "cost_hz2", "offset_nb_hz", "offset_li_hz"});
  for (int i = 0; i < scan; ++i) {
    const double x = range[0] + (range[1] - range[0]) * i / (scan - 1);
    const auto [nb, li] = afc::sidehole_offsets(sh, x);
    tab.rows.push_back({x, afc::field_cost(delta, sh, x), nb, li});
  }
  out.tables.emplace_back("field_scan.csv", std::move(tab));
  const auto [nb, li] = afc::sidehole_offsets(sh, b);
  out.summary.emplace_back("b_field_t", fmt(b));
  out.summary.emplace_back("cost_hz2", fmt(afc::field_cost(delta, sh, b)));
  out.summary.emplace_back("offset_nb_hz", fmt(nb));
  out.summary.emplace_back("offset_li_hz", fmt(li));
  return out;
}

Artifacts store(const Inputs& in) {
  const auto comb = read_comb(in.root.child("comb"));
  const auto dev = read_device(in.root.require("device"), &comb);
  const auto ens = read_ensemble(in.root.child("ensemble"));
  const auto sh = read_sideholes(in.root.child("sideholes"), no_sideholes());
  const double b_field = in.root.number("b_field", 0.0);
  double fwhm = 15e-9, center = 40e-9, dt = 0.1e-9, photons = 1.0;
  if (auto p = in.root.child("pulse")) {
    fwhm = p->number("fwhm", fwhm);
    center = p->number("center", center);
    dt = p->number("dt", dt);
    photons = p->number("mean_photons", photons);
    p->done();
  }
  const double fft_duration = in.root.number("fft_duration", 3.2e-6);
  const double window = in.root.number("window", 30e-9);
  const int bins = in.root.integer("bins_per_tooth_period", 64);
  const bool time_domain = in.root.boolean("time_domain", true);
  in.root.done();
  if (!(fwhm > 0.0 && dt > 0.0 && center > 0.0 && photons > 0.0)) config_error("pulse", "fwhm, dt, center and mean_photons must be > 0");
  const double storage = 1.0 / comb.delta;
  const double t_end = center + storage + 4.0 * fwhm;
  if (!(fft_duration >= t_end)) config_error("fft_duration", "must cover the echo (>= " + fmt(t_end) + " s)");

  const auto spec = comb_spectrum(ens, dev.kappa_ions, comb, sh, b_field, 64);
  const echo::EnsembleResponse resp(spec, ens.gamma_h);
  const auto n_fft = static_cast<std::size_t>(std::llround(fft_duration / dt));
  const auto n_td = static_cast<std::size_t>(std::ceil(t_end / dt));
  const auto in_fft = gaussian_pulse(0.0, dt, n_fft, center, fwhm, photons);
  const auto fft_out = echo::store_fft(dev, resp, in_fft);
  const double echo_center = center + storage;

  Artifacts out;
  out.summary.emplace_back("eta_analytic", fmt(echo::afc_efficiency_analytic(dev, comb).eta_total));
  out.summary.emplace_back("eta_fft", fmt(echo::efficiency_from_trace(fft_out, in_fft, echo_center, window)));
  out.summary.emplace_back("echo_delay_fft_s", fmt(echo::peak_time(fft_out, center + 0.5 * storage) - center));

  auto tab = table(time_domain ? std::vector<std::string>{"t_s", "input_power", "fft_power", "td_power"}
                               : std::vector<std::string>{"t_s", "input_power", "fft_power"});
  if (time_domain) {
    echo::DiscretizationOptions o;
    o.tooth_period = comb.delta;
    o.bins_per_tooth_period = bins;
    const auto disc = echo::discretize_ensemble(spec, ens.gamma_h, o);
    const auto in_td = gaussian_pulse(0.0, dt, n_td, center, fwhm, photons);
    const auto td = echo::simulate_time_domain(disc, dev, in_td);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n_td; ++i) {
      if (std::abs(in_td.time(i) - echo_center) > 0.5 * window) continue;
      num += std::norm(td.output.samples[i] - fft_out.samples[i]);
      den += std::norm(fft_out.samples[i]);
    }
    out.summary.emplace_back("eta_time_domain", fmt(echo::efficiency_from_trace(td.output, in_td, echo_center, window)));
    out.summary.emplace_back("echo_delay_time_domain_s", fmt(echo::peak_time(td.output, center + 0.5 * storage) - center));
    out.summary.emplace_back("relative_l2_echo_window", fmt(std::sqrt(num / den)));
    out.summary.emplace_back("ensemble_modes", std::to_string(disc.size()));
    for (std::size_t i = 0; i < n_td; ++i)
      tab.rows.push_back({in_td.time(i), std::norm(in_td.samples[i]), std::norm(fft_out.samples[i]),
                          std::norm(td.output.samples[i])});
  } else {
    for (std::size_t i = 0; i < n_td; ++i)
      tab.rows.push_back({in_fft.time(i), std::norm(in_fft.samples[i]), std::norm(fft_out.samples[i])});
  }
  out.tables.emplace_back("trace.csv", std::move(tab));
  return out;
}

Artifacts multiplex(const Inputs& in) {
  CombSpec def;
  def.n_teeth = 41;
  const auto comb = read_comb(in.root.child("comb"), def);
  const auto dev = read_device(in.root.require("device"), &comb);
  const auto ens = read_ensemble(in.root.child("ensemble"));
  echo::MultiplexSpec m;
  m.storage_time = 1.0 / comb.delta;
  if (auto b = in.root.child("modes")) {
    m.modes = b->integer("count", m.modes);
    m.slot = b->number("slot", m.slot);
    m.pulse_fwhm = b->number("pulse_fwhm", m.pulse_fwhm);
    m.first_center = b->number("first_center", m.first_center);
    m.dt = b->number("dt", m.dt);
    m.duration = b->number("duration", m.duration);
    b->done();
  }
  in.root.done();

  const auto spec = comb_spectrum(ens, dev.kappa_ions, comb, no_sideholes(), 0.0, 64);
  const echo::EnsembleResponse resp(spec, ens.gamma_h);
  const auto r = echo::multiplex(dev, resp, m);

  Artifacts out;
  auto modes = table({"mode", "input_center_s", "echo_time_s", "efficiency"});
  double mean = 0.0;
  for (std::size_t i = 0; i < r.mode_efficiency.size(); ++i) {
    modes.rows.push_back({static_cast<double>(i), m.first_center + m.slot * static_cast<double>(i), r.echo_times[i],
                          r.mode_efficiency[i]});
    mean += r.mode_efficiency[i];
  }
  mean /= static_cast<double>(r.mode_efficiency.size());
  double var = 0.0;
  for (double e : r.mode_efficiency) var += (e - mean) * (e - mean);
  const double cv = std::sqrt(var / static_cast<double>(r.mode_efficiency.size())) / mean;
  out.tables.emplace_back("modes.csv", std::move(modes));
  auto trace = table({"t_s", "input_power", "output_power"});
  const double t_stop = m.first_center + m.slot * m.modes + m.storage_time + 2.0 * m.slot;
  for (std::size_t i = 0; i < r.output.size() && r.output.time(i) <= t_stop; ++i)
    trace.rows.push_back({r.output.time(i), std::norm(r.input.samples[i]), std::norm(r.output.samples[i])});
  out.tables.emplace_back("trace.csv", std::move(trace));
  out.summary.emplace_back("modes", std::to_string(m.modes));
  out.summary.emplace_back("collective_efficiency", fmt(r.collective));
  out.summary.emplace_back("mean_mode_efficiency", fmt(mean));
  out.summary.emplace_back("mode_efficiency_cv", fmt(cv));
  return out;
}

Artifacts sweep_finesse(const Inputs& in) {
  const auto comb = read_comb(in.root.child("comb"));
  const auto dev = read_device(in.root.require("device"), nullptr);
  double lo = 1.1, hi = 15.0, step = 0.01;
  if (auto f = in.root.child("finesse")) {
    lo = f->number("min", lo);
    hi = f->number("max", hi);
    step = f->number("step", step);
    f->done();
  }
  in.root.done();
  if (!(lo > 1.0) || !(hi >= lo) || !(step > 0.0)) config_error("finesse", "need 1 < min <= max and step > 0");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(lo + step * static_cast<double>(i));

  const auto s = echo::sweep_finesse(dev, comb, grid);
  Artifacts out;
  auto tab = table({"F", "eta", "K", "C_eff"});
  for (const auto& p : s.points) tab.rows.push_back({p.finesse, p.eta, p.k_match, p.c_eff});
  out.tables.emplace_back("sweep.csv", std::move(tab));
  out.summary.emplace_back("argmax_finesse", fmt(s.argmax_finesse));
  out.summary.emplace_back("peak_eta", fmt(s.peak_eta));
  out.summary.emplace_back("eta_at_comb_finesse", fmt(echo::afc_efficiency_analytic(dev, comb).eta_total));
  return out;
}

routing::RoutingSetup read_routing(const Inputs& in) {
  routing::RoutingSetup s;
  s.comb = read_comb(in.root.child("comb"), s.comb);
  s.cavity = read_device(in.root.require("device"), &s.comb);
  s.ensemble = read_ensemble(in.root.child("ensemble"));
  s.sideholes = read_sideholes(in.root.child("sideholes"), s.sideholes);
  s.b_field = in.root.number("b_field", s.b_field);
  const auto r = in.root.require("routing");
  const double slope = r.number("eo_slope", 1.11e9);
  std::vector<std::pair<std::string, double>> channels;
  for (const auto& c : r.children("channels")) {
    channels.emplace_back(c.text("label"), c.number("voltage"));
    c.done();
  }
  s.dt = r.number("dt", s.dt);
  s.pulse_duration = r.number("pulse_duration", s.pulse_duration);
  s.window = r.number("window", s.window);
  s.bins_per_tooth_period = r.integer("bins_per_tooth_period", s.bins_per_tooth_period);
  r.done();
  s.plan = checked(r.path_of("channels"), [&] { return routing::make_plan(s.cavity.f_res, slope, channels); });
  s.threads = in.ctx.threads;
  return s;
}

Artifacts route(const Inputs& in) {
  const auto setup = read_routing(in);
  std::vector<double> periods;
  double duty = 0.5;
  std::optional<Block> sr;
  if (auto sw = in.root.child("square_wave")) {
    periods = sw->numbers("periods");
    duty = sw->number("duty", duty);
    sw->done();
    if (periods.empty()) config_error(sw->path_of("periods"), "at least one period is needed");
    if (setup.plan.channels.size() != 2) config_error("routing.channels", "a square-wave sweep needs exactly two channels");
  }
  std::string sr_channel;
  double sr_center = 0.0;
  routing::VoltageSchedule sr_schedule;
  if ((sr = in.root.child("shift_restore"))) {
    sr_channel = sr->text("channel");
    sr_center = sr->number("pulse_center");
    const json& segs = sr->raw("schedule");
    if (!segs.is_array() || segs.empty()) config_error(sr->path_of("schedule"), "expected [[start_s, voltage], ...]");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& seg = segs[i];
      if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number())
        config_error(sr->path_of("schedule") + "[" + std::to_string(i) + "]", "expected [start_s, voltage]");
      sr_schedule.segments.push_back({seg[0].get<double>(), seg[1].get<double>()});
    }
    sr->done();
    checked(sr->path_of("schedule"), [&] { return routing::validate(sr_schedule); });
    checked(sr->path_of("channel"), [&] { return setup.plan.find(sr_channel); });
  }
  in.root.done();
  if (periods.empty() && !sr) config_error("", "route needs a square_wave or a shift_restore block");

  Artifacts out;
  const double linewidth = setup.cavity.kappa_total() + setup.cavity.kappa_ions * echo::residual_weight(setup.comb);
  if (!periods.empty()) {
    const auto& a = setup.plan.channels[0];
    const auto& b = setup.plan.channels[1];
    auto tab = table({"t_eo_s", "eta_" + a.label, "eta_" + b.label, "chi_" + a.label + "_" + b.label,
                      "chi_" + b.label + "_" + a.label});
    for (double period : periods) {
      const double total = period + 200e-9;
      const auto sched = checked("square_wave", [&] {
        return routing::square_wave(period, a.dc_voltage, b.dc_voltage, duty, total, 0.0, setup.dt);
      });
      const auto hc = routing::half_cycles(period, duty, total);
      const auto r = routing::route(setup, sched,
                                    {{a.label, hc[0].center}, {a.label, hc[1].center}, {b.label, hc[0].center},
                                     {b.label, hc[1].center}});
      std::map<std::string, double> eta, chi;
      for (const auto& e : r.efficiencies) eta[e.channel] = e.eta_s;
      for (const auto& c : r.crosstalk) chi[c.from] = c.chi;
      tab.rows.push_back({period, eta[a.label], eta[b.label], chi[a.label], chi[b.label]});
    }
    out.tables.emplace_back("routing.csv", std::move(tab));
    const double sep = std::abs(a.center_freq - b.center_freq);
    out.summary.emplace_back("loaded_linewidth_hz", fmt(linewidth));
    out.summary.emplace_back("channel_separation_hz", fmt(sep));
    out.summary.emplace_back("chi_double_pass_oracle", fmt(routing::lorentzian_crosstalk(linewidth, sep)));
  }
  if (sr) {
    const auto r = routing::store_shift_restore(setup, sr_channel, sr_center, sr_schedule);
    auto tab = table({"t_s", "static_power", "shifted_power"});
    for (std::size_t i = 0; i < r.static_output.size(); ++i)
      tab.rows.push_back({r.static_output.time(i), std::norm(r.static_output.samples[i]),
                          std::norm(r.shifted_output.samples[i])});
    out.tables.emplace_back("shift_restore.csv", std::move(tab));
    out.summary.emplace_back("eta_static", fmt(r.eta_static));
    out.summary.emplace_back("eta_shifted", fmt(r.eta_shifted));
    out.summary.emplace_back("retention_ratio", fmt(r.ratio));
    out.summary.emplace_back("echo_delay_s",
                             fmt(echo::peak_time(r.shifted_output, sr_center + 0.7 / setup.comb.delta) - sr_center));
    out.summary.emplace_back("overlap_warning", r.overlap_warning ? "true" : "false");
  }
  return out;
}

// Starting point from the data when no guess is given.
std::vector<double> default_guess(const std::string& model, const io::FitData& d) {
  const auto [ymin, ymax] = std::minmax_element(d.y.begin(), d.y.end());
  const double x_at_max = d.x[static_cast<std::size_t>(ymax - d.y.begin())];
  const double x_at_min = d.x[static_cast<std::size_t>(ymin - d.y.begin())];
  const double span = d.x.back() - d.x.front();
  double mean = 0.0;
  for (double y : d.y) mean += y;
  mean /= static_cast<double>(d.y.size());
  if (model == "exp_decay") return {d.y.front(), span / 3.0};
  if (model == "fringe") return {mean, (*ymax - *ymin) / (*ymax + *ymin), x_at_max};
  if (model == "gaussian_pulse") return {*ymax - *ymin, x_at_max, span / 4.0, *ymin};
  return {x_at_min, span / 10.0, 1.0 - *ymin / *ymax, 0.0, *ymax, 0.0};
}

Artifacts fit_data(const Inputs& in) {
  const std::string name = in.root.text("model");
  std::filesystem::path data = in.root.text("data");
  std::optional<std::vector<double>> guess;
  if (in.root.has("guess")) guess = in.root.numbers("guess");
  std::optional<fit::Bounds> bounds;
  if (auto b = in.root.child("bounds")) {
    bounds = fit::Bounds{b->numbers("lower"), b->numbers("upper")};
    b->done();
  }
  in.root.done();
  const auto model = fit::model_by_name(name);
  if (!model) config_error("model", "unknown model \"" + name + "\" (fano, exp_decay, fringe, gaussian_pulse)");
  if (data.is_relative()) data = in.ctx.base_dir / data;
  const auto d = io::fit_data_from(io::read_csv(data));
  if (d.x.empty()) fail(ErrorCode::IoError, data.string() + ": no data rows");

  const auto r = fit::fit({*model, d.x, d.y, d.sigma, guess ? *guess : default_guess(name, d), bounds});
  Artifacts out;
  auto tab = table({"index", "value", "stderr"});
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    tab.rows.push_back({static_cast<double>(i), r.params[i], r.stderr_of(i)});
    out.summary.emplace_back(model->param_names[i], fmt(r.params[i]));
    out.summary.emplace_back(model->param_names[i] + "_stderr", fmt(r.stderr_of(i)));
  }
  out.tables.emplace_back("fit_params.csv", std::move(tab));
  out.summary.emplace_back("model", name);
  out.summary.emplace_back("chi2", fmt(r.chi2));
  out.summary.emplace_back("reduced_chi2", fmt(r.reduced_chi2));
  out.summary.emplace_back("converged", r.converged ? "true" : "false");
  out.summary.emplace_back("iterations", std::to_string(r.iterations));
  return out;
}

Artifacts witness(const Inputs& in) {
  Artifacts out;
  auto estimate = [&](const Block& b, const std::string& what) -> stats::Estimate {
    if (b.has("value")) {
      const stats::Estimate e{b.number("value"), b.number("sigma", 0.0)};
      b.done();
      return e;
    }
    if (what == "g2") {
      std::filesystem::path path = b.text("histogram");
      const double window = b.number("coincidence_window");
      const double acquisition = b.number("acquisition", 1.0);
      stats::WindowGeometry geo;
      geo.center = b.number("center", geo.center);
      geo.side_spacing = b.number("side_spacing", geo.side_spacing);
      geo.side_windows = b.integer("side_windows", geo.side_windows);
      b.done();
      if (path.is_relative()) path = in.ctx.base_dir / path;
      const auto rec = io::histogram_from(io::read_csv(path), window, acquisition);
      return stats::g2_from_counts(rec, geo);
    }
    const auto f = b.require("fringe");
    stats::FransonParams p;
    p.amplitude = f.number("amplitude");
    p.visibility = f.number("visibility");
    p.phase0 = f.number("phase0", 0.0);
    p.offset = f.number("offset", 0.0);
    const int points = f.integer("points", 24);
    f.done();
    b.done();
    if (points < 4) config_error(f.path_of("points"), "must be >= 4");
    const std::uint64_t seed = require_seed(in.ctx, in.config_seed, f.path());
    out.seed_used = seed;
    std::vector<double> phases;
    for (int i = 0; i < points; ++i) phases.push_back(2.0 * kPi * i / points);
    // Each fringe gets its own stream derived from the run seed.
    const auto counts = stats::sample_fringe(phases, p, seed + fnv1a(what));
    std::vector<double> y(counts.begin(), counts.end()), s;
    for (double c : y) s.push_back(std::sqrt(std::max(c, 1.0)));
    auto tab = table({"phase_rad", "counts"});
    for (int i = 0; i < points; ++i) tab.rows.push_back({phases[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)]});
    out.tables.emplace_back("fringe_" + what + ".csv", std::move(tab));
    const auto r = fit::fit({fit::fringe(), phases, y, s, default_guess("fringe", {phases, y, s}), std::nullopt});
    return fit::visibility(r);
  };
  const auto g2 = estimate(in.root.require("g2"), "g2");
  const auto v1 = estimate(in.root.require("v1"), "v1");
  const auto v2 = estimate(in.root.require("v2"), "v2");
  const double ref_sigma = in.root.number("reference_sigma", 0.0);
  in.root.done();

  const auto w = stats::witness(g2, v1, v2);
  out.summary.emplace_back("g2", fmt(g2.value));
  out.summary.emplace_back("g2_sigma", fmt(g2.sigma));
  out.summary.emplace_back("v1", fmt(v1.value));
  out.summary.emplace_back("v2", fmt(v2.value));
  out.summary.emplace_back("w", fmt(w.w));
  out.summary.emplace_back("sigma_w", fmt(w.sigma_w));
  out.summary.emplace_back("significance", fmt(std::abs(w.w) / w.sigma_w));
  if (ref_sigma > 0.0) out.summary.emplace_back("significance_reference_sigma", fmt(std::abs(w.w) / ref_sigma));
  return out;
}

using Pipeline = std::function<Artifacts(const Inputs&)>;

const std::vector<std::pair<std::string, Pipeline>>& registry() {
  static const std::vector<std::pair<std::string, Pipeline>> r = {
      {"simulate-transmission", simulate_transmission},
      {"power-sweep", power_sweep},
      {"prepare-afc", prepare_afc},
      {"optimize-field", optimize_field},
      {"store", store},
      {"multiplex", multiplex},
      {"sweep-finesse", sweep_finesse},
      {"route", route},
      {"fit", fit_data},
      {"witness", witness},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : registry()) n.push_back(k);
    return n;
  }();
  return names;
}

Artifacts run_pipeline(const std::string& pipeline, const json& config, const RunContext& ctx) {
  const Block root(config, "");
  const std::string declared = root.text("pipeline", pipeline);
  if (declared != pipeline) config_error("pipeline", "config is for \"" + declared + "\", not \"" + pipeline + "\"");
  root.text("name", "");
  root.text("description", "");
  if (auto o = root.child("outputs")) {
    o->text("dir", "");
    o->done();
  }
  std::optional<std::uint64_t> seed;
  if (root.has("seed")) {
    const json& s = root.raw("seed");
    if (!s.is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    seed = s.get<std::uint64_t>();
  }
  for (const auto& [name, run] : registry())
    if (name == pipeline) return run(Inputs{root, ctx, seed});
  config_error("pipeline", "unknown pipeline \"" + pipeline + "\"");
}

json load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::ConfigError, "cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

void write_artifacts(const std::filesystem::path& out, const std::string& pipeline, const json& config,
                     const Artifacts& artifacts) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());
  json manifest;
  manifest["pipeline"] = pipeline;
  manifest["name"] = config.value("name", pipeline);
  manifest["version"] = AFCMEM_VERSION;
  manifest["seed"] = artifacts.seed_used ? json(*artifacts.seed_used) : json(nullptr);
  manifest["input_hash"] = hex(fnv1a(config.dump()));
  json files = json::object();
  for (const auto& [name, tab] : artifacts.tables) {
    io::write_csv(out / name, tab);
    files[name] = hex(fnv1a(file_bytes(out / name)));
  }
  {
    std::ofstream f(out / "summary.txt");
    if (!f) fail(ErrorCode::IoError, "cannot write " + (out / "summary.txt").string());
    io::write_record(f, artifacts.summary);
  }
  files["summary.txt"] = hex(fnv1a(file_bytes(out / "summary.txt")));
  manifest["outputs"] = files;
  std::ofstream f(out / "manifest.json");
  if (!f) fail(ErrorCode::IoError, "cannot write " + (out / "manifest.json").string());
  f << manifest.dump(2) << '\n';
}

}  // namespace afcmem::cli
