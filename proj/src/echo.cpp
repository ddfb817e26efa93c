#include "afcmem/echo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fft.hpp"

namespace afcmem::echo {

double dephasing_factor(const CombSpec& comb) {
  const double f = comb.finesse;
  if (comb.tooth_shape == ToothShape::Square) {
    const double x = kPi / f;
    const double s = std::sin(x) / x;
    return s * s;
  }
  return std::exp(-kPi * kPi / (2.0 * std::log(2.0) * f * f));
}

double residual_weight(const CombSpec& comb) {
  return comb.eta_spectral / comb.finesse + (1.0 - comb.eta_spectral);
}

EfficiencyBreakdown afc_efficiency_analytic(const CavityParams& params, const CombSpec& comb) {
  validate(params);
  validate(comb);
  EfficiencyBreakdown b;
  const double kt = params.kappa_total();
  const double eta = comb.eta_spectral;
  const double f = comb.finesse;
  b.eta_d = dephasing_factor(comb);
  b.c_bare = params.kappa_ions / kt;
  b.c_eff = residual_weight(comb) * b.c_bare;
  const double kappa_ions_eff = params.kappa_ions * residual_weight(comb);
  const double denom = params.kappa_loss + kappa_ions_eff;
  b.k_match = denom > 0.0 ? params.kappa_ext / denom : std::numeric_limits<double>::infinity();
  const double contrast = eta > 0.0 ? 1.0 / (f * (1.0 / eta - 1.0) + 1.0) : 0.0;
  b.bracket = contrast * (params.kappa_ext / kt) * 4.0 * b.c_eff / ((1.0 + b.c_eff) * (1.0 + b.c_eff));
  b.eta_total = b.bracket * b.bracket * b.eta_d;
  return b;
}

FinesseSweep sweep_finesse(const CavityParams& params, const CombSpec& comb_template,
                           std::span<const double> finesse_grid, std::span<const double> eta_override) {
  if (!eta_override.empty() && eta_override.size() != finesse_grid.size())
    fail(ErrorCode::GridMismatch, "eta_override must match the finesse grid");
  FinesseSweep out;
  out.points.reserve(finesse_grid.size());
  for (std::size_t i = 0; i < finesse_grid.size(); ++i) {
    CombSpec c = comb_template;
    c.finesse = finesse_grid[i];
    if (!eta_override.empty()) c.eta_spectral = eta_override[i];
    const auto b = afc_efficiency_analytic(params, c);
    out.points.push_back({c.finesse, b.eta_total, b.k_match, b.c_eff});
    if (i == 0 || b.eta_total > out.peak_eta) {
      out.peak_eta = b.eta_total;
      out.argmax_finesse = c.finesse;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuum ensemble response

namespace {

// Integral of a unit hat of half-width w centered at offset x against
// 1 / (i u + gamma/2). A continuous density keeps Im Sigma free of the log
// spikes that a staircase density puts at every cell edge.
cplx hat_kernel(double x, double w, double gamma) {
  const cplx c(0.5 * gamma, x);
  const cplx ln_m = std::log(c - cplx(0.0, w));
  const cplx ln_0 = std::log(c);
  const cplx ln_p = std::log(c + cplx(0.0, w));
  const cplx mi(0.0, -1.0);
  // int 1/D = -i Log D, int u/D = -i u + c Log D, D = i u + c.
  const cplx a_left = mi * (ln_0 - ln_m);
  const cplx a_right = mi * (ln_p - ln_0);
  const cplx b_left = (mi * 0.0 + c * ln_0) - (mi * (-w) + c * ln_m);
  const cplx b_right = (mi * w + c * ln_p) - (c * ln_0);
  return a_left + b_left / w + a_right - b_right / w;
}

double edge_background(const afc::AbsorptionSpectrum& spec) {
  return 0.5 * (spec.absorption(0) + spec.absorption(spec.size() - 1));
}

}  // namespace

EnsembleResponse::EnsembleResponse(const afc::AbsorptionSpectrum& spec, double gamma_h)
    : EnsembleResponse(spec, gamma_h, (afc::validate(spec), edge_background(spec))) {}

EnsembleResponse::EnsembleResponse(const afc::AbsorptionSpectrum& spec, double gamma_h, double background)
    : gamma_h_(gamma_h), background_(background) {
  if (!(gamma_h > 0.0)) fail(ErrorCode::NonPositiveLinewidth, "gamma_h must be > 0");
  if (!(background >= 0.0)) fail(ErrorCode::NegativeRate, "background must be >= 0");
  afc::validate(spec);
  build(spec);
}

void EnsembleResponse::build(const afc::AbsorptionSpectrum& spec) {
  const std::size_t m = spec.size();
  const double df = spec.grid.df;
  std::vector<cplx> rho(m);
  center_ = 0.5 * (spec.grid.f0 + spec.grid.last());
  for (std::size_t i = 0; i < m; ++i) {
    const double r = (spec.absorption(i) - background_) / (2.0 * kPi);
    rho[i] = r;
    const double x = spec.grid.frequency(i) - center_;
    moments_[0] += r * df;
    moments_[1] += r * df * x;
    moments_[2] += r * df * (x * x + df * df / 6.0);
  }

  // Output grid extends the absorption grid by its own length on both sides.
  const std::size_t pad = m;
  const std::size_t q0 = m - 1 + pad;
  std::vector<cplx> kernel(2 * q0 + 1);
  for (std::size_t q = 0; q < kernel.size(); ++q) {
    const double offset = (static_cast<double>(q0) - static_cast<double>(q)) * df;
    kernel[q] = hat_kernel(offset, df, gamma_h_);
  }
  const auto conv = detail::linear_convolve(rho, kernel);
  out_grid_ = FrequencyGrid{spec.grid.f0 - static_cast<double>(pad) * df, df, m + 2 * pad};
  half_sigma_.assign(conv.begin() + static_cast<std::ptrdiff_t>(q0 - pad),
                     conv.begin() + static_cast<std::ptrdiff_t>(q0 - pad + out_grid_.n));
}

cplx EnsembleResponse::self_energy(double detuning) const {
  const double pos = (detuning - out_grid_.f0) / out_grid_.df;
  if (pos >= 0.0 && pos <= static_cast<double>(out_grid_.n - 1)) {
    const auto i = std::min(static_cast<std::size_t>(pos), out_grid_.n - 2);
    const double frac = pos - static_cast<double>(i);
    const cplx h = half_sigma_[i] * (1.0 - frac) + half_sigma_[i + 1] * frac;
    return background_ + 2.0 * h;
  }
  // Far from the grid: multipole expansion about the grid center.
  const cplx d(0.5 * gamma_h_, center_ - detuning);
  const cplx h = moments_[0] / d - cplx(0.0, 1.0) * moments_[1] / (d * d) - moments_[2] / (d * d * d);
  return background_ + 2.0 * h;
}

ComplexSpectrum transfer_function(const CavityParams& params, const EnsembleResponse& response,
                                  const FrequencyGrid& grid) {
  validate(params);
  validate(grid);
  ComplexSpectrum out{params.f_res, grid, std::vector<cplx>(grid.n)};
  const double kt = params.kappa_total();
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double d = grid.frequency(i);
    out.values[i] = 1.0 - params.kappa_ext / (cplx(0.5 * kt, -d) + 0.5 * response.self_energy(d));
  }
  return out;
}

ComplexSpectrum transfer_function(const CavityParams& params, const afc::AbsorptionSpectrum& spec,
                                  const FrequencyGrid& grid, double gamma_h) {
  return transfer_function(params, EnsembleResponse(spec, gamma_h), grid);
}

// ---------------------------------------------------------------------------
// Frequency-domain propagation

FrequencyGrid fft_grid(const Waveform& input) {
  validate(input);
  const std::size_t n = input.size();
  const double df = 1.0 / (static_cast<double>(n) * input.dt);
  return FrequencyGrid{-static_cast<double>(n / 2) * df, df, n};
}

namespace {

double signed_bin_frequency(std::size_t k, std::size_t n, double df) {
  const auto kk = static_cast<double>(k);
  return 2 * k < n ? kk * df : (kk - static_cast<double>(n)) * df;
}

cplx sample_spectrum(const ComplexSpectrum& s, double f) {
  const auto& g = s.grid;
  if (g.n == 1) return s.values[0];
  const double pos = (f - g.f0) / g.df;
  if (pos <= 0.0) return s.values.front();
  if (pos >= static_cast<double>(g.n - 1)) return s.values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (frac == 0.0) return s.values[i];
  return s.values[i] * (1.0 - frac) + s.values[i + 1] * frac;
}

}  // namespace

Waveform propagate(const Waveform& input, const ComplexSpectrum& s21) {
  validate(input);
  validate(s21.grid);
  if (s21.values.size() != s21.grid.n) fail(ErrorCode::GridMismatch, "s21 values do not match its grid");
  const std::size_t n = input.size();
  std::vector<cplx> spec = input.samples;
  detail::dft(spec, +1);
  const double df = 1.0 / (static_cast<double>(n) * input.dt);

  double total = 0.0, outside = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::norm(spec[k]);
    total += p;
    if (!s21.grid.contains(signed_bin_frequency(k, n, df))) outside += p;
  }
  if (total > 0.0 && outside > 1e-3 * total) {
    std::ostringstream os;
    os << "fraction " << outside / total << " of the input energy lies outside the s21 grid";
    fail(ErrorCode::AliasingGuard, os.str());
  }

  for (std::size_t k = 0; k < n; ++k) spec[k] *= sample_spectrum(s21, signed_bin_frequency(k, n, df));
  detail::dft(spec, -1);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : spec) v *= inv;
  return Waveform{input.t0, input.dt, std::move(spec)};
}

Waveform store_fft(const CavityParams& params, const EnsembleResponse& response, const Waveform& input) {
  return propagate(input, transfer_function(params, response, fft_grid(input)));
}

// ---------------------------------------------------------------------------
// Discrete ensemble

cplx EnsembleDiscretization::self_energy(double d, double gamma) const {
  cplx h = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    h += static_cast<double>(sign[k]) * g[k] * g[k] / cplx(0.5 * gamma, detuning[k] - d);
  return background + 2.0 * h;
}

EnsembleDiscretization discretize_ensemble(const afc::AbsorptionSpectrum& spec, double gamma_h,
                                           const DiscretizationOptions& opts) {
  afc::validate(spec);
  if (!(gamma_h > 0.0)) fail(ErrorCode::NonPositiveLinewidth, "gamma_h must be > 0");
  if (!(opts.tooth_period > 0.0)) fail(ErrorCode::DeltaNonPositive, "tooth_period must be > 0");
  if (opts.bins_per_tooth_period < 1) fail(ErrorCode::DomainError, "bins_per_tooth_period must be >= 1");

  EnsembleDiscretization d;
  d.bins_per_tooth_period = opts.bins_per_tooth_period;
  d.bin_width = opts.tooth_period / opts.bins_per_tooth_period;
  d.gamma_h = gamma_h;
  d.background = edge_background(spec);

  const std::size_t m = spec.size();
  const double df = spec.grid.df;
  double scale = d.background;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, spec.absorption(i));
  std::size_t first = m, last = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(spec.absorption(i) - d.background) > opts.trim * scale) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == m) return d;

  // Piecewise-constant density integrated exactly over each bin; each bin sits
  // at the centroid of its weight so the first moment is reproduced too.
  const double lo = spec.grid.frequency(first) - 0.5 * df;
  const double hi = spec.grid.frequency(last) + 0.5 * df;
  const auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / d.bin_width - 1e-9));
  std::vector<double> weight(nbins, 0.0);  // integral of (absorption - background) df
  std::vector<double> moment(nbins, 0.0);  // integral of (absorption - background) (f - bin center) df
  std::vector<double> mass(nbins, 0.0);    // integral of |absorption - background| df
  for (std::size_t i = first; i <= last; ++i) {
    const double dev = spec.absorption(i) - d.background;
    const double a = spec.grid.frequency(i) - 0.5 * df;
    const double b = a + df;
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor((a - lo) / d.bin_width)));
    for (; k < nbins; ++k) {
      const double blo = lo + static_cast<double>(k) * d.bin_width;
      const double bhi = blo + d.bin_width;
      if (blo >= b) break;
      const double x0 = std::max(a, blo), x1 = std::min(b, bhi);
      if (x1 <= x0) continue;
      const double mid = blo + 0.5 * d.bin_width;
      weight[k] += dev * (x1 - x0);
      moment[k] += dev * 0.5 * ((x1 - mid) * (x1 - mid) - (x0 - mid) * (x0 - mid));
      mass[k] += std::abs(dev) * (x1 - x0);
    }
  }
  for (std::size_t k = 0; k < nbins; ++k) {
    if (weight[k] == 0.0) continue;
    double shift = 0.0;
    // Mixed-sign bins have no meaningful centroid; keep those at the center.
    if (std::abs(weight[k]) > 0.5 * mass[k])
      shift = std::clamp(moment[k] / weight[k], -0.5 * d.bin_width, 0.5 * d.bin_width);
    d.detuning.push_back(lo + (static_cast<double>(k) + 0.5) * d.bin_width + shift);
    d.g.push_back(std::sqrt(std::abs(weight[k]) / (2.0 * kPi)));
    d.sign.push_back(weight[k] > 0.0 ? 1 : -1);
  }

  // Compare with the continuum at a broadening that still resolves the teeth
  // (Delta / 8) but is independent of the bin count.
  const double gamma_eval = std::max(gamma_h, opts.tooth_period / 8.0);
  const EnsembleResponse continuum(spec, gamma_eval, d.background);
  // Evaluated on grid nodes, where the continuum needs no interpolation.
  const std::size_t stride = std::max<std::size_t>(1, (last - first + 1) / 8192);
  double max_err = 0.0, max_ref = 0.0;
  for (std::size_t j = first; j <= last; j += stride) {
    const double f = spec.grid.frequency(j);
    const cplx ref = continuum.self_energy(f);
    max_ref = std::max(max_ref, std::abs(ref));
    max_err = std::max(max_err, std::abs(d.self_energy(f, gamma_eval) - ref));
  }
  d.achieved_error = max_ref > 0.0 ? max_err / max_ref : 0.0;
  if (d.achieved_error > opts.tolerance) {
    std::ostringstream os;
    os << "discrete ensemble reproduces the continuum to " << d.achieved_error << " (tolerance "
       << opts.tolerance << "); increase bins_per_tooth_period";
    fail(ErrorCode::CalibrationFailed, os.str());
  }
  return d;
}

// ---------------------------------------------------------------------------
// Time domain

double max_time_step(const EnsembleDiscretization& disc, const CavityParams& params,
                     const DetuningSchedule* schedule, double frame) {
  double rate = params.kappa_total() + disc.background;
  for (double dk : disc.detuning) rate = std::max(rate, std::abs(dk - frame));
  if (schedule) {
    for (const auto& s : schedule->segments) rate = std::max(rate, std::abs(s.detuning - frame));
  } else {
    rate = std::max(rate, std::abs(frame));
  }
  return 1.0 / (20.0 * rate);
}

namespace {

// Catmull-Rom interpolation of the sampled input; zero outside the record.
class InputInterpolator {
 public:
  InputInterpolator(const Waveform& w, double frame) : w_(w), frame_(frame) {}

  cplx at(double t) const {
    const double pos = (t - w_.t0) / w_.dt;
    const auto n = static_cast<long>(w_.size());
    const long i = static_cast<long>(std::floor(pos));
    const double u = pos - static_cast<double>(i);
    auto s = [&](long k) -> cplx {
      if (k < 0 || k >= n) return 0.0;
      return w_.samples[static_cast<std::size_t>(k)] * rotation(w_.time(static_cast<std::size_t>(k)));
    };
    if (u == 0.0) return s(i);
    const cplx p0 = s(i - 1), p1 = s(i), p2 = s(i + 1), p3 = s(i + 2);
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
  }

  // Removes the frame carrier exp(-i 2 pi frame t).
  cplx rotation(double t) const {
    if (frame_ == 0.0) return 1.0;
    return std::polar(1.0, 2.0 * kPi * frame_ * t);
  }

 private:
  const Waveform& w_;
  double frame_;
};

}  // namespace

TimeDomainResult simulate_time_domain(const EnsembleDiscretization& disc, const CavityParams& params,
                                      const Waveform& input, const DetuningSchedule* schedule,
                                      const TimeDomainOptions& opts) {
  validate(params);
  validate(input);
  if (opts.substeps < 0) fail(ErrorCode::DomainError, "substeps must be >= 0");
  const std::size_t nb = disc.size();
  if (disc.detuning.size() != nb || disc.sign.size() != nb)
    fail(ErrorCode::GridMismatch, "discretization arrays differ in length");

  const double h_max = max_time_step(disc, params, schedule, opts.frame);
  int sub = opts.substeps;
  if (sub == 0) sub = static_cast<int>(std::ceil(input.dt / h_max * (1.0 - 1e-12)));
  sub = std::max(sub, 1);
  const double h = input.dt / sub;
  if (h > h_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "RK4 step " << h << " s exceeds the limit " << h_max << " s";
    fail(ErrorCode::StepSizeViolation, os.str());
  }

  const double two_pi = 2.0 * kPi;
  const double kappa = params.kappa_total() + disc.background;
  const double ext = std::sqrt(two_pi * params.kappa_ext);
  std::vector<cplx> rot(nb);    // -(i 2 pi Delta_k + pi gamma_h)
  std::vector<double> cpl(nb);  // 2 pi g_k
  std::vector<double> back(nb);  // 2 pi s_k g_k
  for (std::size_t k = 0; k < nb; ++k) {
    rot[k] = cplx(-kPi * disc.gamma_h, -two_pi * (disc.detuning[k] - opts.frame));
    cpl[k] = two_pi * disc.g[k];
    back[k] = two_pi * static_cast<double>(disc.sign[k]) * disc.g[k];
  }

  const InputInterpolator drive(input, opts.frame);
  cplx a = 0.0;
  std::vector<cplx> b(nb, 0.0), kb1(nb), kb2(nb), kb3(nb), kb4(nb), tmp(nb);

  auto deriv = [&](double t, cplx av, const std::vector<cplx>& bv, std::vector<cplx>& db) -> cplx {
    const double dc = (schedule ? schedule->at(t) : 0.0) - opts.frame;
    cplx coupling = 0.0;
    for (std::size_t k = 0; k < nb; ++k) coupling += cpl[k] * bv[k];
    const cplx ia(-av.imag(), av.real());
    for (std::size_t k = 0; k < nb; ++k) db[k] = rot[k] * bv[k] - back[k] * ia;
    return cplx(-kPi * kappa, -two_pi * dc) * av - cplx(0.0, 1.0) * coupling + ext * drive.at(t);
  };

  TimeDomainResult res;
  res.substeps = sub;
  res.step = h;
  res.cavity = Waveform::zeros(input.t0, input.dt, input.size());
  res.output = Waveform::zeros(input.t0, input.dt, input.size());

  auto record = [&](std::size_t i) {
    const double t = input.time(i);
    const cplx back_rot = std::conj(drive.rotation(t));
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      std::ostringstream os;
      os << "non-finite cavity amplitude at t = " << t << " s (sample " << i << ")";
      fail(ErrorCode::NumericBlowup, os.str());
    }
    res.cavity.samples[i] = a * back_rot;
    res.output.samples[i] = input.samples[i] - ext * a * back_rot;
  };

  record(0);
  for (std::size_t i = 0; i + 1 < input.size(); ++i) {
    for (int s = 0; s < sub; ++s) {
      const double t = input.time(i) + s * h;
      const cplx ka1 = deriv(t, a, b, kb1);
      for (std::size_t k = 0; k < nb; ++k) tmp[k] = b[k] + 0.5 * h * kb1[k];
      const cplx ka2 = deriv(t + 0.5 * h, a + 0.5 * h * ka1, tmp, kb2);
      for (std::size_t k = 0; k < nb; ++k) tmp[k] = b[k] + 0.5 * h * kb2[k];
      const cplx ka3 = deriv(t + 0.5 * h, a + 0.5 * h * ka2, tmp, kb3);
      for (std::size_t k = 0; k < nb; ++k) tmp[k] = b[k] + h * kb3[k];
      const cplx ka4 = deriv(t + h, a + h * ka3, tmp, kb4);
      a += h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
      for (std::size_t k = 0; k < nb; ++k) b[k] += h / 6.0 * (kb1[k] + 2.0 * kb2[k] + 2.0 * kb3[k] + kb4[k]);
    }
    record(i + 1);
  }
  return res;
}

double efficiency_from_trace(const Waveform& output, const Waveform& reference, double window_center,
                             double window) {
  validate(output);
  validate(reference);
  if (!(window > 0.0)) fail(ErrorCode::EmptyWindow, "window must be > 0");
  const double lo = window_center - 0.5 * window;
  const double hi = window_center + 0.5 * window;
  if (lo < output.t0 - 0.5 * output.dt || hi > output.end_time() + 0.5 * output.dt)
    fail(ErrorCode::DomainError, "window extends beyond the trace");
  double e = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double t = output.time(i);
    if (t >= lo && t <= hi) {
      e += std::norm(output.samples[i]);
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::EmptyWindow, "no samples inside the window");
  const double ref = reference.energy();
  if (!(ref > 0.0)) fail(ErrorCode::EmptyWindow, "reference carries no energy");
  return e * output.dt / ref;
}

double peak_time(const Waveform& trace, double after) {
  double best = -1.0, t_best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double t = trace.time(i);
    if (t < after) continue;
    const double p = std::norm(trace.samples[i]);
    if (p > best) {
      best = p;
      t_best = t;
    }
  }
  if (best < 0.0) fail(ErrorCode::EmptyWindow, "no samples after the requested time");
  return t_best;
}

MultiplexResult multiplex(const CavityParams& params, const EnsembleResponse& response,
                          const MultiplexSpec& spec) {
  if (spec.modes < 1) fail(ErrorCode::DomainError, "modes must be >= 1");
  if (!(spec.slot > 0.0) || !(spec.pulse_fwhm > 0.0) || !(spec.dt > 0.0) || !(spec.storage_time > 0.0))
    fail(ErrorCode::DomainError, "slot, pulse_fwhm, dt and storage_time must be > 0");
  if (spec.modes * spec.slot > spec.storage_time * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << spec.modes << " modes of " << spec.slot << " s do not fit in the storage time "
       << spec.storage_time << " s";
    fail(ErrorCode::ModesOverrun, os.str());
  }

  const double duration = spec.duration > 0.0 ? spec.duration : 16.0 * spec.storage_time;
  const std::size_t n = detail::good_fft_size(static_cast<std::size_t>(std::ceil(duration / spec.dt)));
  const double t0 = spec.first_center - std::max(spec.slot, 4.0 * spec.pulse_fwhm);

  MultiplexResult r;
  r.input = Waveform::zeros(t0, spec.dt, n);
  std::vector<double> mode_energy(static_cast<std::size_t>(spec.modes));
  for (int m = 0; m < spec.modes; ++m) {
    const double c = spec.first_center + m * spec.slot;
    const Waveform p = gaussian_pulse(t0, spec.dt, n, c, spec.pulse_fwhm, 1.0);
    for (std::size_t i = 0; i < n; ++i) r.input.samples[i] += p.samples[i];
    mode_energy[static_cast<std::size_t>(m)] = p.energy();
  }
  r.output = store_fft(params, response, r.input);

  double echo_total = 0.0, in_total = 0.0;
  for (int m = 0; m < spec.modes; ++m) {
    const double c = spec.first_center + m * spec.slot + spec.storage_time;
    double e = 0.0, best = -1.0, t_best = c;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = r.output.time(i);
      if (t < c - 0.5 * spec.slot || t >= c + 0.5 * spec.slot) continue;
      const double p = std::norm(r.output.samples[i]);
      e += p;
      if (p > best) {
        best = p;
        t_best = t;
      }
    }
    e *= spec.dt;
    r.mode_efficiency.push_back(e / mode_energy[static_cast<std::size_t>(m)]);
    r.echo_times.push_back(t_best);
    echo_total += e;
    in_total += mode_energy[static_cast<std::size_t>(m)];
  }
  r.collective = echo_total / in_total;
  return r;
}

}  // namespace afcmem::echo
