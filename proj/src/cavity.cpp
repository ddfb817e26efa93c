#include "afcmem/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "afcmem/fit.hpp"
#include "parallel.hpp"

namespace afcmem::cavity {

cplx field_transmission(const CavityParams& params, double kappa_ions_eff, double detuning) {
  const double kappa = params.kappa_ext + params.kappa_loss + kappa_ions_eff;
  return 1.0 - params.kappa_ext / cplx(0.5 * kappa, -detuning);
}

ComplexSpectrum transmission(const CavityParams& params, const FrequencyGrid& detuning,
                             double kappa_ions_eff) {
  validate(params);
  validate(detuning);
  if (!(kappa_ions_eff >= 0.0)) fail(ErrorCode::NegativeRate, "kappa_ions_eff must be >= 0");
  ComplexSpectrum out{params.f_res, detuning, std::vector<cplx>(detuning.n)};
  for (std::size_t i = 0; i < detuning.n; ++i)
    out.values[i] = field_transmission(params, kappa_ions_eff, detuning.frequency(i));
  return out;
}

PowerSpectrum power_transmission(const CavityParams& params, const FrequencyGrid& detuning,
                                 double kappa_ions_eff) {
  const ComplexSpectrum t = transmission(params, detuning, kappa_ions_eff);
  PowerSpectrum out{t.carrier_hz, t.grid, std::vector<double>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) out.values[i] = std::norm(t.values[i]);
  return out;
}

double FanoFitResult::extinction_ratio_db() const { return 10.0 * std::log10(extinction_ratio); }

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// Robust noise estimate from first differences of the outer 20% of samples.
double edge_noise(const std::vector<double>& y) {
  const std::size_t edge = std::max<std::size_t>(3, y.size() / 10);
  std::vector<double> diffs;
  for (std::size_t i = 1; i < edge; ++i) diffs.push_back(y[i] - y[i - 1]);
  for (std::size_t i = y.size() - edge + 1; i < y.size(); ++i) diffs.push_back(y[i] - y[i - 1]);
  const double med = median(diffs);
  for (auto& d : diffs) d = std::abs(d - med);
  return 1.4826 * median(diffs) / std::sqrt(2.0);
}

}  // namespace

FanoFitResult fano_extract(const PowerSpectrum& spectrum) {
  validate(spectrum.grid);
  const auto& y = spectrum.values;
  const std::size_t n = y.size();
  if (n < 20 || spectrum.grid.n != n) fail(ErrorCode::GridMismatch, "spectrum needs >= 20 samples on its grid");

  const std::size_t edge = std::max<std::size_t>(3, n / 10);
  std::vector<double> edges(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(edge));
  edges.insert(edges.end(), y.end() - static_cast<std::ptrdiff_t>(edge), y.end());
  const double baseline = median(edges);
  const auto min_it = std::min_element(y.begin(), y.end());
  const std::size_t imin = static_cast<std::size_t>(min_it - y.begin());
  const double depth_abs = baseline - *min_it;
  const double noise = edge_noise(y);
  if (!(baseline > 0.0) || depth_abs <= 3.0 * noise || depth_abs <= 1e-9 * std::abs(baseline)) {
    std::ostringstream os;
    os << "dip depth " << depth_abs << " not resolved above noise " << noise;
    fail(ErrorCode::NoResonance, os.str());
  }

  // Half-depth crossings give the width guess.
  const double half = baseline - 0.5 * depth_abs;
  std::size_t lo = imin, hi = imin;
  while (lo > 0 && y[lo] < half) --lo;
  while (hi + 1 < n && y[hi] < half) ++hi;
  const double df = spectrum.grid.df;
  const double width = std::max(static_cast<double>(hi - lo) * df, 2.0 * df);
  if (width / df < 20.0) {
    std::ostringstream os;
    os << "dip is under-resolved: " << width / df << " samples across the linewidth (need 20)";
    fail(ErrorCode::GridMismatch, os.str());
  }
  const double x_ref = spectrum.frequency(imin);

  fit::FitProblem problem;
  problem.model = fit::fano_dip();
  problem.x.resize(n);
  problem.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    problem.x[i] = (spectrum.frequency(i) - x_ref) / width;
    problem.y[i] = y[i] / baseline;
  }
  problem.initial_guess = {0.0, 1.0, std::min(depth_abs / baseline, 1.0), 0.0, 1.0, 0.0};
  problem.bounds = fit::Bounds{{-1e3, 1e-6, 0.0, -1e6, 0.0, -1e6}, {1e3, 1e6, 1.0, 1e6, 1e6, 1e6}};

  fit::FitResult r;
  try {
    r = fit::fit(problem);
  } catch (const Error& e) {
    fail(ErrorCode::FitDiverged, std::string("fano fit failed: ") + e.what());
  }
  if (!r.converged) fail(ErrorCode::FitDiverged, "fano fit did not converge");

  FanoFitResult out;
  const auto& p = r.params;
  out.f_center = spectrum.carrier_hz + x_ref + p[0] * width;
  out.fwhm = std::abs(p[1]) * width;
  out.depth = p[2];
  out.fano_q = p[3] == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / p[3];
  out.q_loaded = out.f_center / out.fwhm;
  // The Fano factor peaks at exactly 1, so the deepest point is 1 - depth.
  out.extinction_ratio = out.depth >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - out.depth);

  Eigen::VectorXd scale(6);
  scale << width, width, 1.0, 1.0, baseline, baseline / width;
  out.covariance = scale.asDiagonal() * r.covariance * scale.asDiagonal();
  return out;
}

const SaturationModel& validate(const SaturationModel& m) {
  if (!(m.kappa_ions0 >= 0.0)) fail(ErrorCode::NegativeRate, "kappa_ions0 must be >= 0");
  if (!(m.p_sat > 0.0)) fail(ErrorCode::DomainError, "p_sat must be > 0");
  return m;
}

double kappa_ions_at_power(const SaturationModel& model, double p_on_chip) {
  validate(model);
  if (!(p_on_chip >= 0.0)) fail(ErrorCode::DomainError, "power must be >= 0");
  if (std::isinf(p_on_chip)) return 0.0;
  return model.kappa_ions0 / (1.0 + p_on_chip / model.p_sat);
}

double critical_coupling_power(const CavityParams& params, const SaturationModel& model) {
  const double target = params.kappa_ext - params.kappa_loss;
  if (!(target > 0.0) || model.kappa_ions0 < target) return -1.0;
  return model.p_sat * (model.kappa_ions0 / target - 1.0);
}

std::vector<SweepPoint> power_sweep(const CavityParams& params, const SaturationModel& model,
                                    std::span<const double> powers, const SweepOptions& opts) {
  validate(params);
  validate(model);
  for (std::size_t i = 1; i < powers.size(); ++i)
    if (!(powers[i] >= powers[i - 1])) fail(ErrorCode::DomainError, "powers must be sorted ascending");

  std::vector<SweepPoint> out(powers.size());
  detail::parallel_for(powers.size(), opts.threads, [&](std::size_t i) {
    const double k_ions = kappa_ions_at_power(model, powers[i]);
    const double linewidth = params.kappa_total() + k_ions;
    const auto grid = FrequencyGrid::symmetric(0.0, opts.half_span_linewidths * linewidth,
                                               linewidth / opts.samples_per_linewidth);
    try {
      const auto fr = fano_extract(power_transmission(params, grid, k_ions));
      out[i] = SweepPoint{powers[i], k_ions, fr.q_loaded, fr.extinction_ratio};
    } catch (const Error& e) {
      std::ostringstream os;
      os << "power index " << i << " (P = " << powers[i] << " W): " << e.what();
      throw Error(e.code(), os.str());
    }
  });
  return out;
}

}  // namespace afcmem::cavity
