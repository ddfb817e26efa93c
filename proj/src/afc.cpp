#include "afcmem/afc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace afcmem::afc {

std::vector<double> AbsorptionSpectrum::absorption() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = absorption(i);
  return out;
}

double AbsorptionSpectrum::removed_absorption() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) sum += baseline[i] * shelved[i];
  return sum * grid.df;
}

const AbsorptionSpectrum& validate(const AbsorptionSpectrum& s) {
  validate(s.grid);
  if (s.baseline.size() != s.grid.n || s.active.size() != s.grid.n || s.shelved.size() != s.grid.n)
    fail(ErrorCode::GridMismatch, "absorption spectrum arrays do not match its grid");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.baseline[i] >= 0.0)) fail(ErrorCode::NegativeRate, "baseline absorption must be >= 0");
    if (!(s.active[i] >= 0.0) || !(s.shelved[i] >= 0.0))
      fail(ErrorCode::DomainError, "populations must be >= 0");
  }
  return s;
}

double BurnSequence::default_p_burn(double target_depth, int cycles) {
  return 1.0 - std::pow(1.0 - target_depth, 1.0 / cycles);
}

const BurnSequence& validate(const BurnSequence& s) {
  if (!(s.fm_amplitude > 0.0)) fail(ErrorCode::DomainError, "fm_amplitude must be > 0");
  if (s.cycles < 0) fail(ErrorCode::DomainError, "cycles must be >= 0");
  if (!(s.p_burn >= 0.0 && s.p_burn <= 1.0)) fail(ErrorCode::DomainError, "p_burn must lie in [0, 1]");
  return s;
}

const SideholeSpec& validate(const SideholeSpec& s) {
  if (!(s.slope_nb > 0.0) || !(s.slope_li > 0.0)) fail(ErrorCode::DomainError, "side-hole slopes must be > 0");
  if (!(s.relative_depth >= 0.0 && s.relative_depth <= 1.0))
    fail(ErrorCode::DomainError, "side-hole relative_depth must lie in [0, 1]");
  return s;
}

AbsorptionSpectrum inhomogeneous_profile(const EnsembleParams& params, double kappa_ions,
                                         const FrequencyGrid& grid, double line_center) {
  validate(params);
  validate(grid);
  if (!(kappa_ions >= 0.0)) fail(ErrorCode::NegativeRate, "kappa_ions must be >= 0");
  AbsorptionSpectrum s{grid, std::vector<double>(grid.n), std::vector<double>(grid.n, 1.0),
                       std::vector<double>(grid.n, 0.0)};
  const double c = 4.0 * std::log(2.0) / (params.inhom_fwhm * params.inhom_fwhm);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.frequency(i) - line_center;
    s.baseline[i] = kappa_ions * std::exp(-c * x * x);
  }
  return s;
}

double hole_profile(double detuning, double fm_amplitude, double gamma_h) {
  const double hw = 0.5 * gamma_h;
  return (std::atan((detuning + fm_amplitude) / hw) - std::atan((detuning - fm_amplitude) / hw)) / kPi;
}

namespace {

// Moves population out of the active pool: active *= factor.
void transfer(AbsorptionSpectrum& s, std::size_t i, double factor) {
  const double before = s.active[i];
  const double after = before * factor;
  s.active[i] = after;
  s.shelved[i] += before - after;
}

}  // namespace

AbsorptionSpectrum burn_hole(const AbsorptionSpectrum& spec, double pump_freq, const BurnSequence& seq,
                             double gamma_h, const SideholeBurn* sideholes) {
  validate(spec);
  validate(seq);
  if (!spec.grid.contains(pump_freq)) fail(ErrorCode::DomainError, "pump frequency outside the grid");
  if (!(gamma_h > 0.0)) fail(ErrorCode::NonPositiveLinewidth, "gamma_h must be > 0");

  std::vector<double> offsets;
  double side_depth = 0.0;
  if (sideholes) {
    validate(sideholes->spec);
    const auto [nb, li] = sidehole_offsets(sideholes->spec, sideholes->b_field);
    offsets = {nb, -nb, li, -li};
    side_depth = sideholes->spec.relative_depth;
  }

  AbsorptionSpectrum out = spec;
  if (seq.cycles == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out.grid.frequency(i) - pump_freq;
    double keep = std::pow(1.0 - seq.p_burn * hole_profile(x, seq.fm_amplitude, gamma_h), seq.cycles);
    for (double o : offsets)
      keep *= std::pow(1.0 - seq.p_burn * side_depth * hole_profile(x - o, seq.fm_amplitude, gamma_h),
                       seq.cycles);
    transfer(out, i, keep);
  }
  return out;
}

namespace {

// Fraction of the unburned absorption kept by the main comb pattern.
class CombPattern {
 public:
  explicit CombPattern(const CombSpec& c) : comb_(c) {
    first_ = c.center_offset - 0.5 * (c.n_teeth - 1) * c.delta;
    lo_ = first_ - 0.5 * c.delta;
    hi_ = first_ + (c.n_teeth - 1) * c.delta + 0.5 * c.delta;
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  // Tooth profile at f: Gaussian teeth are area-normalized (peak 1 / 1.0645),
  // square teeth are unit boxes of width delta / F.
  double teeth(double f) const {
    const double w = comb_.tooth_fwhm();
    const double pos = (f - first_) / comb_.delta;
    const long nearest = std::lround(pos);
    double sum = 0.0;
    const long reach = comb_.tooth_shape == ToothShape::Gaussian ? 1 + static_cast<long>(std::ceil(3.0 / comb_.finesse)) : 1;
    for (long j = nearest - reach; j <= nearest + reach; ++j) {
      if (j < 0 || j >= comb_.n_teeth) continue;
      const double x = f - (first_ + static_cast<double>(j) * comb_.delta);
      if (comb_.tooth_shape == ToothShape::Gaussian) {
        sum += std::exp(-4.0 * std::log(2.0) * x * x / (w * w)) / std::sqrt(kPi / (4.0 * std::log(2.0)));
      } else if (std::abs(x) <= 0.5 * w) {
        sum += 1.0;
      }
    }
    return sum;
  }

  double keep(double f) const {
    if (f < lo_ || f > hi_) return 1.0;
    return std::min(1.0, (1.0 - comb_.eta_spectral) + comb_.eta_spectral * teeth(f));
  }

  double hole_depth(double f) const { return 1.0 - keep(f); }

 private:
  CombSpec comb_;
  double first_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

}  // namespace

AbsorptionSpectrum build_comb(const AbsorptionSpectrum& spec0, const CombSpec& comb,
                              const SideholeSpec& sideholes, double b_field) {
  validate(spec0);
  validate(comb);
  validate(sideholes);
  const CombPattern pattern(comb);
  if (pattern.lo() < spec0.grid.f0 || pattern.hi() > spec0.grid.last())
    fail(ErrorCode::DomainError, "comb bandwidth does not fit in the grid");

  const auto [nb, li] = sidehole_offsets(sideholes, b_field);
  const double offsets[4] = {nb, -nb, li, -li};
  const double d = sideholes.relative_depth;

  AbsorptionSpectrum out = spec0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double f = out.grid.frequency(i);
    double keep = pattern.keep(f);
    if (d > 0.0)
      for (double o : offsets) keep *= 1.0 - d * pattern.hole_depth(f - o);
    transfer(out, i, keep);
  }
  return out;
}

AbsorptionSpectrum decay(const AbsorptionSpectrum& spec, double wait, double t_afc) {
  validate(spec);
  if (!(wait >= 0.0)) fail(ErrorCode::DomainError, "wait must be >= 0");
  if (!(t_afc > 0.0)) fail(ErrorCode::NonPositiveLifetime, "t_afc must be > 0");
  AbsorptionSpectrum out = spec;
  const double factor = std::exp(-wait / t_afc);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double before = out.shelved[i];
    const double after = before * factor;
    out.shelved[i] = after;
    out.active[i] += before - after;
  }
  return out;
}

std::pair<double, double> sidehole_offsets(const SideholeSpec& sideholes, double b_field) {
  if (!(b_field >= 0.0)) fail(ErrorCode::DomainError, "b_field must be >= 0");
  return {sideholes.intercept_nb + sideholes.slope_nb * b_field,
          sideholes.intercept_li + sideholes.slope_li * b_field};
}

namespace {

double trough_distance(double offset, double delta) {
  const double r = offset - delta * std::floor(offset / delta);
  return std::min(r, delta - r);
}

}  // namespace

double field_cost(double delta, const SideholeSpec& sideholes, double b_field) {
  const double o1 = sideholes.intercept_nb + sideholes.slope_nb * b_field;
  const double o2 = sideholes.intercept_li + sideholes.slope_li * b_field;
  const double d1 = trough_distance(o1, delta);
  const double d2 = trough_distance(o2, delta);
  return d1 * d1 + d2 * d2;
}

double optimize_field(double delta, const SideholeSpec& sideholes, double b_lo, double b_hi) {
  if (!(delta > 0.0)) fail(ErrorCode::DomainError, "delta must be > 0");
  validate(sideholes);
  if (!(b_hi >= b_lo) || !(b_lo >= 0.0)) fail(ErrorCode::DomainError, "field range must be non-empty and >= 0");
  if (b_hi == b_lo) return b_lo;

  const double max_slope = std::max(sideholes.slope_nb, sideholes.slope_li);
  const auto steps = static_cast<std::size_t>(
      std::max(1000.0, std::ceil((b_hi - b_lo) * max_slope / (delta / 50.0))));
  const double h = (b_hi - b_lo) / static_cast<double>(steps);
  std::vector<double> cost(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) cost[i] = field_cost(delta, sideholes, b_lo + h * static_cast<double>(i));

  const double s1 = sideholes.slope_nb, s2 = sideholes.slope_li;
  const double c1 = sideholes.intercept_nb, c2 = sideholes.intercept_li;
  // The cost is periodic in B whenever the slopes are commensurate, so equal
  // minima recur; ties within rounding go to the lowest field.
  const double tie = 1e-12 * delta * delta;
  double best_b = b_lo;
  double best_cost = cost[0];
  auto consider = [&](double b) {
    const double c = field_cost(delta, sideholes, b);
    if (c < best_cost - tie || (c <= best_cost + tie && b < best_b)) {
      best_cost = c;
      best_b = b;
    }
  };

  for (std::size_t i = 0; i <= steps; ++i) {
    const bool left_ok = i == 0 || cost[i] <= cost[i - 1];
    const bool right_ok = i == steps || cost[i] <= cost[i + 1];
    if (!(left_ok && right_ok)) continue;
    double b = b_lo + h * static_cast<double>(i);
    consider(b);
    // Within one quadratic piece the minimizer is a weighted least-squares solve.
    for (int pass = 0; pass < 5; ++pass) {
      const double m1 = std::round((c1 + s1 * b) / delta);
      const double m2 = std::round((c2 + s2 * b) / delta);
      const double next = std::clamp((s1 * (m1 * delta - c1) + s2 * (m2 * delta - c2)) / (s1 * s1 + s2 * s2),
                                     b_lo, b_hi);
      consider(next);
      if (next == b) break;
      b = next;
    }
  }
  return best_b;
}

}  // namespace afcmem::afc
