#include "afcmem/stats.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace afcmem::stats {

const CoincidenceRecord& validate(const CoincidenceRecord& rec) {
  if (rec.delay.size() != rec.counts.size()) fail(ErrorCode::GridMismatch, "delay and counts differ in length");
  if (!(rec.coincidence_window > 0.0)) fail(ErrorCode::NonPositiveInterval, "coincidence_window must be > 0");
  if (!(rec.acquisition > 0.0)) fail(ErrorCode::NonPositiveInterval, "acquisition must be > 0");
  for (auto c : rec.counts)
    if (c < 0) fail(ErrorCode::DomainError, "counts must be >= 0");
  if (rec.singles_s < 0 || rec.singles_i < 0) fail(ErrorCode::DomainError, "singles must be >= 0");
  return rec;
}

std::int64_t window_counts(const CoincidenceRecord& rec, double center) {
  std::int64_t n = 0;
  const double half = 0.5 * rec.coincidence_window;
  for (std::size_t i = 0; i < rec.delay.size(); ++i)
    if (std::abs(rec.delay[i] - center) <= half * (1.0 + 1e-12)) n += rec.counts[i];
  return n;
}

namespace {

struct Windows {
  std::int64_t central = 0;
  std::int64_t accidental_total = 0;
  int accidental_windows = 0;
  double accidental_mean() const { return static_cast<double>(accidental_total) / accidental_windows; }
};

Windows collect(const CoincidenceRecord& rec, const WindowGeometry& g) {
  validate(rec);
  if (!(g.side_spacing > 0.0) || g.side_windows < 1)
    fail(ErrorCode::DomainError, "side windows need spacing > 0 and count >= 1");
  Windows w;
  w.central = window_counts(rec, g.center);
  double lo = 1e300, hi = -1e300;
  for (double d : rec.delay) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  for (int k = 1; k <= g.side_windows; ++k) {
    for (int s : {-1, 1}) {
      const double c = g.center + s * k * g.side_spacing;
      if (c < lo || c > hi) continue;
      w.accidental_total += window_counts(rec, c);
      ++w.accidental_windows;
    }
  }
  if (w.accidental_windows < 2) fail(ErrorCode::InsufficientAccidentals, "fewer than two accidental windows in range");
  return w;
}

}  // namespace

Estimate g2_from_counts(const CoincidenceRecord& rec, const WindowGeometry& geometry) {
  const Windows w = collect(rec, geometry);
  if (w.accidental_total == 0) fail(ErrorCode::InsufficientAccidentals, "accidental windows hold no counts");
  const double g2 = static_cast<double>(w.central) / w.accidental_mean();
  double rel2 = 1.0 / static_cast<double>(w.accidental_total);
  if (w.central > 0) rel2 += 1.0 / static_cast<double>(w.central);
  return {g2, g2 * std::sqrt(rel2)};
}

WitnessResult witness(Estimate g2, Estimate v1, Estimate v2) {
  if (!(g2.value > 0.0)) fail(ErrorCode::DomainError, "g2 must be > 0");
  for (const auto& v : {v1, v2})
    if (!(v.value >= 0.0 && v.value <= 1.0)) fail(ErrorCode::DomainError, "visibilities must lie in [0, 1]");
  if (g2.sigma < 0.0 || v1.sigma < 0.0 || v2.sigma < 0.0) fail(ErrorCode::DomainError, "uncertainties must be >= 0");
  WitnessResult r;
  r.g2 = g2;
  r.v_mean = {0.5 * (v1.value + v2.value), 0.5 * std::hypot(v1.sigma, v2.sigma)};
  const double d = g2.value + 2.0;
  r.w = 1.0 / d - 0.5 * r.v_mean.value;
  r.sigma_w = std::hypot(g2.sigma / (d * d), 0.5 * r.v_mean.sigma);
  return r;
}

double franson_model(double phase, const FransonParams& p) {
  if (!(p.amplitude >= 0.0)) fail(ErrorCode::DomainError, "fringe amplitude must be >= 0");
  return p.amplitude * (1.0 + p.visibility * std::cos(phase - p.phase0)) + p.offset;
}

std::vector<std::int64_t> sample_fringe(std::span<const double> phases, const FransonParams& p,
                                        std::optional<std::uint64_t> seed) {
  if (!seed) fail(ErrorCode::ConfigError, "Poisson sampling requires an explicit seed");
  std::mt19937_64 rng(*seed);
  std::vector<std::int64_t> out;
  out.reserve(phases.size());
  for (double ph : phases) {
    const double mean = franson_model(ph, p);
    if (mean < 0.0) fail(ErrorCode::DomainError, "negative expected counts");
    std::poisson_distribution<std::int64_t> dist(mean);
    out.push_back(mean > 0.0 ? dist(rng) : 0);
  }
  return out;
}

HeraldedEfficiency heralded_efficiency(const CoincidenceRecord& stored, const CoincidenceRecord& reference,
                                       const WindowGeometry& stored_geometry,
                                       const WindowGeometry& reference_geometry) {
  const Windows s = collect(stored, stored_geometry);
  const Windows r = collect(reference, reference_geometry);
  const double ref_net = static_cast<double>(r.central) - r.accidental_mean();
  if (!(ref_net > 0.0)) fail(ErrorCode::EmptyWindow, "reference window holds no net coincidences");
  const double st_net = std::max(0.0, static_cast<double>(s.central) - s.accidental_mean());

  const double scale = reference.acquisition / stored.acquisition;
  HeraldedEfficiency h;
  h.value = st_net * scale / ref_net;
  h.one_sided = s.central == 0;
  // Poisson variances of net counts; an empty window contributes one count.
  const double var_s = std::max<double>(static_cast<double>(s.central), 1.0) +
                       static_cast<double>(s.accidental_total) / (s.accidental_windows * s.accidental_windows);
  const double var_r = static_cast<double>(r.central) +
                       static_cast<double>(r.accidental_total) / (r.accidental_windows * r.accidental_windows);
  h.sigma = scale * std::sqrt(var_s / (ref_net * ref_net) + st_net * st_net * var_r / std::pow(ref_net, 4));
  return h;
}

CoincidenceRecord synthetic_record(double central_mean, double accidental_mean, const WindowGeometry& geometry,
                                   double coincidence_window, double acquisition, std::optional<std::uint64_t> seed) {
  if (!(central_mean >= 0.0) || !(accidental_mean >= 0.0)) fail(ErrorCode::DomainError, "means must be >= 0");
  CoincidenceRecord rec;
  rec.acquisition = acquisition;
  rec.coincidence_window = coincidence_window;
  std::optional<std::mt19937_64> rng;
  if (seed) rng.emplace(*seed);
  auto draw = [&](double mean) -> std::int64_t {
    if (!rng) return std::llround(mean);
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> d(mean);
    return d(*rng);
  };
  for (int k = -geometry.side_windows; k <= geometry.side_windows; ++k) {
    rec.delay.push_back(geometry.center + k * geometry.side_spacing);
    rec.counts.push_back(draw(k == 0 ? central_mean : accidental_mean));
  }
  return validate(rec);
}

}  // namespace afcmem::stats
