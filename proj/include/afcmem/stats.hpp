#pragma once

// Coincidence statistics for heralded photon pairs: cross-correlation g2,
// Franson fringes and the time-energy entanglement witness.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "afcmem/core.hpp"
#include "afcmem/fit.hpp"

namespace afcmem::stats {

using fit::Estimate;

struct CoincidenceRecord {
  std::vector<double> delay;  // bin centers, s
  std::vector<std::int64_t> counts;
  std::int64_t singles_s = 0;
  std::int64_t singles_i = 0;
  double acquisition = 0.0;         // s
  double coincidence_window = 0.0;  // s
};

const CoincidenceRecord& validate(const CoincidenceRecord& rec);

// Central window at `center`; accidental windows at center +/- k * side_spacing
// for k = 1..side_windows.
struct WindowGeometry {
  double center = 0.0;
  double side_spacing = 12.5e-9;
  int side_windows = 2;
};

// Counts inside |delay - center| <= coincidence_window / 2.
std::int64_t window_counts(const CoincidenceRecord& rec, double center);

// Central counts over the mean accidental count with Poisson errors on both.
// Throws InsufficientAccidentals when fewer than two side windows fit in the
// histogram or they hold no counts.
Estimate g2_from_counts(const CoincidenceRecord& rec, const WindowGeometry& geometry = {});

struct WitnessResult {
  double w = 0.0;
  double sigma_w = 0.0;
  Estimate g2;
  Estimate v_mean;
};

// W = 1/(g2 + 2) - V/2 with V the mean of the two visibilities and
// first-order error propagation.
WitnessResult witness(Estimate g2, Estimate v1, Estimate v2);

struct FransonParams {
  double amplitude = 1.0;
  double visibility = 0.0;
  double phase0 = 0.0;
  double offset = 0.0;
};

double franson_model(double phase, const FransonParams& p);

// Poisson-sampled fringe counts. A seed is mandatory; std::nullopt throws
// ConfigError.
std::vector<std::int64_t> sample_fringe(std::span<const double> phases, const FransonParams& p,
                                        std::optional<std::uint64_t> seed);

struct HeraldedEfficiency {
  double value = 0.0;
  double sigma = 0.0;
  bool one_sided = false;  // stored window was empty; sigma is an upper 1-sigma bound
};

// Ratio of accidental-subtracted central coincidences, stored over reference,
// with each record normalized to its acquisition time.
HeraldedEfficiency heralded_efficiency(const CoincidenceRecord& stored, const CoincidenceRecord& reference,
                                       const WindowGeometry& stored_geometry = {},
                                       const WindowGeometry& reference_geometry = {});

// Histogram with the given expected counts placed at the central and side
// windows (one bin per window). Deterministic unless a seed is given, in
// which case every bin is Poisson sampled.
CoincidenceRecord synthetic_record(double central_mean, double accidental_mean, const WindowGeometry& geometry,
                                   double coincidence_window, double acquisition,
                                   std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace afcmem::stats
