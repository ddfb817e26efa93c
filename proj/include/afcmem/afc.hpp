#pragma once

// Ensemble absorption spectra: inhomogeneous profile, spectral hole burning
// into a long-lived shelving reservoir, comb synthesis with superhyperfine
// side-holes, reservoir decay and magnetic-field placement of side-holes.

#include <utility>
#include <vector>

#include "afcmem/core.hpp"

namespace afcmem::afc {

// Per-bin bookkeeping of the ensemble on a detuning grid. `baseline` is the
// unburned local ion loss rate kappa_ions(f) in Hz; `active` and `shelved`
// are fractions of the initial population (active + shelved == 1 per bin).
// The absorption seen by the cavity is baseline * active.
struct AbsorptionSpectrum {
  FrequencyGrid grid;
  std::vector<double> baseline;
  std::vector<double> active;
  std::vector<double> shelved;

  std::size_t size() const { return baseline.size(); }
  double absorption(std::size_t i) const { return baseline[i] * active[i]; }
  std::vector<double> absorption() const;
  // Absorption removed by burning, sum of baseline * shelved * df.
  double removed_absorption() const;
};

const AbsorptionSpectrum& validate(const AbsorptionSpectrum& s);

struct BurnSequence {
  std::vector<double> tooth_frequencies;
  double fm_amplitude = 2e6;  // chirp half-width, Hz
  double cycle_on = 10e-3;
  int cycles = 50;
  double wait = 0.2;
  // Per-cycle transfer probability; the default makes 50 cycles reach 0.95 depth.
  double p_burn = default_p_burn(0.95, 50);

  static double default_p_burn(double target_depth, int cycles);
};

const BurnSequence& validate(const BurnSequence& s);

// Side-hole offsets are intercept + slope * B for the Nb and Li satellites.
struct SideholeSpec {
  double slope_nb = 20e6 / 1.855;
  double slope_li = 30e6 / 1.855;
  double relative_depth = 0.3;
  double intercept_nb = 0.0;
  double intercept_li = 0.0;
};

const SideholeSpec& validate(const SideholeSpec& s);

struct SideholeBurn {
  SideholeSpec spec;
  double b_field = 0.0;
};

// Gaussian profile with the configured FWHM whose value at `line_center`
// (detuning of the inhomogeneous line center on the grid) equals kappa_ions.
AbsorptionSpectrum inhomogeneous_profile(const EnsembleParams& params, double kappa_ions,
                                         const FrequencyGrid& grid, double line_center = 0.0);

// Hole shape burned by a triangular chirp of half-width fm: the flat window
// [-fm, fm] convolved with a Lorentzian of FWHM gamma_h. Peak ~1 for fm >> gamma_h.
double hole_profile(double detuning, double fm_amplitude, double gamma_h);

// Burns one hole (plus optional side-holes) with `seq.cycles` cycles of
// per-cycle transfer probability p_burn * profile.
AbsorptionSpectrum burn_hole(const AbsorptionSpectrum& spec, double pump_freq, const BurnSequence& seq,
                             double gamma_h, const SideholeBurn* sideholes = nullptr);

// Prepares an N-tooth comb: the main pattern leaves teeth of the requested
// shape on a pedestal of (1 - eta_spectral), and side-holes of every burned
// trough are added at +/- the field-dependent offsets. Gaussian teeth are
// area-normalized so the mean tooth absorption over a period is eta / F.
AbsorptionSpectrum build_comb(const AbsorptionSpectrum& spec0, const CombSpec& comb,
                              const SideholeSpec& sideholes, double b_field);

// Reservoir relaxation: shelved population decays by exp(-wait / t_afc) and
// refills the active population.
AbsorptionSpectrum decay(const AbsorptionSpectrum& spec, double wait, double t_afc);

std::pair<double, double> sidehole_offsets(const SideholeSpec& sideholes, double b_field);

// Sum over both satellites of the squared distance of (offset mod delta) to
// the nearest multiple of delta.
double field_cost(double delta, const SideholeSpec& sideholes, double b_field);

// Field in [b_lo, b_hi] that parks both side-holes on comb troughs: grid search
// followed by exact minimization of the local quadratic piece.
double optimize_field(double delta, const SideholeSpec& sideholes, double b_lo, double b_hi);

}  // namespace afcmem::afc
