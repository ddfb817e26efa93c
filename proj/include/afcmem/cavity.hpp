#pragma once

// Steady-state transmission of a bus-coupled (all-pass) ring with an ion
// ensemble, power saturation of the ion loss, and Q / extinction extraction.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "afcmem/core.hpp"

namespace afcmem::cavity {

// Field transmission for light detuned by `detuning` from the cavity
// resonance (fields evolve as exp(-i 2 pi f t)):
//   t = 1 - kappa_ext / (kappa_tot / 2 - i detuning),
// with kappa_tot = kappa_ext + kappa_loss + kappa_ions_eff. |t| is even in the
// detuning; only the phase convention depends on the sign choice.
cplx field_transmission(const CavityParams& params, double kappa_ions_eff, double detuning);

ComplexSpectrum transmission(const CavityParams& params, const FrequencyGrid& detuning,
                             double kappa_ions_eff);
PowerSpectrum power_transmission(const CavityParams& params, const FrequencyGrid& detuning,
                                 double kappa_ions_eff);

struct FanoFitResult {
  double q_loaded = 0.0;
  double extinction_ratio = 1.0;  // linear power ratio
  double f_center = 0.0;          // absolute, Hz
  double fwhm = 0.0;              // Hz
  double fano_q = 0.0;            // asymmetry; +/-inf for a symmetric Lorentzian
  double depth = 0.0;
  Eigen::MatrixXd covariance;     // of (center, fwhm, depth, inv_q, baseline, slope)

  double extinction_ratio_db() const;
};

// Fits a single Fano-broadened Lorentzian dip with a linear baseline.
// Throws NoResonance when the dip is not resolved above the noise and
// FitDiverged when the fit does not converge.
FanoFitResult fano_extract(const PowerSpectrum& spectrum);

struct SaturationModel {
  double kappa_ions0 = 0.0;
  double p_sat = 1e-10;
};

const SaturationModel& validate(const SaturationModel& m);

// Two-level homogeneous saturation: kappa_ions0 / (1 + P / p_sat).
double kappa_ions_at_power(const SaturationModel& model, double p_on_chip);

struct SweepPoint {
  double power = 0.0;
  double kappa_ions = 0.0;
  double q_loaded = 0.0;
  double extinction_ratio = 1.0;
};

struct SweepOptions {
  // Samples per full linewidth of the synthetic spectrum and the spectrum
  // half-span in units of that linewidth.
  double samples_per_linewidth = 40.0;
  double half_span_linewidths = 6.0;
  unsigned threads = 1;
};

// Builds the transmission at each power and runs fano_extract on it.
std::vector<SweepPoint> power_sweep(const CavityParams& params, const SaturationModel& model,
                                    std::span<const double> powers, const SweepOptions& opts = {});

// Power at which kappa_ions(P) = kappa_ext - kappa_loss (critical coupling),
// or a negative value when it is not reachable.
double critical_coupling_power(const CavityParams& params, const SaturationModel& model);

}  // namespace afcmem::cavity
