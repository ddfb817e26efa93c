#pragma once

// Storage efficiency of the cavity-enhanced comb: closed-form estimate,
// frequency-domain propagation through the cavity/ensemble transfer function,
// and a time-domain coupled-mode solver.

#include <span>
#include <vector>

#include "afcmem/afc.hpp"
#include "afcmem/core.hpp"

namespace afcmem::echo {

struct EfficiencyBreakdown {
  double eta_total = 0.0;
  double eta_d = 0.0;
  double c_bare = 0.0;   // kappa_ions / kappa_total
  double c_eff = 0.0;    // residual-absorption weighted cooperativity
  double k_match = 0.0;  // kappa_ext / (kappa_loss + kappa_ions_eff)
  double bracket = 0.0;  // eta_total = bracket^2 * eta_d
};

// Dephasing factor of the comb. Gaussian teeth: exp(-pi^2 / (2 ln2 F^2)).
// Square teeth (extension): sinc^2(pi / F).
double dephasing_factor(const CombSpec& comb);

// Mean absorption left by the comb relative to the unburned line:
// eta_spectral / F + (1 - eta_spectral).
double residual_weight(const CombSpec& comb);

EfficiencyBreakdown afc_efficiency_analytic(const CavityParams& params, const CombSpec& comb);

struct FinessePoint {
  double finesse = 0.0;
  double eta = 0.0;
  double k_match = 0.0;
  double c_eff = 0.0;
};

struct FinesseSweep {
  std::vector<FinessePoint> points;
  double argmax_finesse = 0.0;
  double peak_eta = 0.0;
};

// Evaluates the closed form over `finesse_grid`. `eta_override`, when
// non-empty, supplies eta_spectral per grid point.
FinesseSweep sweep_finesse(const CavityParams& params, const CombSpec& comb_template,
                           std::span<const double> finesse_grid,
                           std::span<const double> eta_override = {});

// Complex ensemble response Sigma(delta) built from an absorption spectrum.
// The mean of the two edge values is taken as a spectrally flat background;
// the remaining signed absorption is interpolated linearly between grid
// points and its dispersion follows from the exact Lorentzian-broadened
// integral.
// Re Sigma reproduces the absorption, Im Sigma its Hilbert partner.
class EnsembleResponse {
 public:
  EnsembleResponse(const afc::AbsorptionSpectrum& spec, double gamma_h);
  EnsembleResponse(const afc::AbsorptionSpectrum& spec, double gamma_h, double background);

  double background() const { return background_; }
  double gamma_h() const { return gamma_h_; }
  // Full-width ensemble loss at the detuning (same units as kappa).
  cplx self_energy(double detuning) const;

 private:
  void build(const afc::AbsorptionSpectrum& spec);

  double gamma_h_ = 0.0;
  double background_ = 0.0;
  FrequencyGrid out_grid_;
  std::vector<cplx> half_sigma_;  // Sigma/2 minus background/2 on out_grid_
  double center_ = 0.0;
  double moments_[3] = {0.0, 0.0, 0.0};
};

// S(delta) = 1 - kappa_ext / (kappa_total/2 - i delta + Sigma(delta)/2) with
// kappa_total = kappa_ext + kappa_loss; the ensemble enters only through
// `spec` (params.kappa_ions is not used). Detunings share the frame of the
// absorption grid.
ComplexSpectrum transfer_function(const CavityParams& params, const afc::AbsorptionSpectrum& spec,
                                  const FrequencyGrid& grid, double gamma_h);
ComplexSpectrum transfer_function(const CavityParams& params, const EnsembleResponse& response,
                                  const FrequencyGrid& grid);

// Grid holding one point per DFT bin of the waveform, ascending.
FrequencyGrid fft_grid(const Waveform& input);

// Filters the waveform by s21 (linear interpolation between grid points,
// nearest value beyond the edges). The waveform window is treated as
// periodic. Throws AliasingGuard when more than 0.1% of the input energy lies
// outside the s21 grid.
Waveform propagate(const Waveform& input, const ComplexSpectrum& s21);

// propagate() through the transfer function sampled on fft_grid(input).
Waveform store_fft(const CavityParams& params, const EnsembleResponse& response, const Waveform& input);

struct DiscretizationOptions {
  double tooth_period = 10e6;  // Hz, sets the bin width
  int bins_per_tooth_period = 64;
  double tolerance = 0.005;
  // Bins are laid over the region where |absorption - background| exceeds
  // trim * max(background, max absorption).
  double trim = 1e-4;
};

// Discrete ensemble for the time-domain solver. Each bin is one collective
// mode at `detuning[k]` with coupling g[k] (Hz) and sign[k] = +1 for excess
// absorption over the background, -1 for a deficit (burned hole).
struct EnsembleDiscretization {
  int bins_per_tooth_period = 0;
  double bin_width = 0.0;
  double gamma_h = 0.0;
  double background = 0.0;
  std::vector<double> detuning;
  std::vector<double> g;
  std::vector<int> sign;
  double achieved_error = 0.0;  // relative, against the continuum response

  std::size_t size() const { return g.size(); }
  // Sigma(delta) of the discrete model with broadening gamma.
  cplx self_energy(double detuning, double gamma) const;
};

// Throws CalibrationFailed when the discrete response deviates from the
// continuum by more than opts.tolerance (relative to max |Sigma|).
EnsembleDiscretization discretize_ensemble(const afc::AbsorptionSpectrum& spec, double gamma_h,
                                           const DiscretizationOptions& opts = {});

struct TimeDomainOptions {
  int substeps = 0;  // RK4 steps per input sample; 0 picks the smallest allowed
  double frame = 0.0;  // Hz, rotating frame used internally
};

struct TimeDomainResult {
  Waveform cavity;  // intracavity amplitude a(t)
  Waveform output;
  int substeps = 0;
  double step = 0.0;
};

// Largest RK4 step allowed for the discretization, cavity and schedule.
double max_time_step(const EnsembleDiscretization& disc, const CavityParams& params,
                     const DetuningSchedule* schedule, double frame = 0.0);

// Fixed-step RK4 integration of the linear coupled-mode equations. The input
// is interpolated with a cubic between samples; the output shares its time
// axis. Throws StepSizeViolation when the requested step is too long and
// NumericBlowup on a non-finite sample.
TimeDomainResult simulate_time_domain(const EnsembleDiscretization& disc, const CavityParams& params,
                                      const Waveform& input, const DetuningSchedule* schedule = nullptr,
                                      const TimeDomainOptions& opts = {});

// Windowed energy of `output` over |t - center| <= window/2 divided by the
// total energy of `reference`.
double efficiency_from_trace(const Waveform& output, const Waveform& reference, double window_center,
                             double window);

// Time of the envelope maximum of `trace` for t >= after.
double peak_time(const Waveform& trace, double after);

struct MultiplexSpec {
  int modes = 9;
  double slot = 10e-9;
  double pulse_fwhm = 5e-9;
  double first_center = 50e-9;
  double storage_time = 100e-9;
  double dt = 0.1e-9;
  double duration = 0.0;  // 0 picks 16 storage times
};

struct MultiplexResult {
  std::vector<double> mode_efficiency;
  std::vector<double> echo_times;
  double collective = 0.0;
  Waveform input;
  Waveform output;
};

// Stores a train of equal Gaussian modes and windows each echo over
// +/- slot/2 around its input time + storage_time. Throws ModesOverrun when the
// train does not fit before the first echo.
MultiplexResult multiplex(const CavityParams& params, const EnsembleResponse& response,
                          const MultiplexSpec& spec);

}  // namespace afcmem::echo
