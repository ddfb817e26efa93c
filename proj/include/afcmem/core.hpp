#pragma once

// Shared domain types for the cavity-enhanced AFC memory toolkit.
//
// Unit convention: every frequency, rate and linewidth stored in these types
// is an ordinary frequency in Hz (the "/2pi" value). Angular conversion only
// happens inside the dynamical equations. Cavity rates (kappa_*) are full
// linewidth (FWHM) contributions, so Q = f / kappa_total.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace afcmem {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

enum class ErrorCode {
  NegativeRate,
  NonPositiveLinewidth,
  NonPositiveFrequency,
  LinewidthOrdering,
  NonPositiveLifetime,
  TooFewTeeth,
  DeltaNonPositive,
  FinesseTooLow,
  EtaOutOfRange,
  NonPositiveInterval,
  NonFiniteSample,
  DomainError,
  GridMismatch,
  NoResonance,
  FitDiverged,
  SingularJacobian,
  InvalidProblem,
  AliasingGuard,
  CalibrationFailed,
  StepSizeViolation,
  NumericBlowup,
  ModesOverrun,
  UnmatchedChannel,
  InsufficientAccidentals,
  EmptyWindow,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure in the library is reported through this exception; `code()`
// identifies the violated invariant or the failing operation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

// Loaded ring resonator. kappa_ions is the unsaturated ensemble-induced loss.
struct CavityParams {
  double kappa_ext = 0.0;
  double kappa_loss = 0.0;
  double kappa_ions = 0.0;
  double f_res = 0.0;

  // Ion-free linewidth, kappa_ext + kappa_loss.
  double kappa_total() const { return kappa_ext + kappa_loss; }
};

struct EnsembleParams {
  double center_wavelength = 1532.13e-9;
  double inhom_fwhm = 202e9;
  double gamma_h = 1.0 / (kPi * 93.0e-6);
  double t_afc = 277.6;
};

enum class ToothShape { Gaussian, Square };

struct CombSpec {
  int n_teeth = 21;
  double delta = 10e6;
  double finesse = 4.86;
  ToothShape tooth_shape = ToothShape::Gaussian;
  double eta_spectral = 0.95;
  double center_offset = 0.0;

  double tooth_fwhm() const { return delta / finesse; }
  double bandwidth() const { return n_teeth * delta; }
};

// Uniform frequency grid: frequency(i) = f0 + i * df.
struct FrequencyGrid {
  double f0 = 0.0;
  double df = 1.0;
  std::size_t n = 0;

  double frequency(std::size_t i) const { return f0 + static_cast<double>(i) * df; }
  double last() const { return frequency(n == 0 ? 0 : n - 1); }
  bool contains(double f) const { return n > 0 && f >= f0 && f <= last(); }

  // Grid with an odd number of points symmetric about `center`.
  static FrequencyGrid symmetric(double center, double half_span, double df);
};

// Sampled spectrum over a detuning grid. `carrier_hz` is the absolute
// frequency of zero detuning (0 when the grid is purely relative).
template <typename T>
struct Spectrum {
  double carrier_hz = 0.0;
  FrequencyGrid grid;
  std::vector<T> values;

  double frequency(std::size_t i) const { return grid.frequency(i); }
  std::size_t size() const { return values.size(); }
};

using ComplexSpectrum = Spectrum<cplx>;
using PowerSpectrum = Spectrum<double>;

// Complex field amplitude in sqrt(photons/s), so that the integral of
// |s|^2 dt is a photon number.
struct Waveform {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<cplx> samples;

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  std::size_t size() const { return samples.size(); }
  double energy() const;
  double end_time() const { return time(samples.empty() ? 0 : samples.size() - 1); }

  static Waveform zeros(double t0, double dt, std::size_t n);
};

// Piecewise-constant cavity detuning (Hz) used by the time-domain solver.
struct DetuningSchedule {
  struct Segment {
    double start = 0.0;
    double detuning = 0.0;
  };
  std::vector<Segment> segments;

  // Value before the first breakpoint is the first segment's value.
  double at(double t) const;
  double max_abs() const;
};

const CavityParams& validate(const CavityParams& p);
const EnsembleParams& validate(const EnsembleParams& p);
const CombSpec& validate(const CombSpec& c);
const Waveform& validate(const Waveform& w);
const FrequencyGrid& validate(const FrequencyGrid& g);

double q_from_kappa(double f_res, double kappa_total);

// Absolute optical frequency for a vacuum wavelength.
double frequency_from_wavelength(double wavelength_m);

// Gaussian pulse centered at `center` with intensity FWHM `fwhm`, scaled so
// that its energy equals `mean_photons`. Optional carrier offset in Hz.
Waveform gaussian_pulse(double t0, double dt, std::size_t n, double center, double fwhm,
                        double mean_photons, double carrier_hz = 0.0);

// Compactly supported pulse: amplitude cos^2(pi (t - center) / duration) for
// |t - center| < duration / 2, zero elsewhere, energy `mean_photons`.
Waveform raised_cosine_pulse(double t0, double dt, std::size_t n, double center, double duration,
                             double mean_photons, double carrier_hz = 0.0);

}  // namespace afcmem
