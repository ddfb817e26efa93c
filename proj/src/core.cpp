#include "afcmem/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace afcmem {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::NonPositiveLinewidth: return "NonPositiveLinewidth";
    case ErrorCode::NonPositiveFrequency: return "NonPositiveFrequency";
    case ErrorCode::LinewidthOrdering: return "LinewidthOrdering";
    case ErrorCode::NonPositiveLifetime: return "NonPositiveLifetime";
    case ErrorCode::TooFewTeeth: return "TooFewTeeth";
    case ErrorCode::DeltaNonPositive: return "DeltaNonPositive";
    case ErrorCode::FinesseTooLow: return "FinesseTooLow";
    case ErrorCode::EtaOutOfRange: return "EtaOutOfRange";
    case ErrorCode::NonPositiveInterval: return "NonPositiveInterval";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoResonance: return "NoResonance";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::AliasingGuard: return "AliasingGuard";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::StepSizeViolation: return "StepSizeViolation";
    case ErrorCode::NumericBlowup: return "NumericBlowup";
    case ErrorCode::ModesOverrun: return "ModesOverrun";
    case ErrorCode::UnmatchedChannel: return "UnmatchedChannel";
    case ErrorCode::InsufficientAccidentals: return "InsufficientAccidentals";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

FrequencyGrid FrequencyGrid::symmetric(double center, double half_span, double df) {
  if (!(df > 0.0) || !(half_span >= 0.0)) fail(ErrorCode::DomainError, "symmetric grid needs df > 0");
  const auto half = static_cast<std::size_t>(std::ceil(half_span / df - 1e-9));
  return FrequencyGrid{center - static_cast<double>(half) * df, df, 2 * half + 1};
}

double Waveform::energy() const {
  double e = 0.0;
  for (const auto& s : samples) e += std::norm(s);
  return e * dt;
}

Waveform Waveform::zeros(double t0, double dt, std::size_t n) {
  return Waveform{t0, dt, std::vector<cplx>(n, cplx{})};
}

double DetuningSchedule::at(double t) const {
  if (segments.empty()) return 0.0;
  // segments are sorted by start; find the last one starting at or before t.
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const Segment& s) { return v < s.start; });
  if (it == segments.begin()) return segments.front().detuning;
  return std::prev(it)->detuning;
}

double DetuningSchedule::max_abs() const {
  double m = 0.0;
  for (const auto& s : segments) m = std::max(m, std::abs(s.detuning));
  return m;
}

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

const CavityParams& validate(const CavityParams& p) {
  if (!finite_nonneg(p.kappa_ext) || !finite_nonneg(p.kappa_loss) || !finite_nonneg(p.kappa_ions))
    fail(ErrorCode::NegativeRate, "cavity rates must be finite and >= 0");
  if (!(p.f_res > 0.0) || !std::isfinite(p.f_res))
    fail(ErrorCode::NonPositiveFrequency, "f_res must be > 0");
  if (!(p.kappa_total() > 0.0))
    fail(ErrorCode::NonPositiveLinewidth, "kappa_ext + kappa_loss must be > 0");
  return p;
}

const EnsembleParams& validate(const EnsembleParams& p) {
  if (!(p.center_wavelength > 0.0)) fail(ErrorCode::NonPositiveFrequency, "center_wavelength must be > 0");
  if (!(p.gamma_h > 0.0)) fail(ErrorCode::NonPositiveLinewidth, "gamma_h must be > 0");
  if (!(p.inhom_fwhm > p.gamma_h))
    fail(ErrorCode::LinewidthOrdering, "inhom_fwhm must exceed gamma_h");
  if (!(p.t_afc > 0.0)) fail(ErrorCode::NonPositiveLifetime, "t_afc must be > 0");
  return p;
}

const CombSpec& validate(const CombSpec& c) {
  if (c.n_teeth < 2) fail(ErrorCode::TooFewTeeth, "n_teeth must be >= 2");
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) fail(ErrorCode::DeltaNonPositive, "delta must be > 0");
  if (!(c.finesse > 1.0) || !std::isfinite(c.finesse))
    fail(ErrorCode::FinesseTooLow, "finesse must be > 1");
  if (!(c.eta_spectral >= 0.0 && c.eta_spectral <= 1.0))
    fail(ErrorCode::EtaOutOfRange, "eta_spectral must lie in [0, 1]");
  return c;
}

const Waveform& validate(const Waveform& w) {
  if (!(w.dt > 0.0) || !std::isfinite(w.dt)) fail(ErrorCode::NonPositiveInterval, "waveform dt must be > 0");
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    if (!std::isfinite(w.samples[i].real()) || !std::isfinite(w.samples[i].imag())) {
      std::ostringstream os;
      os << "waveform sample " << i << " is not finite";
      fail(ErrorCode::NonFiniteSample, os.str());
    }
  }
  return w;
}

const FrequencyGrid& validate(const FrequencyGrid& g) {
  if (!(g.df > 0.0) || !std::isfinite(g.df)) fail(ErrorCode::NonPositiveInterval, "grid df must be > 0");
  if (!std::isfinite(g.f0)) fail(ErrorCode::DomainError, "grid f0 must be finite");
  return g;
}

double q_from_kappa(double f_res, double kappa_total) {
  if (!(f_res > 0.0) || !(kappa_total > 0.0))
    fail(ErrorCode::DomainError, "q_from_kappa needs positive frequency and linewidth");
  return f_res / kappa_total;
}

double frequency_from_wavelength(double wavelength_m) {
  if (!(wavelength_m > 0.0)) fail(ErrorCode::DomainError, "wavelength must be > 0");
  return kSpeedOfLight / wavelength_m;
}

Waveform gaussian_pulse(double t0, double dt, std::size_t n, double center, double fwhm,
                        double mean_photons, double carrier_hz) {
  if (!(fwhm > 0.0)) fail(ErrorCode::DomainError, "pulse fwhm must be > 0");
  if (!(dt > 0.0)) fail(ErrorCode::NonPositiveInterval, "pulse dt must be > 0");
  Waveform w = Waveform::zeros(t0, dt, n);
  // Intensity exp(-4 ln2 (t-c)^2 / fwhm^2); amplitude is its square root.
  const double a = 2.0 * std::log(2.0) / (fwhm * fwhm);
  // Continuous energy of |A|^2 exp(-4 ln2 x^2/fwhm^2) is |A|^2 fwhm sqrt(pi / (4 ln2)).
  const double norm = std::sqrt(mean_photons / (fwhm * std::sqrt(kPi / (4.0 * std::log(2.0)))));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = w.time(i);
    const double x = t - center;
    w.samples[i] = norm * std::exp(-a * x * x) * std::polar(1.0, -2.0 * kPi * carrier_hz * t);
  }
  return w;
}

Waveform raised_cosine_pulse(double t0, double dt, std::size_t n, double center, double duration,
                             double mean_photons, double carrier_hz) {
  if (!(duration > 0.0)) fail(ErrorCode::DomainError, "pulse duration must be > 0");
  if (!(dt > 0.0)) fail(ErrorCode::NonPositiveInterval, "pulse dt must be > 0");
  Waveform w = Waveform::zeros(t0, dt, n);
  // Intensity cos^4 over the support has continuous energy 3/8 * duration.
  const double norm = std::sqrt(mean_photons / (0.375 * duration));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = w.time(i);
    const double x = (t - center) / duration;
    if (std::abs(x) >= 0.5) continue;
    const double c = std::cos(kPi * x);
    w.samples[i] = norm * c * c * std::polar(1.0, -2.0 * kPi * carrier_hz * t);
  }
  return w;
}

}  // namespace afcmem
