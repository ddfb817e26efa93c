#include <doctest.h>

#include <cmath>
#include <limits>

#include "afcmem/core.hpp"
#include "support/gen.hpp"

using namespace afcmem;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected afcmem::Error");
  return ErrorCode::DomainError;
}

}  // namespace

TEST_CASE("q_from_kappa reproduces hand quotients") {
  const double f = kSpeedOfLight / 1532e-9;
  CHECK(f == doctest::Approx(195.69e12).epsilon(1e-4));
  CHECK(q_from_kappa(f, 1.110e9) == doctest::Approx(f / 1.110e9).epsilon(1e-15));
  CHECK(q_from_kappa(f, 1.110e9) == doctest::Approx(1.763e5).epsilon(1e-3));
  CHECK(std::abs(q_from_kappa(f, 1.110e9) / 1.78e5 - 1.0) < 0.01);
  CHECK(q_from_kappa(1.0, 1.0) == 1.0);
  CHECK(q_from_kappa(195.69e12, 2.888e9) == doctest::Approx(6.776e4).epsilon(1e-3));
}

TEST_CASE("q_from_kappa rejects non-positive arguments") {
  CHECK(code_of([] { q_from_kappa(0.0, 1.0); }) == ErrorCode::DomainError);
  CHECK(code_of([] { q_from_kappa(1.0, -1.0); }) == ErrorCode::DomainError);
}

TEST_CASE("frequency_from_wavelength") {
  CHECK(frequency_from_wavelength(1532e-9) == doctest::Approx(kSpeedOfLight / 1532e-9));
}

TEST_CASE("validate accepts the reference comb and flags each invariant") {
  CombSpec c{21, 10e6, 4.86, ToothShape::Gaussian, 0.95, 0.0};
  CHECK_NOTHROW(validate(c));

  CombSpec zero_delta = c;
  zero_delta.delta = 0.0;
  CHECK(code_of([&] { validate(zero_delta); }) == ErrorCode::DeltaNonPositive);

  CombSpec one_tooth = c;
  one_tooth.n_teeth = 1;
  CHECK(code_of([&] { validate(one_tooth); }) == ErrorCode::TooFewTeeth);

  CombSpec low_f = c;
  low_f.finesse = 1.0;
  CHECK(code_of([&] { validate(low_f); }) == ErrorCode::FinesseTooLow);

  CombSpec bad_eta = c;
  bad_eta.eta_spectral = 1.2;
  CHECK(code_of([&] { validate(bad_eta); }) == ErrorCode::EtaOutOfRange);

  CavityParams p{-1.0, 119e6, 1778e6, 195.69e12};
  CHECK(code_of([&] { validate(p); }) == ErrorCode::NegativeRate);
  CavityParams no_width{0.0, 0.0, 0.0, 195.69e12};
  CHECK(code_of([&] { validate(no_width); }) == ErrorCode::NonPositiveLinewidth);
  CavityParams no_freq{1.0, 0.0, 0.0, 0.0};
  CHECK(code_of([&] { validate(no_freq); }) == ErrorCode::NonPositiveFrequency);

  EnsembleParams e;
  CHECK_NOTHROW(validate(e));
  e.gamma_h = 2.0 * e.inhom_fwhm;
  CHECK(code_of([&] { validate(e); }) == ErrorCode::LinewidthOrdering);
  EnsembleParams e2;
  e2.t_afc = 0.0;
  CHECK(code_of([&] { validate(e2); }) == ErrorCode::NonPositiveLifetime);

  Waveform w{0.0, 0.0, {cplx(1.0, 0.0)}};
  CHECK(code_of([&] { validate(w); }) == ErrorCode::NonPositiveInterval);
  Waveform nan{0.0, 1.0, {cplx(std::numeric_limits<double>::quiet_NaN(), 0.0)}};
  CHECK(code_of([&] { validate(nan); }) == ErrorCode::NonFiniteSample);
}

TEST_CASE("property: validate is idempotent on generated values") {
  gen::for_all(11, 200, [](gen::Rng& r, int) {
    CavityParams p{r.log_uniform(1e6, 1e10), r.log_uniform(1e5, 1e10), r.log_uniform(1e5, 1e10), r.log_uniform(1e12, 1e15)};
    const CavityParams& once = validate(p);
    const CavityParams& twice = validate(once);
    CHECK(twice.kappa_ext == p.kappa_ext);
    CHECK(twice.kappa_loss == p.kappa_loss);
    CHECK(twice.kappa_ions == p.kappa_ions);
    CHECK(twice.f_res == p.f_res);

    CombSpec c{r.integer(2, 200), r.log_uniform(1e5, 1e9), r.uniform(1.01, 30.0), ToothShape::Gaussian,
               r.uniform(0.0, 1.0), r.uniform(-1e9, 1e9)};
    CHECK(validate(validate(c)).finesse == c.finesse);
  });
}

TEST_CASE("property: unit convention round-trips Q against a hand computation") {
  gen::for_all(12, 100, [](gen::Rng& r, int) {
    const double f = r.log_uniform(1e13, 1e15);
    const double k = r.log_uniform(1e6, 1e11);
    // Angular frequencies cancel in the ratio; the stored Hz values must give f / k directly.
    const double omega = 2.0 * 3.141592653589793 * f;
    const double kappa_rad = 2.0 * 3.141592653589793 * k;
    CHECK(q_from_kappa(f, k) == doctest::Approx(omega / kappa_rad).epsilon(1e-13));
  });
}

TEST_CASE("gaussian_pulse carries the requested energy and width") {
  const auto w = gaussian_pulse(0.0, 0.05e-9, 4000, 100e-9, 15e-9, 0.163);
  CHECK(w.energy() == doctest::Approx(0.163).epsilon(1e-6));
  double peak = 0.0;
  for (const auto& s : w.samples) peak = std::max(peak, std::norm(s));
  // Intensity half-maximum crossings located by scanning the samples.
  double first = -1.0, last = -1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::norm(w.samples[i]) >= 0.5 * peak) {
      if (first < 0.0) first = w.time(i);
      last = w.time(i);
    }
  }
  CHECK(last - first == doctest::Approx(15e-9).epsilon(0.01));
}

TEST_CASE("raised_cosine_pulse is compact and normalized") {
  const auto w = raised_cosine_pulse(0.0, 0.01e-9, 5000, 25e-9, 15e-9, 2.0);
  CHECK(w.energy() == doctest::Approx(2.0).epsilon(1e-6));
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::abs(w.time(i) - 25e-9) >= 7.5e-9) CHECK(std::abs(w.samples[i]) == 0.0);
}

TEST_CASE("carrier offsets rotate the phase without changing the envelope") {
  const auto a = gaussian_pulse(0.0, 0.1e-9, 2000, 50e-9, 10e-9, 1.0);
  const auto b = gaussian_pulse(0.0, 0.1e-9, 2000, 50e-9, 10e-9, 1.0, 30e6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b.samples[i]) == doctest::Approx(std::abs(a.samples[i])));
}

TEST_CASE("DetuningSchedule holds its value between breakpoints") {
  DetuningSchedule s{{{0.0, 1.0}, {10.0, -2.0}, {20.0, 3.0}}};
  CHECK(s.at(-5.0) == 1.0);
  CHECK(s.at(0.0) == 1.0);
  CHECK(s.at(9.99) == 1.0);
  CHECK(s.at(10.0) == -2.0);
  CHECK(s.at(100.0) == 3.0);
  CHECK(s.max_abs() == 3.0);
}

TEST_CASE("FrequencyGrid::symmetric is centered with an odd point count") {
  const auto g = FrequencyGrid::symmetric(5.0, 10.0, 0.5);
  CHECK(g.n % 2 == 1);
  CHECK(g.frequency(g.n / 2) == doctest::Approx(5.0));
  CHECK(g.f0 == doctest::Approx(-5.0));
  CHECK(g.last() == doctest::Approx(15.0));
}
