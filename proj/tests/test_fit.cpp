#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "afcmem/fit.hpp"
#include "support/gen.hpp"

using namespace afcmem;
using namespace afcmem::fit;

namespace {

constexpr double kTau = 277.6;
constexpr double kPiD = 3.141592653589793;

FitProblem decay_problem(const std::vector<double>& x, const std::vector<double>& y, std::vector<double> sigma = {}) {
  return FitProblem{exp_decay(), x, y, std::move(sigma), {y.front(), 200.0}, std::nullopt};
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

double chi2_of(const Model& m, const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& s,
               const std::vector<double>& p) {
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += std::pow((y[i] - m.eval(x[i], p)) / s[i], 2);
  return c;
}

}  // namespace

TEST_CASE("noiseless exponential decay recovers the lifetime") {
  const auto x = linspace(0.0, 900.0, 30);
  std::vector<double> y;
  for (double t : x) y.push_back(1000.0 * std::exp(-t / kTau));
  const auto r = fit::fit(decay_problem(x, y));
  CHECK(r.converged);
  CHECK(r.params[1] == doctest::Approx(kTau).epsilon(1e-6));
  CHECK(r.params[0] == doctest::Approx(1000.0).epsilon(1e-6));
}

TEST_CASE("noiseless fringe recovers the visibility") {
  const auto x = linspace(0.0, 2.0 * kPiD, 24);
  std::vector<double> y;
  for (double ph : x) y.push_back(300.0 * (1.0 + 0.5117 * std::cos(ph - 0.4)));
  const auto r = fit::fit(FitProblem{fringe(), x, y, {}, {250.0, 0.3, 0.0}, std::nullopt});
  CHECK(r.params[1] == doctest::Approx(0.5117).epsilon(1e-6));
  CHECK(visibility(r).value == doctest::Approx(0.5117).epsilon(1e-6));
}

TEST_CASE("grid-search oracle agrees with the optimizer on one noisy instance") {
  gen::Rng rng(71);
  const auto x = linspace(0.0, 900.0, 30);
  std::vector<double> y, s;
  for (double t : x) {
    const double truth = 1000.0 * std::exp(-t / kTau);
    s.push_back(20.0);
    y.push_back(truth + rng.normal(0.0, 20.0));
  }
  const auto r = fit::fit(decay_problem(x, y, s));
  const auto m = exp_decay();
  double best = std::numeric_limits<double>::infinity(), best_a = 0.0, best_tau = 0.0;
  for (double a = 900.0; a <= 1100.0; a += 0.5) {
    for (double tau = 230.0; tau <= 330.0; tau += 0.25) {
      const double c = chi2_of(m, x, y, s, {a, tau});
      if (c < best) {
        best = c;
        best_a = a;
        best_tau = tau;
      }
    }
  }
  CHECK(r.chi2 <= best + 1e-9);
  CHECK(std::abs(r.params[0] - best_a) <= 1.0);
  CHECK(std::abs(r.params[1] - best_tau) <= 0.5);
}

TEST_CASE("Monte Carlo: true parameters lie within 3 sigma in at least 99% of fits") {
  gen::Rng rng(72);
  const auto x = linspace(0.0, 900.0, 30);
  int covered = 0;
  double chi2_sum = 0.0;
  const int reps = 500;
  for (int k = 0; k < reps; ++k) {
    std::vector<double> y, s;
    for (double t : x) {
      s.push_back(15.0);
      y.push_back(1000.0 * std::exp(-t / kTau) + rng.normal(0.0, 15.0));
    }
    const auto r = fit::fit(decay_problem(x, y, s));
    chi2_sum += r.reduced_chi2;
    if (std::abs(r.params[0] - 1000.0) <= 3.0 * r.stderr_of(0) && std::abs(r.params[1] - kTau) <= 3.0 * r.stderr_of(1))
      ++covered;
  }
  CHECK(covered >= 0.99 * reps);
  CHECK(chi2_sum / reps == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("accepted steps never increase the cost") {
  const auto x = linspace(-5.0, 5.0, 60);
  std::vector<double> y;
  gen::Rng rng(73);
  for (double v : x) y.push_back(3.0 * std::exp(-4.0 * std::log(2.0) * (v - 0.7) * (v - 0.7) / 4.0) + 0.2 + rng.normal(0.0, 0.01));
  const auto r = fit::fit(FitProblem{gaussian_pulse(), x, y, {}, {1.0, 0.0, 1.0, 0.0}, std::nullopt});
  REQUIRE(r.cost_history.size() >= 2);
  for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
  CHECK(r.chi2 >= 0.0);
}

TEST_CASE("property: shifting x shifts only the center") {
  gen::for_all(74, 20, [](gen::Rng& rng, int) {
    const double c = rng.uniform(-50.0, 50.0);
    const auto x = linspace(-5.0, 5.0, 80);
    std::vector<double> y, xs;
    for (double v : x) {
      y.push_back(2.0 * std::exp(-4.0 * std::log(2.0) * (v - 0.3) * (v - 0.3) / 2.25) + 0.1 + 0.02 * std::sin(7.0 * v));
      xs.push_back(v + c);
    }
    const auto a = fit::fit(FitProblem{gaussian_pulse(), x, y, {}, {1.5, 0.0, 1.0, 0.0}, std::nullopt});
    const auto b = fit::fit(FitProblem{gaussian_pulse(), xs, y, {}, {1.5, c, 1.0, 0.0}, std::nullopt});
    CHECK(b.params[1] - c == doctest::Approx(a.params[1]).epsilon(1e-6));
    CHECK(b.params[0] == doctest::Approx(a.params[0]).epsilon(1e-6));
    CHECK(b.params[2] == doctest::Approx(a.params[2]).epsilon(1e-6));
    CHECK(b.params[3] == doctest::Approx(a.params[3]).epsilon(1e-6));
  });
}

TEST_CASE("property: parameter units do not affect rank decisions or errors") {
  // A dip in Hz puts the center and slope Jacobian columns ~1e18 apart.
  gen::for_all(75, 10, [](gen::Rng& rng, int) {
    const double scale = std::pow(10.0, rng.uniform(0.0, 9.0));
    const auto u = linspace(-5.0, 5.0, 201);
    std::vector<double> x, y;
    for (double v : u) {
      x.push_back(v * scale);
      y.push_back(1.0 - 0.6 / (1.0 + 4.0 * v * v) + 0.01 * std::sin(3.0 * v));
    }
    const auto unit = fit::fit(FitProblem{fano_dip(), u, y, {}, {0.1, 0.8, 0.5, 0.0, 1.0, 0.0}, std::nullopt});
    const auto hz = fit::fit(
        FitProblem{fano_dip(), x, y, {}, {0.1 * scale, 0.8 * scale, 0.5, 0.0, 1.0, 0.0}, std::nullopt});
    CHECK(hz.params[1] / scale == doctest::Approx(unit.params[1]).epsilon(1e-6));
    CHECK(hz.params[2] == doctest::Approx(unit.params[2]).epsilon(1e-6));
    CHECK(hz.stderr_of(0) / scale == doctest::Approx(unit.stderr_of(0)).epsilon(1e-4));
    CHECK(hz.stderr_of(5) * scale == doctest::Approx(unit.stderr_of(5)).epsilon(1e-4));
  });
}

TEST_CASE("visibility helpers") {
  CHECK(visibility(100.0, 0.0).value == 0.0);
  const double a = 123.0, v = 0.5130;
  const double hi = a * (1.0 + v), lo = a * (1.0 - v);
  CHECK(visibility(a, v).value == doctest::Approx((hi - lo) / (hi + lo)).epsilon(1e-12));
  CHECK(std::abs(visibility(a, v).value - v) < 1e-12);
  CHECK_THROWS_AS(visibility(0.0, 0.5), Error);

  const auto x = linspace(0.0, 2.0 * kPiD, 16);
  std::vector<double> flat(x.size(), 50.0);
  const auto r = fit::fit(FitProblem{fringe(), x, flat, {}, {40.0, 0.2, 0.1}, std::nullopt});
  CHECK(std::abs(visibility(r).value) < 1e-6);
  // The phase of a vanishing fringe is undetermined; the visibility is not.
  CHECK(std::isinf(r.stderr_of(2)));
  CHECK(std::isfinite(visibility(r).sigma));
}

TEST_CASE("degenerate problems are rejected") {
  Model dead{"dead", {"a", "b"}, [](double x, std::span<const double> p) { return p[0] * x; }};
  const auto x = linspace(0.0, 1.0, 10);
  std::vector<double> y(x.begin(), x.end());
  try {
    fit::fit(FitProblem{dead, x, y, {}, {1.0, 1.0}, std::nullopt});
    FAIL("expected SingularJacobian");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularJacobian);
  }
  CHECK_THROWS_AS(fit::fit(FitProblem{exp_decay(), {1.0, 2.0}, {1.0, 2.0}, {}, {1.0, 1.0}, std::nullopt}), Error);
  CHECK_THROWS_AS(fit::fit(FitProblem{exp_decay(), x, y, std::vector<double>(10, 0.0), {1.0, 1.0}, std::nullopt}), Error);
  CHECK_THROWS_AS(fit::fit(FitProblem{exp_decay(), x, y, {}, {1.0}, std::nullopt}), Error);
}

TEST_CASE("bounds are honoured") {
  const auto x = linspace(0.0, 900.0, 30);
  std::vector<double> y;
  for (double t : x) y.push_back(1000.0 * std::exp(-t / kTau));
  auto p = decay_problem(x, y);
  p.bounds = Bounds{{0.0, 100.0}, {2000.0, 250.0}};
  const auto r = fit::fit(p);
  CHECK(r.params[1] <= 250.0);
  CHECK(r.params[1] >= 100.0);
}

TEST_CASE("models are available by name") {
  for (const char* n : {"fano", "exp_decay", "fringe", "gaussian_pulse"}) CHECK(model_by_name(n).has_value());
  CHECK_FALSE(model_by_name("lorentz").has_value());
  CHECK(model_by_name("fano")->n_params() == 6);
}
