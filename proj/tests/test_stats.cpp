#include <doctest.h>

#include <cmath>
#include <vector>

#include "afcmem/fit.hpp"
#include "afcmem/stats.hpp"
#include "support/gen.hpp"

using namespace afcmem;
using namespace afcmem::stats;

namespace {

const WindowGeometry kGeom{};

CoincidenceRecord record(double central, double accidental, double acquisition = 3600.0) {
  return synthetic_record(central, accidental, kGeom, 2e-9, acquisition);
}

}  // namespace

TEST_CASE("g2 from central and accidental windows") {
  const auto flat = g2_from_counts(record(500, 500));
  CHECK(flat.value == doctest::Approx(1.0));

  const auto r = g2_from_counts(record(4540, 1000));
  CHECK(r.value == doctest::Approx(4.54).epsilon(1e-12));
  // Poisson on both: central 4540 counts, accidentals 4 x 1000.
  CHECK(r.sigma == doctest::Approx(4.54 * std::sqrt(1.0 / 4540.0 + 1.0 / 4000.0)).epsilon(1e-12));

  try {
    g2_from_counts(record(10, 0));
    FAIL("expected InsufficientAccidentals");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientAccidentals);
  }
  auto narrow = record(10, 5);
  narrow.delay = {-1e-9, 0.0, 1e-9, 2e-9, 3e-9};
  CHECK_THROWS_AS(g2_from_counts(narrow), Error);
}

TEST_CASE("property: g2 is rate invariant while sigma shrinks as 1/sqrt(scale)") {
  gen::for_all(81, 30, [](gen::Rng& r, int) {
    const double c = r.uniform(50.0, 5000.0), a = r.uniform(10.0, 1000.0);
    const int scale = r.integer(2, 50);
    CoincidenceRecord base = record(std::round(c), std::round(a), 100.0);
    CoincidenceRecord big = base;
    big.acquisition *= scale;
    for (auto& n : big.counts) n *= scale;
    const auto g1 = g2_from_counts(base), g2 = g2_from_counts(big);
    CHECK(g2.value == doctest::Approx(g1.value).epsilon(1e-12));
    CHECK(g2.sigma == doctest::Approx(g1.sigma / std::sqrt(scale)).epsilon(1e-12));
  });
}

TEST_CASE("witness with the published inputs") {
  const auto w = witness({4.54, 0.30}, {0.5117, 0.0119}, {0.5130, 0.0121});
  const double v = 0.5 * (0.5117 + 0.5130);
  CHECK(w.w == doctest::Approx(1.0 / 6.54 - 0.5 * v).epsilon(1e-12));
  CHECK(std::abs(w.w + 0.1033) < 0.001);
  const double sv = 0.5 * std::sqrt(0.0119 * 0.0119 + 0.0121 * 0.0121);
  CHECK(w.sigma_w == doctest::Approx(std::sqrt(std::pow(0.30 / (6.54 * 6.54), 2) + std::pow(0.5 * sv, 2))).epsilon(1e-12));
  CHECK(std::abs(w.sigma_w / 0.0092 - 1.0) < 0.15);
  CHECK(std::abs(w.w) / 0.0092 > 11.0);

  CHECK(witness({2.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}).w == doctest::Approx(0.25));
  CHECK(witness({1e12, 0.0}, {0.0, 0.0}, {0.0, 0.0}).w > 0.0);
  CHECK_THROWS_AS(witness({0.0, 0.1}, {0.5, 0.01}, {0.5, 0.01}), Error);
  CHECK_THROWS_AS(witness({4.0, 0.1}, {1.5, 0.01}, {0.5, 0.01}), Error);
}

TEST_CASE("property: witness is decreasing in g2 and V with matching finite differences") {
  gen::for_all(82, 200, [](gen::Rng& r, int) {
    const double g = r.uniform(0.5, 20.0), v = r.uniform(0.05, 0.95);
    auto W = [](double gg, double vv) { return witness({gg, 0.0}, {vv, 0.0}, {vv, 0.0}).w; };
    const double h = 1e-6;
    const double dg = (W(g + h, v) - W(g - h, v)) / (2.0 * h);
    const double dv = (W(g, v + h) - W(g, v - h)) / (2.0 * h);
    CHECK(dg < 0.0);
    CHECK(dv < 0.0);
    CHECK(dg == doctest::Approx(-1.0 / ((g + 2.0) * (g + 2.0))).epsilon(1e-6));
    CHECK(dv == doctest::Approx(-0.5).epsilon(1e-6));
    // Separable boundary: V = 2 / (g2 + 2) gives W = 0.
    const double vb = 2.0 / (g + 2.0);
    if (vb <= 1.0) {
      CHECK(std::abs(W(g, vb)) < 1e-15);
      CHECK(W(g, 0.999 * vb) >= 0.0);
    }
  });
}

TEST_CASE("Franson fringe model and seeded sampling") {
  FransonParams flat{100.0, 0.0, 0.3, 0.0};
  CHECK(franson_model(0.0, flat) == franson_model(2.0, flat));
  FransonParams p{100.0, 0.512, 0.3, 0.0};
  const double hi = franson_model(0.3, p), lo = franson_model(0.3 + 3.141592653589793, p);
  CHECK((hi - lo) / (hi + lo) == doctest::Approx(0.512).epsilon(1e-12));

  std::vector<double> phases;
  for (int i = 0; i < 24; ++i) phases.push_back(2.0 * 3.141592653589793 * i / 24.0);
  CHECK_THROWS_AS(sample_fringe(phases, p, std::nullopt), Error);
  const auto a = sample_fringe(phases, p, 7);
  const auto b = sample_fringe(phases, p, 7);
  CHECK(a == b);

  FransonParams strong{400.0, 0.512, 0.3, 0.0};
  const auto counts = sample_fringe(phases, strong, 2024);
  std::vector<double> y(counts.begin(), counts.end()), s;
  for (double c : y) s.push_back(std::sqrt(std::max(c, 1.0)));
  const auto r = fit::fit({fit::fringe(), phases, y, s, {350.0, 0.4, 0.0}, std::nullopt});
  const auto vis = fit::visibility(r);
  CHECK(std::abs(vis.value - 0.512) <= 3.0 * vis.sigma);
}

TEST_CASE("heralded efficiency") {
  const auto ref = record(10000, 100);
  const auto same = heralded_efficiency(ref, ref);
  CHECK(same.value == doctest::Approx(1.0));

  const auto stored = record(0.086 * 9900 + 100, 100);
  const auto h = heralded_efficiency(stored, ref);
  CHECK(h.value == doctest::Approx(0.086).epsilon(1e-3));
  CHECK(h.sigma > 0.0);
  CHECK(h.sigma < 0.01);

  // Different acquisition times are normalized.
  const auto stored_long = record(2.0 * (0.086 * 9900 + 100), 200, 7200.0);
  CHECK(heralded_efficiency(stored_long, ref).value == doctest::Approx(0.086).epsilon(1e-3));

  const auto empty = record(0, 0);
  const auto z = heralded_efficiency(empty, ref);
  CHECK(z.value == 0.0);
  CHECK(z.one_sided);
  CHECK(z.sigma > 0.0);

  CHECK_THROWS_AS(heralded_efficiency(ref, empty), Error);
}

TEST_CASE("coincidence record validation") {
  auto r = record(10, 5);
  r.counts[0] = -1;
  CHECK_THROWS_AS(validate(r), Error);
  auto w = record(10, 5);
  w.coincidence_window = 0.0;
  CHECK_THROWS_AS(validate(w), Error);
}
