#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tsig/error.hpp"
#include "tsig/heat_kernel.hpp"
#include "tsig/signature.hpp"

using namespace tsig;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("heat_kernel") {

TEST_CASE("default grid") {
  const std::vector<double> t = default_heat_grid();
  REQUIRE(t.size() == 12);
  CHECK(t.front() == doctest::Approx(0.05));
  CHECK(t[2] == doctest::Approx(0.1));
  CHECK(t.back() == doctest::Approx(0.05 * std::pow(2.0, 5.5)));
}

TEST_CASE("both traces match the theta-function product for diagonal metrics") {
  const std::vector<double> diag = {1.3, 0.8};
  RMat theta(2, 2);
  theta << 0.0, 0.0, 0.25, 0.6;
  const FlatMetric g(fixtures::diagonal({1.3, 0.8}));
  const std::vector<double> t = {0.05, 0.2, 0.7};
  for (bool functions_only : {false, true}) {
    const HeatTrace a = heat_trace_eigen(g, FlatBundle(theta), FluxForm(2), t, 9, HeatGrading::None, functions_only);
    const HeatTrace b = heat_trace_images(g, FlatBundle(theta), t, functions_only);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double ref = oracle::heat_trace_diagonal(diag, theta, t[i], functions_only);
      CHECK(std::abs(a.values[i] - ref) < 1e-12 * ref);
      CHECK(std::abs(b.values[i] - ref) < 1e-12 * ref);
      CHECK(a.tail_bound[i] <= 1e-14);
    }
  }
}

TEST_CASE("traces are positive and decreasing in t") {
  const HeatTrace h = heat_trace_eigen(FlatMetric::identity(3), FlatBundle::trivial(3), fixtures::flux123(3, 0.5),
                                       default_heat_grid(), 7);
  for (std::size_t i = 1; i < h.values.size(); ++i) {
    CHECK(h.values[i] > 0.0);
    CHECK(h.values[i] < h.values[i - 1]);
  }
}

TEST_CASE("truncation too small is reported") {
  CHECK(code_of([] {
          (void)heat_trace_eigen(FlatMetric::identity(2), FlatBundle::trivial(2), FluxForm(2), {0.01}, 1);
        }) == ErrorCode::TailTooLarge);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(heat_trace_images(FlatMetric::identity(1), FlatBundle::trivial(1), {0.2, 0.1}), Error);
  CHECK_THROWS_AS(heat_trace_images(FlatMetric::identity(1), FlatBundle::trivial(1), {}), Error);
  CHECK_THROWS_AS(heat_trace_images(FlatMetric::identity(1), FlatBundle::trivial(1), {-1.0}), Error);
}

TEST_CASE("alpha0 recovers the constant of a synthetic expansion") {
  const std::vector<double> t = default_heat_grid();
  std::vector<double> v;
  for (double s : t) v.push_back(3.0 / (s * std::sqrt(s)) + 7.0 - 0.25 * s);
  const Alpha0Result r = alpha0_extract(t, v, 3);
  CHECK(r.alpha0 == doctest::Approx(7.0).epsilon(1e-8));
  CHECK(r.residual < 1e-10);
  CHECK(r.powers.front() == -3);
  CHECK(r.powers.back() == 2);
}

TEST_CASE("alpha0 refuses an ill-conditioned design") {
  CHECK(code_of([] { (void)alpha0_extract({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}, 3); }) == ErrorCode::IllConditionedFit);
}

TEST_CASE("tau supertrace of a flat T^2 has no constant term") {
  const HeatTrace s = heat_trace_eigen(FlatMetric::identity(2), FlatBundle::trivial(2), FluxForm(2),
                                       default_heat_grid(), 8, HeatGrading::Tau);
  const Alpha0Result r = alpha0_extract(s.t, s.values, 2);
  CHECK(std::abs(r.alpha0) < 1e-8);
}

TEST_CASE("McKean-Singer with and without flux") {
  const std::vector<double> t = default_heat_grid();
  const McKeanSingerReport a =
      mckean_singer_check(FlatMetric::identity(3), FlatBundle::trivial(3), fixtures::flux123(3, 0.5), t, 7);
  CHECK(a.holds);
  CHECK(a.euler == 0);
  CHECK(a.variance < 1e-8);
  const McKeanSingerReport b =
      mckean_singer_check(FlatMetric::identity(2), FlatBundle::trivial(2, 2), FluxForm(2), t, 8);
  CHECK(b.euler == 0);
  CHECK(std::abs(b.mean) < 1e-10);
}

TEST_CASE("image remainder decays at the shortest closed geodesic") {
  const FlatMetric g(fixtures::diagonal({0.5, 1.0}));
  const ImageRemainderFit f = image_remainder_fit(g, FlatBundle::trivial(2));
  CHECK(f.required_decay == doctest::Approx(0.125));
  CHECK(f.bounded);
  CHECK(f.decay == doctest::Approx(f.required_decay).epsilon(1e-3));
}

}  // TEST_SUITE
