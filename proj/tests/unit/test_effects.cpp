#include <doctest.h>

#include <cmath>

#include "dive/bernstein_cdf.hpp"
#include "dive/effects.hpp"
#include "dive/errors.hpp"
#include "dive/scm_sim.hpp"
#include "dive/special.hpp"

using namespace dive;
using doctest::Approx;

namespace {

// Normal location family restricted to a common support; quantile by closed form.
struct Shifted {
  double mu;
  double lo = -12;
  double hi = 12;
  double lower() const { return lo; }
  double upper() const { return hi; }
  double cdf(double y) const { return normal_cdf(std::clamp(y, lo, hi) - mu); }
  double quantile(double tau) const { return mu + normal_quantile(tau); }
};

struct Uniform01 {
  double lower() const { return 0; }
  double upper() const { return 1; }
  double cdf(double y) const { return std::clamp(y, 0.0, 1.0); }
  double quantile(double t) const { return t; }
};

ParametricCDF fitted_like(double lo, double hi) {
  CdfFamily fam{ResponseScaler(-5, 5), LinkFunction(), 15};
  return fam.make(fam.ramp(lo, hi).gamma);
}

}  // namespace

static_assert(CdfOnSupport<ParametricCDF>);
static_assert(CdfOnSupport<ScenarioCdf>);

TEST_CASE("grids") {
  const auto g = linear_grid(-1, 1, 5);
  CHECK(g == std::vector<double>{-1, -0.5, 0, 0.5, 1});
  CHECK(default_y_grid(0, 2).size() == 201);
  const auto t = default_tau_grid();
  CHECK(t.size() == 91);
  CHECK(t.front() == Approx(0.05));
  CHECK(t.back() == Approx(0.95));
  CHECK(t[25] == Approx(0.30));
}

TEST_CASE("identical cdfs give null effects") {
  const auto F = fitted_like(-2, 2);
  const auto grid = default_y_grid(F.lower(), F.upper());
  for (const auto& c : {dte(F, F, grid), logit_ce(F, F, grid)})
    for (const auto& v : c.values) CHECK(*v == 0.0);
  for (const auto& v : qte(F, F, default_tau_grid()).values) CHECK(*v == 0.0);
  for (const auto& v : dok(F, F, grid).values)
    if (v) CHECK(std::abs(*v) < 1e-6);
  CHECK(ace(F, F) == 0.0);
}

TEST_CASE("scenario-1 dte at y = -6") {
  const ScenarioCdf f0(Scenario::S1, 0, -60, 60), f1(Scenario::S1, 1, -60, 60);
  const auto c = dte(f0, f1, {-6.0});
  CHECK(*c.values[0] == Approx(expit(-2.0 / 3) - expit(2.0 / 3)).epsilon(1e-12));
  CHECK(*c.values[0] == Approx(-0.3215).epsilon(1e-4));
}

TEST_CASE("location shift") {
  const Shifted f0{0.0}, f1{0.7};
  for (const auto& v : qte(f0, f1, default_tau_grid()).values) CHECK(*v == Approx(0.7).epsilon(1e-4));
  const auto dk = dok(f0, f1, linear_grid(-3, 3, 61));
  for (const auto& v : dk.values) CHECK(*v == Approx(-0.7).epsilon(1e-4));
  CHECK(ace(f0, f1) == Approx(0.7).epsilon(1e-3));
}

TEST_CASE("proportional odds pair has constant logit effect") {
  struct Odds {
    double c;
    double lower() const { return -10; }
    double upper() const { return 10; }
    double cdf(double y) const { return expit(y + c); }
    double quantile(double t) const { return logit(t) - c; }
  };
  const auto curve = logit_ce(Odds{0.0}, Odds{-1.3}, linear_grid(-5, 5, 41));
  for (const auto& v : curve.values) CHECK(*v == Approx(-1.3).epsilon(1e-6));
}

TEST_CASE("logit effect of the scenario truths") {
  // both S3 arms are expit((softplus^-1(y) - c_d) / 6): proportional odds with log-odds ratio (18 - 26) / 6
  const ScenarioCdf s0(Scenario::S3, 0, 1.0, 60), s1(Scenario::S3, 1, 1.0, 60);
  for (const auto& v : logit_ce(s0, s1, linear_grid(10, 40, 31)).values) CHECK(*v == Approx(-4.0 / 3).epsilon(1e-9));
  // S4 arms differ in scale, so the log-odds ratio varies with y
  const ScenarioCdf c0(Scenario::S4, 0, -60, 60), c1(Scenario::S4, 1, -60, 60);
  const auto c = logit_ce(c0, c1, linear_grid(-20, 20, 41));
  double lo = 1e9, hi = -1e9;
  for (const auto& v : c.values) {
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
  }
  CHECK(hi - lo > 0.1);
}

TEST_CASE("uniform mean") {
  CHECK(interventional_mean(Uniform01{}) == Approx(0.5).epsilon(1e-12));
  CHECK(ace(Uniform01{}, Uniform01{}) == 0.0);
}

TEST_CASE("dok and qte duality and sign coherence on fitted cdfs") {
  const auto f0 = fitted_like(-2.0, 2.5);
  const auto f1 = fitted_like(-2.6, 1.9);
  const auto taus = default_tau_grid();
  const auto q = qte(f0, f1, taus);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double y = f1.quantile(taus[k]);
    const auto dk = dok(f0, f1, {y});
    REQUIRE(dk.values[0].has_value());
    CHECK(std::abs(*dk.values[0] + *q.values[k]) < 1e-5);
  }
  for (double y : linear_grid(-4, 4, 41)) {
    const double d = *dte(f0, f1, {y}).values[0];
    const double tau = f1.cdf(y);
    if (std::abs(d) < 1e-9 || !detail::in_attained_range(f0, tau)) continue;
    const double qv = *qte(f0, f1, {tau}).values[0];
    CHECK((qv > 0) == (d < 0));
  }
  CHECK(std::abs(ace(f0, f1, 512) - ace(f0, f1, 4096)) < 1e-4);
}

TEST_CASE("range guards") {
  const auto f0 = fitted_like(-1.0, 1.0);  // attains roughly (0.16, 0.84)
  const auto f1 = fitted_like(-3.0, 3.0);
  CHECK_THROWS_AS(qte(f0, f1, {0.01, 0.5}), RangeError);
  const auto dk = dok(f0, f1, linear_grid(f1.lower(), f1.upper(), 21));
  CHECK_FALSE(dk.values.front().has_value());
  CHECK_FALSE(dk.values.back().has_value());
  CHECK(dk.values[10].has_value());
  const ParametricCDF flat(ResponseScaler(-5, 5), LinkFunction(), MonotoneCoefficients(std::vector<double>(4, 0.0)));
  const auto other = fitted_like(-1, 1);
  CHECK_THROWS(qte(flat, other, {0.5}));
  const auto elsewhere = CdfFamily{ResponseScaler(-4, 5), LinkFunction(), 15}.make(std::vector<double>(16, 0.1));
  CHECK_THROWS_AS(dte(f0, elsewhere, {0.0}), DomainError);
  CHECK_THROWS_AS(dte(f0, f1, {0.0, 0.0}), DomainError);
}

TEST_CASE("dte is bounded") {
  const auto f0 = fitted_like(-3.0, 0.0), f1 = fitted_like(0.0, 3.0);
  for (const auto& v : dte(f0, f1, default_y_grid(-5, 5)).values) CHECK(std::abs(*v) <= 1.0);
  CHECK(parse_effect_kind("logitce") == EffectKind::logit_ce);
  CHECK(to_string(EffectKind::qte) == "qte");
}
