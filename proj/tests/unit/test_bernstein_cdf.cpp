#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "dive/bernstein_cdf.hpp"
#include "dive/errors.hpp"
#include "dive/special.hpp"

using namespace dive;
using doctest::Approx;

namespace {

ParametricCDF ramp_cdf(int order, double lo = -2.0, double hi = 2.0, LinkKind link = LinkKind::standard_normal) {
  CdfFamily fam{ResponseScaler(-3.0, 5.0), LinkFunction(link), order};
  return fam.make(fam.ramp(lo, hi).gamma);
}

}  // namespace

TEST_CASE("basis endpoints and midpoint") {
  auto b0 = bernstein_basis(0.0, 2);
  CHECK(b0 == std::vector<double>{1, 0, 0});
  auto b1 = bernstein_basis(1.0, 2);
  CHECK(b1 == std::vector<double>{0, 0, 1});
  auto bm = bernstein_basis(0.5, 2);
  CHECK(bm[0] == Approx(0.25).epsilon(1e-15));
  CHECK(bm[1] == Approx(0.5).epsilon(1e-15));
  CHECK(bm[2] == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("basis derivative endpoints") {
  auto d0 = bernstein_basis_derivative(0.0, 2);
  CHECK(d0[0] == Approx(-2));
  CHECK(d0[1] == Approx(2));
  CHECK(d0[2] == Approx(0));
  auto d1 = bernstein_basis_derivative(1.0, 2);
  CHECK(d1[0] == Approx(0));
  CHECK(d1[1] == Approx(-2));
  CHECK(d1[2] == Approx(2));
}

TEST_CASE("basis rejects bad arguments") {
  CHECK_THROWS_AS(bernstein_basis(-0.1, 3), DomainError);
  CHECK_THROWS_AS(bernstein_basis(1.1, 3), DomainError);
  CHECK_THROWS_AS(bernstein_basis(0.5, 0), DomainError);
  CHECK_THROWS_AS(bernstein_basis_derivative(0.5, 0), DomainError);
}

TEST_CASE("basis matches the closed-form polynomials and is a partition of unity") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> Mdist(1, 60);
  for (int rep = 0; rep < 1000; ++rep) {
    const double u = U(gen);
    const int M = Mdist(gen);
    const auto b = bernstein_basis(u, M);
    REQUIRE(b.size() == static_cast<std::size_t>(M + 1));
    double s = 0;
    for (int k = 0; k <= M; ++k) {
      CHECK(b[k] >= 0.0);
      CHECK(std::abs(b[k] - oracle::bernstein(M, k, u)) < 1e-12);
      s += b[k];
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("basis derivative matches central differences") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> U(0.01, 0.99);
  for (int rep = 0; rep < 200; ++rep) {
    const double u = U(gen);
    const int M = 1 + rep % 60;
    const auto d = bernstein_basis_derivative(u, M);
    const auto bp = bernstein_basis(u + 1e-6, M);
    const auto bm = bernstein_basis(u - 1e-6, M);
    double s = 0;
    for (int k = 0; k <= M; ++k) {
      CHECK(std::abs(d[k] - (bp[k] - bm[k]) / 2e-6) < 1e-6 * std::max(1.0, std::abs(d[k])));
      s += d[k];
    }
    CHECK(std::abs(s) < 1e-9);
  }
}

TEST_CASE("constant theta gives the link value everywhere") {
  const ResponseScaler sc(0.0, 1.0);
  ParametricCDF zero(sc, LinkFunction(), MonotoneCoefficients(std::vector<double>(6, 0.0)));
  ParametricCDF c(sc, LinkFunction(LinkKind::standard_logistic), MonotoneCoefficients(std::vector<double>(6, 1.3)));
  for (double y : {-1.0, 0.0, 0.3, 0.7, 1.0, 2.0}) {
    CHECK(zero.cdf(y) == Approx(0.5).epsilon(1e-14));
    CHECK(c.cdf(y) == Approx(expit(1.3)).epsilon(1e-14));
    if (y >= 0 && y <= 1) {
      CHECK(zero.pdf(y) == 0.0);
    }
  }
  CHECK_THROWS_AS(zero.quantile(0.5), DegenerateCdfError);
}

TEST_CASE("cdf is monotone and pdf integrates to the cdf increment") {
  for (auto link : {LinkKind::standard_normal, LinkKind::standard_logistic, LinkKind::min_extreme_value,
                    LinkKind::max_extreme_value}) {
    const auto F = ramp_cdf(12, -2.5, 1.5, link);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> Y(-4.0, 6.0);
    for (int rep = 0; rep < 1000; ++rep) {
      double a = Y(gen), b = Y(gen);
      if (a > b) std::swap(a, b);
      CHECK(F.cdf(a) <= F.cdf(b));
    }
    const double integral = oracle::trapezoid([&](double y) { return F.pdf(y); }, F.lower(), F.upper(), 2048);
    CHECK(std::abs(integral - (F.cdf(F.upper()) - F.cdf(F.lower()))) < 1e-6);
    for (double y = -2.9; y < 4.9; y += 0.37) CHECK(F.pdf(y) > 0.0);
    CHECK(F.cdf(F.lower()) > 0.0);
    CHECK(F.cdf(F.upper()) < 1.0);
  }
}

TEST_CASE("pdf outside the support is a domain error") {
  const auto F = ramp_cdf(5);
  CHECK_THROWS_AS(F.pdf(-3.5), DomainError);
  CHECK_THROWS_AS(F.pdf(5.1), DomainError);
}

TEST_CASE("link densities are consistent with their cdfs") {
  for (auto link : {LinkKind::standard_normal, LinkKind::standard_logistic, LinkKind::min_extreme_value,
                    LinkKind::max_extreme_value}) {
    const LinkFunction f(link);
    for (double x = -6; x <= 6; x += 0.5) {
      const double fd = (f.cdf(x + 1e-6) - f.cdf(x - 1e-6)) / 2e-6;
      CHECK(f.pdf(x) == Approx(fd).epsilon(1e-6));
      CHECK(std::log(f.pdf(x)) == Approx(f.log_pdf(x)).epsilon(1e-10));
      const double dl = (f.log_pdf(x + 1e-5) - f.log_pdf(x - 1e-5)) / 2e-5;
      CHECK(f.dlog_pdf(x) == Approx(dl).epsilon(1e-5));
    }
    CHECK(LinkFunction::parse(f.name()) == f);
  }
  CHECK(LinkFunction(LinkKind::min_extreme_value).cdf(0.3) == Approx(1 - std::exp(-std::exp(0.3))));
  CHECK(LinkFunction(LinkKind::max_extreme_value).cdf(0.3) == Approx(std::exp(-std::exp(-0.3))));
  CHECK_THROWS_AS(LinkFunction::parse("cauchy"), DomainError);
}

TEST_CASE("survival functions complement the cdfs and keep upper-tail precision") {
  for (auto link : {LinkKind::standard_normal, LinkKind::standard_logistic, LinkKind::min_extreme_value,
                    LinkKind::max_extreme_value}) {
    const LinkFunction f(link);
    for (double x = -4; x <= 4; x += 0.25) CHECK(std::abs(f.cdf(x) + f.sf(x) - 1.0) <= 1e-15);
  }
  // 40-digit reference values
  CHECK(LinkFunction(LinkKind::standard_normal).sf(10.0) == Approx(7.6198530241605261e-24).epsilon(1e-13));
  CHECK(LinkFunction(LinkKind::standard_normal).sf(8.3) == Approx(5.205569744890254e-17).epsilon(1e-13));
  CHECK(LinkFunction(LinkKind::standard_logistic).sf(40.0) == Approx(4.248354255291589e-18).epsilon(1e-13));
  CHECK(LinkFunction(LinkKind::min_extreme_value).sf(3.0) == Approx(1.8921786948382926e-9).epsilon(1e-12));
  CHECK(LinkFunction(LinkKind::max_extreme_value).sf(20.0) == Approx(2.0611536203143807e-9).epsilon(1e-13));
  // where cdf has rounded to 1, sf still orders the points
  const auto F = ramp_cdf(10, -2.0, 12.0);
  CHECK(F.cdf(4.9) == 1.0);
  CHECK(F.sf(4.95) < F.sf(4.9));
  CHECK(F.sf(0.5) == Approx(1.0 - F.cdf(0.5)).epsilon(1e-12));
}

TEST_CASE("quantile inverts the cdf") {
  const auto F = ramp_cdf(20, -1.8, 2.2);
  for (double y0 : {-2.5, -1.0, 0.0, 1.7, 4.2}) CHECK(F.quantile(F.cdf(y0)) == Approx(y0).epsilon(1e-6));
  for (int k = 1; k <= 99; ++k) {
    const double tau = k / 100.0;
    if (tau <= F.cdf(F.lower()) || tau >= F.cdf(F.upper())) continue;
    const double q = F.quantile(tau);
    CHECK(std::abs(F.cdf(q) - tau) <= 1e-8);
    CHECK(q >= F.lower());
    CHECK(q <= F.upper());
  }
  CHECK_THROWS_AS(F.quantile(F.cdf(F.lower()) / 2), RangeError);
  CHECK_THROWS_AS(F.quantile(0.5 * (1 + F.cdf(F.upper()))), RangeError);
}

TEST_CASE("constrain map") {
  SUBCASE("softplus inverse of e-1") {
    const auto c = constrain({{0.0, std::log(std::exp(1.0) - 1.0)}});
    CHECK(c.theta()[0] == 0.0);
    CHECK(c.theta()[1] == Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(c.clipped());
  }
  SUBCASE("underflowing increments stay strictly increasing") {
    const auto c = constrain({{0.0, -800.0, -900.0, -1e4}});
    CHECK(c.strictly_increasing());
    CHECK(c.theta()[1] > 0.0);
    CHECK(c.theta()[3] < 1e-9);
  }
  SUBCASE("round trip") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> g(8);
      for (double& v : g) v = N(gen);
      const auto c = constrain({g});
      REQUIRE_FALSE(c.clipped());
      const auto back = unconstrain(c);
      for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(back.gamma[k] - g[k]) < 1e-10);
    }
  }
  SUBCASE("clipping keeps entries inside the bound and flags it") {
    const auto c = constrain({{14.0, 3.0, 3.0}});
    CHECK(c.clipped());
    for (double t : c.theta()) CHECK(std::abs(t) < kDefaultBound);
  }
  SUBCASE("non-finite input") { CHECK_THROWS_AS(constrain({{0.0, NAN}}), DomainError); }
  SUBCASE("backward pass matches finite differences") {
    const std::vector<double> g{0.3, -0.4, 1.1, 0.2, -2.0};
    const std::vector<double> w{0.7, -1.2, 0.4, 2.0, -0.3};
    auto f = [&](const std::vector<double>& x) {
      const auto c = constrain({x});
      const auto th = c.theta();
      double s = 0;
      for (std::size_t k = 0; k < th.size(); ++k) s += w[k] * th[k];
      return s;
    };
    const auto grad = constrain_backward({g}, w);
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto xp = g, xm = g;
      xp[k] += 1e-6;
      xm[k] -= 1e-6;
      CHECK(grad[k] == Approx((f(xp) - f(xm)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("fitted index reproduces a logistic target") {
  // Bernstein operator: theta_k is the target index at the k-th node.
  const ResponseScaler sc(-40.0, 20.0);
  const int M = 30;
  std::vector<double> ys;
  for (int k = 0; k <= 400; ++k) ys.push_back(sc.unscale(k / 400.0));
  auto target = [](double y) { return normal_quantile(std::clamp(oracle::expit((y + 10) / 6), 1e-9, 1 - 1e-9)); };
  std::vector<double> theta(M + 1);
  for (int k = 0; k <= M; ++k) theta[k] = target(sc.unscale(static_cast<double>(k) / M));
  std::sort(theta.begin(), theta.end());
  for (double& t : theta) t = std::clamp(t, -14.0, 14.0);
  ParametricCDF F(sc, LinkFunction(), MonotoneCoefficients(theta));
  double worst = 0;
  for (double y = -30; y <= 10; y += 0.25) worst = std::max(worst, std::abs(F.cdf(y) - oracle::expit((y + 10) / 6)));
  CHECK(worst < 0.02);
}

TEST_CASE("default support pads the sample range") {
  const std::vector<double> y{1.0, 3.0, 2.0};
  const auto sc = ResponseScaler::from_sample(y);
  CHECK(sc.lower() == Approx(0.8));
  CHECK(sc.upper() == Approx(3.2));
  CHECK_THROWS_AS(ResponseScaler(1.0, 1.0), DomainError);
}
