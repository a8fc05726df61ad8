#include "dive/scm_sim.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include "dive/rng.hpp"
#include "dive/special.hpp"

namespace dive {

Scenario parse_scenario(std::string_view name) {
  if (name == "S1" || name == "S1-linear") return Scenario::S1;
  if (name == "S2" || name == "S2-heteroscedastic") return Scenario::S2;
  if (name == "S3" || name == "S3-nonlinear") return Scenario::S3;
  if (name == "S4" || name == "S4-crossing") return Scenario::S4;
  if (name == "EX1" || name == "EX1-rank-example") return Scenario::EX1;
  if (name == "LIN" || name == "LIN-gaussian") return Scenario::LIN;
  throw DomainError("unknown scenario: " + std::string(name));
}

std::string_view to_string(Scenario scn) {
  switch (scn) {
    case Scenario::S1: return "S1";
    case Scenario::S2: return "S2";
    case Scenario::S3: return "S3";
    case Scenario::S4: return "S4";
    case Scenario::EX1: return "EX1";
    case Scenario::LIN: return "LIN";
  }
  return "S1";
}

namespace {

struct Draw {
  double z;
  int d;
  double y0;
  double y1;
};

// One observation with both potential outcomes; every scenario consumes a
// fixed number of uniforms so datasets are stable under code changes elsewhere.
Draw draw_one(Scenario scn, Rng& rng) {
  Draw o{};
  switch (scn) {
    case Scenario::S1:
    case Scenario::S2:
    case Scenario::S3:
    case Scenario::S4: {
      const double z = rng.logistic();
      const double h = rng.logistic();
      const double nd = rng.logistic();
      const double ny = rng.logistic();
      o.z = z;
      o.d = 4 * z + 4 * h >= nd ? 1 : 0;
      if (scn == Scenario::S1) {
        o.y0 = -10 + 6 * h;
        o.y1 = -2 + 6 * h;
      } else if (scn == Scenario::S2) {
        o.y0 = 6 * h + h * ny;
        o.y1 = 16 + 6 * h + h * ny;
      } else if (scn == Scenario::S3) {
        o.y0 = softplus(18 + 6 * h);
        o.y1 = softplus(26 + 6 * h);
      } else {
        o.y0 = 6 * h;
        o.y1 = 9 * h - 6;
      }
      break;
    }
    case Scenario::EX1: {
      const double z = rng.normal();
      const double h = rng.normal();
      const double nd = rng.uniform();
      const double ny = rng.normal();
      o.z = z;
      o.d = nd >= 0.2 + 0.6 * (h >= 0 ? 1.0 : 0.0) ? 1 : 0;
      o.y0 = h - ny;
      o.y1 = h - 1 + ny;
      break;
    }
    case Scenario::LIN: {
      const double z = rng.normal();
      const double h = rng.normal();
      const double nd = rng.normal();
      const double ny = rng.normal();
      o.z = z;
      o.d = 2 * z + h + nd >= 0 ? 1 : 0;
      o.y0 = kLinMu0 + h + ny;
      o.y1 = kLinMu1 + h + ny;
      break;
    }
  }
  return o;
}

}  // namespace

IVDataset sample(Scenario scn, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample: n must be >= 1");
  const Rng root(seed);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = root.substream(attempt);
    std::vector<double> z(n);
    std::vector<int> d(n);
    std::vector<double> y(n);
    std::size_t treated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Draw o = draw_one(scn, rng);
      z[i] = o.z;
      d[i] = o.d;
      y[i] = o.d == 0 ? o.y0 : o.y1;
      treated += static_cast<std::size_t>(o.d);
    }
    const bool both_arms = treated > 0 && treated < n;
    if (both_arms || (n < 20 && attempt >= 1000)) {
      return IVDataset(Instrument::scalar(std::move(z), InstrumentType::continuous), std::move(d), std::move(y));
    }
  }
}

std::vector<double> sample_interventional(Scenario scn, int d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) {
    const Draw o = draw_one(scn, rng);
    v = d == 0 ? o.y0 : o.y1;
  }
  return y;
}

namespace {

// E_H[expit((y - loc - 6H) / |H|)] for H ~ logistic, integrated over the
// probability scale u = expit(H) and split at H = 0 where the scale vanishes.
double s2_cdf(double y, double loc) {
  using Quad = boost::math::quadrature::gauss<double, 128>;
  auto f = [&](double u) {
    const double h = logit(u);
    return expit((y - loc - 6 * h) / std::abs(h));
  };
  return Quad::integrate(f, 0.0, 0.5) + Quad::integrate(f, 0.5, 1.0);
}

}  // namespace

double true_cdf(Scenario scn, int d, double y) {
  if (d != 0 && d != 1) throw DomainError("true_cdf: d must be 0 or 1");
  switch (scn) {
    case Scenario::S1: return d == 0 ? expit((y + 10) / 6) : expit((y + 2) / 6);
    case Scenario::S2: return s2_cdf(y, d == 0 ? 0.0 : 16.0);
    case Scenario::S3:
      if (y <= 0) return 0.0;
      return expit((softplus_inv(y) - (d == 0 ? 18.0 : 26.0)) / 6);
    case Scenario::S4: return d == 0 ? expit(y / 6) : expit((y + 6) / 9);
    case Scenario::EX1: return d == 0 ? normal_cdf(y / std::numbers::sqrt2) : normal_cdf((1 + y) / std::numbers::sqrt2);
    case Scenario::LIN: return normal_cdf((y - (d == 0 ? kLinMu0 : kLinMu1)) / std::numbers::sqrt2);
  }
  return 0.0;
}

double true_cdf_mc(Scenario scn, int d, double y, std::size_t draws, std::uint64_t seed) {
  const auto ys = sample_interventional(scn, d, draws, seed);
  const auto hits = std::count_if(ys.begin(), ys.end(), [y](double v) { return v <= y; });
  return static_cast<double>(hits) / static_cast<double>(draws);
}

double observational_cdf_mc(Scenario scn, int d, double y, std::size_t draws, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t arm = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const Draw o = draw_one(scn, rng);
    if (o.d != d) continue;
    ++arm;
    if ((d == 0 ? o.y0 : o.y1) <= y) ++hits;
  }
  return arm == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(arm);
}

double ScenarioCdf::quantile(double tau) const {
  if (!(tau >= cdf(lower_) && tau <= cdf(upper_))) throw RangeError("quantile: tau outside attained range");
  double lo = lower_;
  double hi = upper_;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dive
