#include "dive/effects.hpp"

#include <string>

namespace dive {

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::dte: return "dte";
    case EffectKind::qte: return "qte";
    case EffectKind::dok: return "dok";
    case EffectKind::logit_ce: return "logitce";
  }
  return "dte";
}

EffectKind parse_effect_kind(std::string_view name) {
  if (name == "dte") return EffectKind::dte;
  if (name == "qte") return EffectKind::qte;
  if (name == "dok") return EffectKind::dok;
  if (name == "logitce" || name == "logit_ce") return EffectKind::logit_ce;
  throw DomainError("unknown effect kind: " + std::string(name));
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw DomainError("linear_grid: need n >= 2 and hi > lo");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

std::vector<double> default_y_grid(double lower, double upper) { return linear_grid(lower, upper, 201); }

std::vector<double> default_tau_grid() {
  std::vector<double> g;
  for (int k = 5; k <= 95; ++k) g.push_back(k / 100.0);
  return g;
}

namespace detail {

void require_increasing(const std::vector<double>& grid) {
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw DomainError("effects: grid must be strictly increasing");
}

}  // namespace detail

}  // namespace dive
