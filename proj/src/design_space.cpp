#include "sforge/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sforge/error.hpp"

namespace sforge {

static void check_dim(const DesignSpace& space, const Vec& z) {
  if (static_cast<int>(z.size()) != space.dim)
    throw ConfigError("design has dimension " + std::to_string(z.size()) +
                      ", space expects " + std::to_string(space.dim));
}

DesignSpace make_space(Vec lower, Vec upper, std::vector<Margin> margins,
                       std::vector<Tie> ties) {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("bounds must be non-empty and equally sized");
  DesignSpace s;
  s.dim = static_cast<int>(lower.size());
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.margins = std::move(margins);
  s.ties = std::move(ties);
  for (int k = 0; k < s.dim; ++k) {
    if (!std::isfinite(s.lower[k]) || !std::isfinite(s.upper[k]))
      throw ConfigError("non-finite bound");
    // Degenerate axes (lower == upper) are allowed so point spaces work.
    if (s.lower[k] > s.upper[k]) throw ConfigError("lower bound above upper bound");
  }
  auto in_range = [&](int k) { return k >= 0 && k < s.dim; };
  for (const Margin& mg : s.margins) {
    if (!in_range(mg.i) || !in_range(mg.j) || mg.i == mg.j)
      throw ConfigError("margin references invalid indices");
    if (mg.m < 0.0) throw ConfigError("negative margin");
  }
  std::set<int> dsts;
  for (const Tie& t : s.ties) {
    if (!in_range(t.src) || !in_range(t.dst) || t.src == t.dst)
      throw ConfigError("tie references invalid indices");
    if (!dsts.insert(t.dst).second) throw ConfigError("duplicate tie destination");
  }
  for (const Tie& t : s.ties)
    if (dsts.count(t.src)) throw ConfigError("tie source is another tie's destination");
  // Non-empty feasibility check: the box midpoint must project successfully.
  project(s, midpoint(s));
  return s;
}

bool is_feasible(const DesignSpace& space, const Vec& z) {
  check_dim(space, z);
  for (int k = 0; k < space.dim; ++k) {
    if (!std::isfinite(z[k])) return false;
    if (z[k] < space.lower[k] || z[k] > space.upper[k]) return false;
  }
  for (const Margin& mg : space.margins)
    if (z[mg.i] + mg.m - z[mg.j] > kFeasTol) return false;
  for (const Tie& t : space.ties)
    if (z[t.dst] != z[t.src]) return false;
  return true;
}

Vec project(const DesignSpace& space, const Vec& z) {
  check_dim(space, z);
  for (double c : z)
    if (!std::isfinite(c)) throw ConfigError("cannot project non-finite design");
  if (is_feasible(space, z)) return z;

  Vec p = z;
  auto clamp_box = [&] {
    for (int k = 0; k < space.dim; ++k)
      p[k] = std::clamp(p[k], space.lower[k], space.upper[k]);
  };
  for (int pass = 0; pass < 32; ++pass) {
    for (const Tie& t : space.ties) p[t.dst] = p[t.src];
    clamp_box();
    for (const Margin& mg : space.margins) {
      const double v = p[mg.i] + mg.m - p[mg.j];
      if (v > 0.0) {
        p[mg.i] -= v / 2.0;
        p[mg.j] += v / 2.0;
      }
    }
    clamp_box();
    if (is_feasible(space, p)) return p;
  }
  throw ConfigError("projection did not converge; feasible region empty?");
}

Vec sample_uniform(const DesignSpace& space, Rng& rng) {
  Vec u(space.dim);
  for (int k = 0; k < space.dim; ++k)
    u[k] = rng.uniform(space.lower[k], space.upper[k]);
  return project(space, u);
}

Vec midpoint(const DesignSpace& space) {
  Vec m(space.dim);
  for (int k = 0; k < space.dim; ++k)
    m[k] = 0.5 * (space.lower[k] + space.upper[k]);
  return m;
}

}  // namespace sforge
