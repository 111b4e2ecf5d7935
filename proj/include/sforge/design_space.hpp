#pragma once

#include <vector>

#include "sforge/rng.hpp"

namespace sforge {

using Vec = std::vector<double>;

// Ordered-gap constraint: z[i] + m <= z[j].  Models cut lines that must not
// cross (with clearance m).
struct Margin {
  int i = 0, j = 0;
  double m = 0.0;
};

// Mirror constraint: z[dst] is always a copy of z[src].  Lets a space expose
// fewer free parameters while keeping its native dimensionality.
struct Tie {
  int src = 0, dst = 0;
};

struct DesignSpace {
  int dim = 0;
  Vec lower, upper;
  std::vector<Margin> margins;
  std::vector<Tie> ties;
};

inline constexpr double kFeasTol = 1e-9;

// Validates invariants (bounds ordered, indices in range, feasible region
// non-empty) and returns the finished space.  Throws ConfigError.
DesignSpace make_space(Vec lower, Vec upper, std::vector<Margin> margins = {},
                       std::vector<Tie> ties = {});

bool is_feasible(const DesignSpace& space, const Vec& z);

// Maps z to a nearby feasible point: ties, clamp to box, then split each
// violated margin symmetrically, repeating up to 32 passes.  Feasible input
// is returned unchanged (bitwise).
Vec project(const DesignSpace& space, const Vec& z);

// Componentwise uniform over the box, then projected.
Vec sample_uniform(const DesignSpace& space, Rng& rng);

Vec midpoint(const DesignSpace& space);

}  // namespace sforge
