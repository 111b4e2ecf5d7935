#pragma once

#include <vector>

#include "sforge/design_space.hpp"
#include "sforge/rng.hpp"

namespace sforge {

// Separable natural evolution strategy: a diagonal Gaussian search
// distribution updated from reward ranks only.
struct SnesState {
  Vec mu;
  Vec sigma;  // componentwise > 0
  double eta_mu = 1.0;
  double eta_sigma = 0.0;
  int generation = 0;
};

// mu at the box midpoint, sigma at a quarter of each axis span (floored at
// 1e-12 so degenerate axes keep the state valid), standard learning-rate
// defaults eta_mu = 1 and eta_sigma = (3 + ln d) / (5 sqrt d).
SnesState make_snes_state(const DesignSpace& space);

struct SnesSample {
  std::vector<Vec> z;  // projected candidates, ready for evaluation
  std::vector<Vec> s;  // raw standard-normal draws behind each candidate
};

// Candidates z_i = project(mu + sigma ∘ s_i); the raw s_i must be handed
// back to snes_tell unchanged.
SnesSample snes_ask(const SnesState& st, const DesignSpace& space, int pop, Rng& rng);

// Fitness-shaped utilities from descending-reward ranks, ties sharing their
// averaged rank: u_i = max(0, ln(pop/2 + 1) - ln(rank_i)), normalized to
// sum 1, shifted by -1/pop.
std::vector<double> snes_utilities(const std::vector<double>& rewards);

// Natural-gradient update
//   mu    += eta_mu * sigma ∘ sum_i u_i s_i
//   sigma ∘= exp(eta_sigma/2 * sum_i u_i (s_i^2 - 1)).
// Utilities depend on ranks only, so any strictly increasing transform of
// the rewards yields a bitwise-identical new state.
void snes_tell(SnesState& st, const std::vector<Vec>& s, const std::vector<double>& rewards);

}  // namespace sforge
