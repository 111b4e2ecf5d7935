#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sforge/oracles.hpp"
#include "sforge/surrogate.hpp"
#include "sforge/trial.hpp"

namespace sforge {

enum class Method { EpsGreedy, Random, Grid, Snes };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct CampaignConfig {
  int budget = 100;
  double epsilon = 0.25;
  TrainConfig train_cfg;
  InverseDesignConfig inv_cfg;
  Method method = Method::EpsGreedy;
  std::string warm_checkpoint;  // path to a prior model; empty = cold start
  std::vector<int> grid_shape;  // empty = per-dimension default
  int snes_pop = 5;
  int snes_gens = 20;
  uint64_t master_seed = 0;
};

void validate_config(const CampaignConfig& cfg, int dim);

// Trials a campaign actually consumes: snes_pop * snes_gens for SNES, the
// grid size capped at budget for grid, budget otherwise.
int effective_budget(const CampaignConfig& cfg, int dim);

// Grid presets matching the published per-dimension choices; other
// dimensions use the smallest uniform k with k^dim >= budget.
std::vector<int> default_grid_shape(int dim, int budget);

// Cartesian product of per-axis equally spaced points including both bounds
// (a size-1 axis sits at the midpoint), lexicographic with the last axis
// fastest, each point projected to feasibility, truncated to limit.
std::vector<Vec> grid_points(const DesignSpace& space, const std::vector<int>& shape,
                             int limit);

// Invoked right after each trial is appended; bundles use it to flush.
using TrialSink = std::function<void(const Trial&)>;

// Extends log to the campaign's effective budget.  Works both for fresh
// runs (empty log) and resume (partially filled log): per-trial seeds are
// derived from (master_seed, trial index) and SNES replays its generation
// draws from (master_seed, generation), reusing already-logged rewards, so
// a split run is bitwise identical to an uninterrupted one.
void continue_campaign(TrialLog& log, const OracleSpec& oracle, const CampaignConfig& cfg,
                       const TrialSink& sink = {});

TrialLog run_campaign(const OracleSpec& oracle, const CampaignConfig& cfg,
                      const TrialSink& sink = {});

}  // namespace sforge
