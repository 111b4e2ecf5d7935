#pragma once

#include <string>
#include <vector>

#include "sforge/campaign.hpp"

namespace sforge {

// Type-7 sample quantiles (linear interpolation), the convention behind the
// summary statistics.
double quantile(Vec values, double p);
double median(Vec values);
double iqr(Vec values);

struct CompareConfig {
  std::string oracle;  // selector
  std::vector<Method> methods = {Method::EpsGreedy, Method::Snes, Method::Random,
                                 Method::Grid};
  std::vector<uint64_t> seeds;
  CampaignConfig base;  // per-cell template; method and master_seed are overwritten
  int jobs = 1;
};

struct CompareResult {
  std::vector<TrialLog> logs;  // methods-major, seeds within
  std::string compare_csv;     // method,seed,trial_index,reward,running_best
  std::string summary_csv;     // method,median_best,iqr
};

// One campaign per (method, seed) cell; the listed seed is the cell's
// master seed so methods are compared pairwise on identical seeds.  Cells
// run concurrently up to jobs; output order is independent of scheduling.
CompareResult run_compare(const CompareConfig& cfg);

struct AdaptConfig {
  std::string checkpoint;  // pretrained model to warm-start from
  std::string oracle;      // adaptation target
  std::vector<uint64_t> seeds;
  CampaignConfig base;  // eps-greedy template; budget typically 50
  int jobs = 1;
};

struct AdaptResult {
  std::vector<TrialLog> warm;  // per seed
  std::vector<TrialLog> cold;
  std::string adapt_csv;  // mode,seed,trial_index,reward,running_best
};

// Warm-started vs cold-started campaigns on identical seeds.
AdaptResult run_adapt(const AdaptConfig& cfg);

}  // namespace sforge
