#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sforge/design_space.hpp"

namespace sforge {

enum class TrialSource { Explore, Exploit, Random, Grid, Snes };

const char* to_string(TrialSource s);
TrialSource trial_source_from_string(const std::string& s);

// One reward evaluation.  wall_ms records evaluation latency for hardware
// oracles; synthetic oracles always log 0 so replays stay byte-identical.
struct Trial {
  int index = 0;
  Vec design;
  double reward = 0.0;
  TrialSource source = TrialSource::Random;
  uint64_t rng_seed = 0;
  int64_t wall_ms = 0;
};

struct TrialLog {
  std::vector<Trial> trials;
  DesignSpace space;
  std::string oracle_name;
  std::string method;
  uint64_t master_seed = 0;
};

// Throws InvariantError if indices are not consecutive from 1, a reward is
// non-finite, or a design is infeasible in the log's space.
void validate(const TrialLog& log);

// First trial achieving the maximum reward; throws ConfigError on an empty
// log.
const Trial& best_trial(const TrialLog& log);

// Cumulative max of the reward sequence, index-aligned with trials.
Vec running_best(const TrialLog& log);

// JSON Lines round-trip: one header line (space, oracle_name, method,
// master_seed), then one line per trial.  Floats carry 17 significant digits
// so values survive bit exactly.
std::string to_jsonl(const TrialLog& log);
TrialLog trial_log_from_jsonl(const std::string& text);

std::string jsonl_header_line(const TrialLog& log);
std::string jsonl_trial_line(const Trial& t);

}  // namespace sforge
