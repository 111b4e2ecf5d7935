#pragma once

#include <functional>
#include <optional>
#include <string>

#include "sforge/campaign.hpp"
#include "sforge/checkpoint.hpp"

namespace sforge {

// On-disk campaign: a directory holding config.json, trials.jsonl and, for
// surrogate-driven runs, checkpoint.json (the model fit on the full log).
struct CampaignBundle {
  int schema_version = 1;
  std::string oracle;  // selector, e.g. "airplane5?noise=0.05"
  CampaignConfig config;
  TrialLog log;
  std::optional<Model> final_checkpoint;
};

std::string config_to_json(const CampaignBundle& b);
void config_from_json(const std::string& text, CampaignBundle& b);

// Cross-checks config against the log header and the checkpoint, and
// re-validates every core log invariant.
void validate_bundle(const CampaignBundle& b);

// Atomic: files land in <dir>.tmp which is swapped into place, so an
// interrupted save leaves any prior bundle at dir untouched.
void save_bundle(const CampaignBundle& b, const std::string& dir);
CampaignBundle load_bundle(const std::string& dir);

// Runs a fresh campaign with every trial flushed to dir/trials.jsonl as it
// completes (an oracle abort leaves a loadable partial bundle).  eps-greedy
// campaigns finish with a final surrogate fit, saved as checkpoint.json,
// seeded from its own stream of the master seed.
CampaignBundle run_bundle(const OracleSpec& oracle, const CampaignConfig& cfg,
                          const std::string& dir);

struct ResumeOverrides {
  std::optional<int> budget;
  std::optional<int> snes_gens;
};

// Continues an interrupted (or budget-extended) campaign in place; the
// completed trials.jsonl is byte-identical to an uninterrupted run's.
CampaignBundle resume_bundle(const std::string& dir, const ResumeOverrides& ovr = {});

namespace testing {
// Test seam: when set, invoked before each save_bundle stage ("config",
// "trials", "checkpoint", "commit"); throwing simulates a crash mid-save.
extern std::function<void(const std::string& stage)> bundle_fault_hook;
}  // namespace testing

}  // namespace sforge
