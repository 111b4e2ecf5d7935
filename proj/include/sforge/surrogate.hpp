#pragma once

#include <utility>

#include "sforge/mlp.hpp"
#include "sforge/trial.hpp"

namespace sforge {

struct InverseDesignConfig {
  int steps = 100;       // ascent steps per restart
  double step_size = 0.01;
  int restarts = 16;
};

Dataset dataset_from_log(const TrialLog& history);

// Fresh fit: weights drawn from rng, then exactly cfg.iters minibatch steps
// (the same rng drives batch sampling).
Model fit_surrogate(const TrialLog& history, const TrainConfig& cfg, Rng& rng);

// Warm fit: starts from an existing model (checkpoint); its reward transform,
// if any, is kept.  Throws DimensionError on input-width mismatch.
Model fit_surrogate_warm(const TrialLog& history, const TrainConfig& cfg,
                         const Model& warm, Rng& rng);

// Projected gradient ascent on the surrogate from cfg.restarts uniform
// starts, cfg.steps steps each; every trajectory tracks its best-seen
// iterate by surrogate value and the best restart wins.  All restarts
// advance in lockstep so each step is one batched forward/backward.
Vec inverse_design(const Model& m, const DesignSpace& space,
                   const InverseDesignConfig& cfg, Rng& rng);

// One uniform draw decides: explore (uniform sample) with probability
// epsilon, otherwise fit on the full history and invert.  An empty history
// always explores.  warm, when non-null, seeds exploit fits.
std::pair<Vec, TrialSource> propose_next(const TrialLog& history, const DesignSpace& space,
                                         const TrainConfig& train_cfg,
                                         const InverseDesignConfig& inv_cfg, double epsilon,
                                         Rng& rng, const Model* warm = nullptr);

}  // namespace sforge
