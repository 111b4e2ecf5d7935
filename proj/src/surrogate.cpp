#include "sforge/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "sforge/error.hpp"

namespace sforge {

Dataset dataset_from_log(const TrialLog& history) {
  Dataset ds;
  ds.n = static_cast<int>(history.trials.size());
  ds.d = history.space.dim;
  ds.X.reserve(static_cast<size_t>(ds.n) * ds.d);
  ds.y.reserve(ds.n);
  for (const Trial& t : history.trials) {
    if (static_cast<int>(t.design.size()) != ds.d)
      throw DimensionError("trial design width does not match the space");
    ds.X.insert(ds.X.end(), t.design.begin(), t.design.end());
    ds.y.push_back(t.reward);
  }
  return ds;
}

Model fit_surrogate(const TrialLog& history, const TrainConfig& cfg, Rng& rng) {
  Dataset ds = dataset_from_log(history);
  Model m = init_model(history.space.dim, cfg, rng);
  fit_adamw(m, ds, cfg, rng);
  return m;
}

Model fit_surrogate_warm(const TrialLog& history, const TrainConfig& cfg,
                         const Model& warm, Rng& rng) {
  Dataset ds = dataset_from_log(history);
  if (warm.dims.front() != history.space.dim)
    throw DimensionError("checkpoint input width does not match the space");
  Model m = warm;
  fit_adamw(m, ds, cfg, rng);
  return m;
}

Vec inverse_design(const Model& m, const DesignSpace& space,
                   const InverseDesignConfig& cfg, Rng& rng) {
  if (cfg.restarts < 1 || cfg.steps < 0 || cfg.step_size <= 0)
    throw ConfigError("inverse design needs restarts >= 1, steps >= 0, step_size > 0");
  const int K = cfg.restarts;
  const int d = space.dim;

  Vec Z(static_cast<size_t>(K) * d);
  for (int k = 0; k < K; ++k) {
    Vec z = sample_uniform(space, rng);
    std::copy(z.begin(), z.end(), Z.begin() + static_cast<size_t>(k) * d);
  }

  Vec best_z = Z;                 // per-restart best-seen iterate
  Vec best_f(K);
  Vec fvals(K), G(static_cast<size_t>(K) * d);

  grad_input_batch(m, Z.data(), K, fvals.data(), G.data());
  for (int k = 0; k < K; ++k) best_f[k] = fvals[k];

  for (int step = 0; step < cfg.steps; ++step) {
    for (int k = 0; k < K; ++k) {
      double* z = Z.data() + static_cast<size_t>(k) * d;
      const double* g = G.data() + static_cast<size_t>(k) * d;
      Vec next(z, z + d);
      for (int i = 0; i < d; ++i) next[i] += cfg.step_size * g[i];
      next = project(space, next);
      std::copy(next.begin(), next.end(), z);
    }
    grad_input_batch(m, Z.data(), K, fvals.data(), G.data());
    for (int k = 0; k < K; ++k) {
      if (fvals[k] > best_f[k]) {
        best_f[k] = fvals[k];
        std::copy(Z.begin() + static_cast<size_t>(k) * d,
                  Z.begin() + static_cast<size_t>(k + 1) * d,
                  best_z.begin() + static_cast<size_t>(k) * d);
      }
    }
  }

  int win = 0;
  for (int k = 1; k < K; ++k)
    if (best_f[k] > best_f[win]) win = k;
  return Vec(best_z.begin() + static_cast<size_t>(win) * d,
             best_z.begin() + static_cast<size_t>(win + 1) * d);
}

std::pair<Vec, TrialSource> propose_next(const TrialLog& history, const DesignSpace& space,
                                         const TrainConfig& train_cfg,
                                         const InverseDesignConfig& inv_cfg, double epsilon,
                                         Rng& rng, const Model* warm) {
  const double u = rng.uniform();
  if (u < epsilon || history.trials.empty())
    return {sample_uniform(space, rng), TrialSource::Explore};
  Model m = warm ? fit_surrogate_warm(history, train_cfg, *warm, rng)
                 : fit_surrogate(history, train_cfg, rng);
  return {inverse_design(m, space, inv_cfg, rng), TrialSource::Exploit};
}

}  // namespace sforge
