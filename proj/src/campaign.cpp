#include "sforge/campaign.hpp"

#include <cmath>
#include <optional>
#include <utility>

#include "sforge/checkpoint.hpp"
#include "sforge/error.hpp"
#include "sforge/snes.hpp"

namespace sforge {

const char* to_string(Method m) {
  switch (m) {
    case Method::EpsGreedy: return "eps-greedy";
    case Method::Random: return "random";
    case Method::Grid: return "grid";
    case Method::Snes: return "snes";
  }
  return "eps-greedy";
}

Method method_from_string(const std::string& s) {
  if (s == "eps-greedy") return Method::EpsGreedy;
  if (s == "random") return Method::Random;
  if (s == "grid") return Method::Grid;
  if (s == "snes") return Method::Snes;
  throw ConfigError("unknown method: " + s + " (expected eps-greedy|random|grid|snes)");
}

void validate_config(const CampaignConfig& cfg, int dim) {
  if (cfg.budget < 1) throw ConfigError("budget must be at least 1");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0, 1]");
  if (cfg.snes_pop < 2) throw ConfigError("snes-pop must be at least 2");
  if (cfg.snes_gens < 1) throw ConfigError("snes-gens must be at least 1");
  const TrainConfig& tc = cfg.train_cfg;
  if (tc.iters < 0 || tc.batch < 1)
    throw ConfigError("train iters must be nonnegative and batch positive");
  if (!(tc.lr > 0.0) || tc.weight_decay < 0.0 || !(tc.huber_delta > 0.0))
    throw ConfigError("train lr and huber-delta must be positive, weight-decay nonnegative");
  const InverseDesignConfig& ic = cfg.inv_cfg;
  if (ic.restarts < 1 || ic.steps < 0 || !(ic.step_size > 0.0))
    throw ConfigError("inverse design needs restarts >= 1, steps >= 0, step-size > 0");
  if (!cfg.grid_shape.empty()) {
    if (static_cast<int>(cfg.grid_shape.size()) != dim)
      throw ConfigError("grid-shape length must match the design dimension");
    for (int s : cfg.grid_shape)
      if (s < 1) throw ConfigError("grid-shape entries must be at least 1");
  }
}

static long long grid_product(const std::vector<int>& shape, long long cap) {
  long long p = 1;
  for (int s : shape) {
    p *= s;
    if (p >= cap) return cap;
  }
  return p;
}

int effective_budget(const CampaignConfig& cfg, int dim) {
  switch (cfg.method) {
    case Method::Snes: return cfg.snes_pop * cfg.snes_gens;
    case Method::Grid: {
      std::vector<int> shape =
          cfg.grid_shape.empty() ? default_grid_shape(dim, cfg.budget) : cfg.grid_shape;
      return static_cast<int>(grid_product(shape, cfg.budget));
    }
    default: return cfg.budget;
  }
}

std::vector<int> default_grid_shape(int dim, int budget) {
  if (dim == 3) return {5, 5, 4};
  if (dim == 4) return {3, 3, 3, 4};
  if (dim == 5) return {3, 3, 3, 2, 2};
  int k = 1;
  while (grid_product(std::vector<int>(dim, k), budget) < budget) ++k;
  return std::vector<int>(dim, k);
}

std::vector<Vec> grid_points(const DesignSpace& space, const std::vector<int>& shape,
                             int limit) {
  if (static_cast<int>(shape.size()) != space.dim)
    throw ConfigError("grid shape length must match the design dimension");
  const long long count = grid_product(shape, limit);
  std::vector<Vec> pts;
  pts.reserve(count);
  for (long long p = 0; p < count; ++p) {
    Vec z(space.dim);
    long long rem = p;
    for (int a = space.dim - 1; a >= 0; --a) {
      const int n = shape[a];
      const int idx = static_cast<int>(rem % n);
      rem /= n;
      if (n == 1)
        z[a] = 0.5 * (space.lower[a] + space.upper[a]);
      else if (idx == n - 1)
        z[a] = space.upper[a];
      else
        z[a] = space.lower[a] +
               (space.upper[a] - space.lower[a]) * (static_cast<double>(idx) / (n - 1));
    }
    pts.push_back(project(space, z));
  }
  return pts;
}

static void append_trial(TrialLog& log, Trial t, const TrialSink& sink) {
  log.trials.push_back(std::move(t));
  if (sink) sink(log.trials.back());
}

void continue_campaign(TrialLog& log, const OracleSpec& oracle, const CampaignConfig& cfg,
                       const TrialSink& sink) {
  validate_config(cfg, log.space.dim);
  const int target = effective_budget(cfg, log.space.dim);
  const int len = static_cast<int>(log.trials.size());
  if (len >= target) return;

  switch (cfg.method) {
    case Method::EpsGreedy: {
      std::optional<Model> warm;
      if (!cfg.warm_checkpoint.empty()) warm = load_checkpoint(cfg.warm_checkpoint);
      for (int t = len + 1; t <= target; ++t) {
        const uint64_t seed = derive_seed(cfg.master_seed, kStreamTrial, t);
        Rng rng(seed);
        auto [z, src] = propose_next(log, log.space, cfg.train_cfg, cfg.inv_cfg, cfg.epsilon,
                                     rng, warm ? &*warm : nullptr);
        const double r = oracle_eval(oracle, z, rng);
        append_trial(log, {t, std::move(z), r, src, seed, 0}, sink);
      }
      break;
    }
    case Method::Random: {
      for (int t = len + 1; t <= target; ++t) {
        const uint64_t seed = derive_seed(cfg.master_seed, kStreamTrial, t);
        Rng rng(seed);
        Vec z = sample_uniform(log.space, rng);
        const double r = oracle_eval(oracle, z, rng);
        append_trial(log, {t, std::move(z), r, TrialSource::Random, seed, 0}, sink);
      }
      break;
    }
    case Method::Grid: {
      const std::vector<int> shape =
          cfg.grid_shape.empty() ? default_grid_shape(log.space.dim, cfg.budget)
                                 : cfg.grid_shape;
      const std::vector<Vec> pts = grid_points(log.space, shape, cfg.budget);
      for (int t = len + 1; t <= static_cast<int>(pts.size()); ++t) {
        const uint64_t seed = derive_seed(cfg.master_seed, kStreamTrial, t);
        Rng rng(seed);
        const double r = oracle_eval(oracle, pts[t - 1], rng);
        append_trial(log, {t, pts[t - 1], r, TrialSource::Grid, seed, 0}, sink);
      }
      break;
    }
    case Method::Snes: {
      SnesState st = make_snes_state(log.space);
      for (int g = 0; g < cfg.snes_gens; ++g) {
        Rng grng(derive_seed(cfg.master_seed, kStreamSnesGen, g));
        SnesSample smp = snes_ask(st, log.space, cfg.snes_pop, grng);
        std::vector<double> rewards(cfg.snes_pop);
        for (int i = 0; i < cfg.snes_pop; ++i) {
          const int t = g * cfg.snes_pop + i + 1;
          if (t <= len) {  // already logged before an interruption
            rewards[i] = log.trials[t - 1].reward;
            continue;
          }
          const uint64_t seed = derive_seed(cfg.master_seed, kStreamTrial, t);
          Rng rng(seed);
          const double r = oracle_eval(oracle, smp.z[i], rng);
          rewards[i] = r;
          append_trial(log, {t, smp.z[i], r, TrialSource::Snes, seed, 0}, sink);
        }
        snes_tell(st, smp.s, rewards);
      }
      break;
    }
  }
}

TrialLog run_campaign(const OracleSpec& oracle, const CampaignConfig& cfg,
                      const TrialSink& sink) {
  TrialLog log;
  log.space = oracle.space;
  log.oracle_name = oracle.name;
  log.method = to_string(cfg.method);
  log.master_seed = cfg.master_seed;
  continue_campaign(log, oracle, cfg, sink);
  return log;
}

}  // namespace sforge
