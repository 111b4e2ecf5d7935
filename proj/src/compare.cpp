#include "sforge/compare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "sforge/error.hpp"
#include "sforge/text.hpp"

namespace sforge {

double quantile(Vec values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const double h = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(h);
  const double f = h - static_cast<double>(lo);
  if (lo + 1 >= n) return values[n - 1];
  return values[lo] + f * (values[lo + 1] - values[lo]);
}

double median(Vec values) { return quantile(std::move(values), 0.5); }

double iqr(Vec values) {
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(std::move(values), 0.75);
  return q3 - q1;
}

// Runs work(0..n) across up to jobs threads; the first exception wins and
// is rethrown on the calling thread.
static void run_cells(int n, int jobs, const std::function<void(int)>& work) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (first) return;
      }
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

static void append_curve_rows(std::string& csv, const std::string& label, uint64_t seed,
                              const TrialLog& log) {
  const Vec curve = running_best(log);
  for (size_t k = 0; k < log.trials.size(); ++k) {
    csv += label;
    csv += ',';
    csv += std::to_string(seed);
    csv += ',';
    csv += std::to_string(log.trials[k].index);
    csv += ',';
    append_fmt17(csv, log.trials[k].reward);
    csv += ',';
    append_fmt17(csv, curve[k]);
    csv += '\n';
  }
}

CompareResult run_compare(const CompareConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("compare needs at least one seed");
  if (cfg.methods.empty()) throw ConfigError("compare needs at least one method");
  const OracleSpec oracle = parse_oracle(cfg.oracle);

  const int dim = oracle.space.dim;
  int budget = -1;
  for (Method m : cfg.methods) {
    CampaignConfig c = cfg.base;
    c.method = m;
    validate_config(c, dim);
    const int eff = effective_budget(c, dim);
    if (budget < 0) budget = eff;
    if (eff != budget)
      throw ConfigError("unequal budgets across methods: " + std::to_string(budget) +
                        " vs " + std::to_string(eff) + " for " + to_string(m));
  }

  const int S = static_cast<int>(cfg.seeds.size());
  const int n = static_cast<int>(cfg.methods.size()) * S;
  CompareResult out;
  out.logs.resize(n);
  run_cells(n, cfg.jobs, [&](int i) {
    CampaignConfig c = cfg.base;
    c.method = cfg.methods[i / S];
    c.master_seed = cfg.seeds[i % S];
    out.logs[i] = run_campaign(oracle, c);
  });

  out.compare_csv = "method,seed,trial_index,reward,running_best\n";
  for (size_t mi = 0; mi < cfg.methods.size(); ++mi)
    for (int si = 0; si < S; ++si)
      append_curve_rows(out.compare_csv, to_string(cfg.methods[mi]), cfg.seeds[si],
                        out.logs[mi * S + si]);

  out.summary_csv = "method,median_best,iqr\n";
  for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    Vec bests;
    bests.reserve(S);
    for (int si = 0; si < S; ++si)
      bests.push_back(best_trial(out.logs[mi * S + si]).reward);
    out.summary_csv += to_string(cfg.methods[mi]);
    out.summary_csv += ',';
    append_fmt17(out.summary_csv, median(bests));
    out.summary_csv += ',';
    append_fmt17(out.summary_csv, iqr(bests));
    out.summary_csv += '\n';
  }
  return out;
}

AdaptResult run_adapt(const AdaptConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("adapt needs at least one seed");
  if (cfg.checkpoint.empty()) throw ConfigError("adapt needs a checkpoint to warm-start from");
  const OracleSpec oracle = parse_oracle(cfg.oracle);

  const int S = static_cast<int>(cfg.seeds.size());
  AdaptResult out;
  out.warm.resize(S);
  out.cold.resize(S);
  run_cells(2 * S, cfg.jobs, [&](int i) {
    const bool warm = i < S;
    CampaignConfig c = cfg.base;
    c.method = Method::EpsGreedy;
    c.master_seed = cfg.seeds[i % S];
    c.warm_checkpoint = warm ? cfg.checkpoint : std::string();
    (warm ? out.warm : out.cold)[i % S] = run_campaign(oracle, c);
  });

  out.adapt_csv = "mode,seed,trial_index,reward,running_best\n";
  for (int si = 0; si < S; ++si) append_curve_rows(out.adapt_csv, "warm", cfg.seeds[si], out.warm[si]);
  for (int si = 0; si < S; ++si) append_curve_rows(out.adapt_csv, "cold", cfg.seeds[si], out.cold[si]);
  return out;
}

}  // namespace sforge
