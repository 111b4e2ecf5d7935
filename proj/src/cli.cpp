#include "sforge/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "sforge/bundle.hpp"
#include "sforge/compare.hpp"
#include "sforge/error.hpp"
#include "sforge/text.hpp"
#include "sforge/verify.hpp"

namespace fs = std::filesystem;

namespace sforge {
namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_design(const Vec& z) {
  std::string s = "[";
  for (size_t i = 0; i < z.size(); ++i) {
    if (i) s += ", ";
    s += fmt_g(z[i]);
  }
  s += "]";
  return s;
}

std::vector<uint64_t> parse_seeds(const std::string& s) {
  std::vector<uint64_t> out;
  try {
    const size_t dots = s.find("..");
    if (dots != std::string::npos) {
      const uint64_t a = std::stoull(s.substr(0, dots));
      const uint64_t b = std::stoull(s.substr(dots + 2));
      if (b < a) throw ConfigError("seed range is reversed: " + s);
      if (b - a >= 10000) throw ConfigError("seed range too large: " + s);
      for (uint64_t v = a;; ++v) {
        out.push_back(v);
        if (v == b) break;
      }
    } else {
      size_t pos = 0;
      for (;;) {
        const size_t comma = s.find(',', pos);
        out.push_back(std::stoull(s.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad seeds: " + s);
  } catch (const std::out_of_range&) {
    throw ConfigError("bad seeds: " + s);
  }
  if (out.empty()) throw ConfigError("seeds must be non-empty");
  return out;
}

std::vector<int> parse_grid_shape(const std::string& s) {
  std::vector<int> out;
  size_t pos = 0;
  try {
    for (;;) {
      const size_t comma = s.find(',', pos);
      out.push_back(std::stoi(s.substr(pos, comma - pos)));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  } catch (const std::exception&) {
    throw ConfigError("bad grid-shape: " + s);
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  size_t pos = 0;
  for (;;) {
    const size_t comma = s.find(',', pos);
    out.push_back(method_from_string(s.substr(pos, comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SFORGE_OUT"); env && *env) return env;
  return "out";
}

// Shared campaign-shaped options.  Config-file values fill any option the
// command line left untouched (flags win).
struct CampaignOpts {
  std::string oracle;
  std::string method = "eps-greedy";
  std::string methods = "eps-greedy,snes,random,grid";
  std::string seeds = "0";
  std::string out;
  std::string config_file;
  std::string grid_shape;
  std::string init_mode = "scaled";
  std::string train_act = "tanh";
  int jobs = 1;
  CampaignConfig cfg;

  CLI::App* cmd = nullptr;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters;

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    CLI::Option* o = cmd->add_option(name, var, desc);
    const std::string key = name.substr(2);
    setters[key] = [&var, key](const nlohmann::json& v) {
      try {
        var = v.get<T>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("config file: bad value for " + key);
      }
    };
    return o;
  }

  // seeds / grid-shape accept a JSON array or the flag's string form
  template <class T>
  CLI::Option* add_list(const std::string& name, T& var, const std::string& desc) {
    CLI::Option* o = cmd->add_option(name, var, desc);
    const std::string key = name.substr(2);
    setters[key] = [&var, key](const nlohmann::json& v) {
      if (v.is_array()) {
        std::string joined;
        for (const auto& e : v) {
          if (!joined.empty()) joined += ',';
          if (!e.is_number()) throw ConfigError("config file: bad value for " + key);
          joined += e.dump();
        }
        var = joined;
      } else if (v.is_string()) {
        var = v.get<std::string>();
      } else {
        throw ConfigError("config file: bad value for " + key);
      }
    };
    return o;
  }

  void add_campaign_flags(bool with_method) {
    if (with_method) add("--method", method, "eps-greedy|random|grid|snes");
    add("--budget", cfg.budget, "trial budget");
    add("--epsilon", cfg.epsilon, "exploration probability");
    add_list("--grid-shape", grid_shape, "per-axis grid sizes, e.g. 5,5,4");
    add("--snes-pop", cfg.snes_pop, "SNES population size");
    add("--snes-gens", cfg.snes_gens, "SNES generations");
    add("--warm-checkpoint", cfg.warm_checkpoint, "checkpoint to warm-start fits from");
    add("--train-iters", cfg.train_cfg.iters, "minibatch steps per fit");
    add("--train-batch", cfg.train_cfg.batch, "minibatch size");
    add("--train-lr", cfg.train_cfg.lr, "AdamW learning rate");
    add("--train-weight-decay", cfg.train_cfg.weight_decay, "AdamW weight decay");
    add("--train-huber-delta", cfg.train_cfg.huber_delta, "Huber loss delta");
    add("--train-act", train_act, "tanh|relu surrogate activation");
    add("--train-init-mode", init_mode, "scaled|fixed weight init");
    add("--train-init-sigma", cfg.train_cfg.init_sigma, "weight sigma for fixed init");
    add("--train-standardize", cfg.train_cfg.standardize,
        "standardize rewards before fitting (true|false)");
    add("--inv-steps", cfg.inv_cfg.steps, "gradient-ascent steps per restart");
    add("--inv-step-size", cfg.inv_cfg.step_size, "gradient-ascent step size");
    add("--inv-restarts", cfg.inv_cfg.restarts, "inverse-design restarts");
  }

  void apply_config_file() {
    if (config_file.empty()) return;
    std::ifstream in(config_file);
    if (!in) throw ConfigError("cannot open config file " + config_file);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config file: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, val] : doc.items()) {
      const auto it = setters.find(key);
      if (it == setters.end()) throw ConfigError("unknown config key: " + key);
      if (cmd->get_option("--" + key)->count()) continue;
      it->second(val);
    }
  }

  CampaignConfig finish_config() {
    CampaignConfig c = cfg;
    c.method = method_from_string(method);
    if (!grid_shape.empty()) c.grid_shape = parse_grid_shape(grid_shape);
    if (init_mode == "scaled")
      c.train_cfg.init_mode = InitMode::Scaled;
    else if (init_mode == "fixed")
      c.train_cfg.init_mode = InitMode::Fixed;
    else
      throw ConfigError("bad train-init-mode: " + init_mode);
    if (train_act == "tanh")
      c.train_cfg.act = Activation::Tanh;
    else if (train_act == "relu")
      c.train_cfg.act = Activation::Relu;
    else
      throw ConfigError("bad train-act: " + train_act);
    return c;
  }
};

void print_best(std::ostream& out, uint64_t seed, const TrialLog& log) {
  const Trial& t = best_trial(log);
  out << "seed " << seed << ": best trial " << t.index << " (" << to_string(t.source)
      << ") reward " << fmt_g(t.reward) << " design " << fmt_design(t.design) << "\n";
}

void print_surrogate_argmax(std::ostream& out, uint64_t seed, const CampaignBundle& b) {
  if (!b.final_checkpoint) return;
  Rng rng(derive_seed(b.config.master_seed, kStreamFinalFit, 1));
  const Vec zhat =
      inverse_design(*b.final_checkpoint, b.log.space, b.config.inv_cfg, rng);
  out << "seed " << seed << ": surrogate argmax " << fmt_design(zhat) << "\n";
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

int do_run(CampaignOpts& o, std::ostream& out) {
  o.apply_config_file();
  if (o.oracle.empty()) throw ConfigError("run needs --oracle");
  const CampaignConfig base = o.finish_config();
  const OracleSpec oracle = parse_oracle(o.oracle);
  const std::vector<uint64_t> seeds = parse_seeds(o.seeds);
  const fs::path root = out_dir(o.out);
  for (const uint64_t seed : seeds) {
    CampaignConfig cfg = base;
    cfg.master_seed = seed;
    const fs::path dir = root / to_string(cfg.method) / std::to_string(seed);
    const CampaignBundle b = run_bundle(oracle, cfg, dir.string());
    print_best(out, seed, b.log);
    print_surrogate_argmax(out, seed, b);
  }
  return 0;
}

int do_compare(CampaignOpts& o, std::ostream& out) {
  o.apply_config_file();
  if (o.oracle.empty()) throw ConfigError("compare needs --oracle");
  CompareConfig cc;
  cc.oracle = o.oracle;
  cc.methods = parse_methods(o.methods);
  cc.seeds = parse_seeds(o.seeds);
  cc.base = o.finish_config();
  cc.jobs = o.jobs;
  const CompareResult res = run_compare(cc);
  const fs::path root = out_dir(o.out);
  fs::create_directories(root);
  write_text(root / "compare.csv", res.compare_csv);
  write_text(root / "summary.csv", res.summary_csv);
  out << res.summary_csv;
  return 0;
}

int do_adapt(CampaignOpts& o, const std::string& base_bundle, std::ostream& out) {
  o.apply_config_file();
  if (o.oracle.empty()) throw ConfigError("adapt needs --oracle");
  const fs::path ckpt = fs::path(base_bundle) / "checkpoint.json";
  if (!fs::exists(ckpt))
    throw ConfigError("base bundle has no checkpoint: " + ckpt.string());
  AdaptConfig ac;
  ac.checkpoint = ckpt.string();
  ac.oracle = o.oracle;
  ac.seeds = parse_seeds(o.seeds);
  ac.base = o.finish_config();
  ac.base.method = Method::EpsGreedy;
  ac.jobs = o.jobs;
  const AdaptResult res = run_adapt(ac);
  const fs::path root = out_dir(o.out);
  fs::create_directories(root);
  write_text(root / "adapt.csv", res.adapt_csv);
  Vec wb, cb;
  for (const TrialLog& log : res.warm) wb.push_back(best_trial(log).reward);
  for (const TrialLog& log : res.cold) cb.push_back(best_trial(log).reward);
  out << "warm median best " << fmt_g(median(wb)) << ", cold median best "
      << fmt_g(median(cb)) << "\n";
  return 0;
}

int do_resume(const std::string& dir, std::optional<int> budget,
              std::optional<int> snes_gens, std::ostream& out) {
  ResumeOverrides ovr;
  ovr.budget = budget;
  ovr.snes_gens = snes_gens;
  const CampaignBundle b = resume_bundle(dir, ovr);
  print_best(out, b.config.master_seed, b.log);
  print_surrogate_argmax(out, b.config.master_seed, b);
  return 0;
}

int do_replay(const std::string& dir, std::ostream& out) {
  const CampaignBundle b = load_bundle(dir);
  const Vec curve = running_best(b.log);
  out << "method,seed,trial_index,reward,running_best\n";
  for (size_t k = 0; k < b.log.trials.size(); ++k) {
    std::string row = b.log.method;
    row += ',';
    row += std::to_string(b.log.master_seed);
    row += ',';
    row += std::to_string(b.log.trials[k].index);
    row += ',';
    append_fmt17(row, b.log.trials[k].reward);
    row += ',';
    append_fmt17(row, curve[k]);
    row += '\n';
    out << row;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"sample-efficient design optimization on synthetic oracles"};
  app.require_subcommand(1);

  CampaignOpts run_o, cmp_o, adp_o;
  std::string resume_dir, replay_dir, adapt_base;
  int resume_budget = 0, resume_gens = 0;
  VerifyOptions vo;

  CLI::App* runc = app.add_subcommand("run", "run one campaign per seed");
  run_o.cmd = runc;
  run_o.add("--oracle", run_o.oracle, "oracle selector, e.g. airplane5?noise=0.05");
  run_o.add_list("--seeds", run_o.seeds, "master seeds: a..b or comma list");
  run_o.add("--out", run_o.out, "output directory (default $SFORGE_OUT or ./out)");
  run_o.add_campaign_flags(true);
  runc->add_option("--config", run_o.config_file, "JSON file supplying any flag subset");

  CLI::App* cmpc = app.add_subcommand("compare", "benchmark methods across shared seeds");
  cmp_o.cmd = cmpc;
  cmp_o.seeds = "1..5";
  cmp_o.add("--oracle", cmp_o.oracle, "oracle selector");
  cmp_o.add("--methods", cmp_o.methods, "comma list of methods to compare");
  cmp_o.add_list("--seeds", cmp_o.seeds, "master seeds: a..b or comma list");
  cmp_o.add("--out", cmp_o.out, "output directory");
  cmp_o.add("--jobs", cmp_o.jobs, "concurrent campaigns");
  cmp_o.add_campaign_flags(false);
  cmpc->add_option("--config", cmp_o.config_file, "JSON file supplying any flag subset");

  CLI::App* adpc = app.add_subcommand("adapt", "warm vs cold adaptation study");
  adp_o.cmd = adpc;
  adp_o.seeds = "1..5";
  adp_o.cfg.budget = 50;
  adpc->add_option("--base", adapt_base, "bundle directory holding the pretrained checkpoint")
      ->required();
  adp_o.add("--oracle", adp_o.oracle, "adaptation target oracle selector");
  adp_o.add_list("--seeds", adp_o.seeds, "master seeds: a..b or comma list");
  adp_o.add("--out", adp_o.out, "output directory");
  adp_o.add("--jobs", adp_o.jobs, "concurrent campaigns");
  adp_o.add_campaign_flags(false);
  adpc->add_option("--config", adp_o.config_file, "JSON file supplying any flag subset");

  CLI::App* resc = app.add_subcommand("resume", "continue an interrupted campaign in place");
  resc->add_option("dir", resume_dir, "bundle directory")->required();
  CLI::Option* rb = resc->add_option("--budget", resume_budget, "extend the trial budget");
  CLI::Option* rg = resc->add_option("--snes-gens", resume_gens, "extend SNES generations");

  CLI::App* repc = app.add_subcommand("replay", "re-print a bundle's curves");
  repc->add_option("dir", replay_dir, "bundle directory")->required();

  CLI::App* verc = app.add_subcommand("verify", "self-checks: gradients, oracles, filters");
  verc->add_option("--probes", vo.grad_probes, "gradient probes");
  verc->add_option("--tol", vo.grad_tol, "max relative gradient error");
  verc->add_option("--traces", vo.filter_traces, "random traces for filter equivalence");
  verc->add_option("--seed", vo.seed, "probe seed");
  verc->add_option("--inject-grad-bug", vo.inject_grad_bug, "")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (runc->parsed()) return do_run(run_o, out);
    if (cmpc->parsed()) return do_compare(cmp_o, out);
    if (adpc->parsed()) return do_adapt(adp_o, adapt_base, out);
    if (resc->parsed())
      return do_resume(resume_dir,
                       rb->count() ? std::optional<int>(resume_budget) : std::nullopt,
                       rg->count() ? std::optional<int>(resume_gens) : std::nullopt, out);
    if (repc->parsed()) return do_replay(replay_dir, out);
    if (verc->parsed()) return run_verify(vo, out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sforge
