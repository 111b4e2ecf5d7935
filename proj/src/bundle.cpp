#include "sforge/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "sforge/error.hpp"
#include "sforge/surrogate.hpp"
#include "sforge/text.hpp"

namespace fs = std::filesystem;

namespace sforge {

namespace testing {
std::function<void(const std::string&)> bundle_fault_hook;
}

static void fault(const char* stage) {
  if (testing::bundle_fault_hook) testing::bundle_fault_hook(stage);
}

static std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return text;
}

static void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

static void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

std::string config_to_json(const CampaignBundle& b) {
  const CampaignConfig& c = b.config;
  const TrainConfig& t = c.train_cfg;
  const InverseDesignConfig& v = c.inv_cfg;
  std::string out = "{\"schema_version\":";
  out += std::to_string(b.schema_version);
  out += ",\"oracle\":\"";
  out += json_escape(b.oracle);
  out += "\",\"method\":\"";
  out += to_string(c.method);
  out += "\",\"budget\":";
  out += std::to_string(c.budget);
  out += ",\"epsilon\":";
  append_fmt17(out, c.epsilon);
  out += ",\"master_seed\":";
  out += std::to_string(c.master_seed);
  out += ",\"warm_checkpoint\":\"";
  out += json_escape(c.warm_checkpoint);
  out += "\",\"grid_shape\":[";
  for (size_t k = 0; k < c.grid_shape.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(c.grid_shape[k]);
  }
  out += "],\"snes_pop\":";
  out += std::to_string(c.snes_pop);
  out += ",\"snes_gens\":";
  out += std::to_string(c.snes_gens);
  out += ",\"train\":{\"iters\":";
  out += std::to_string(t.iters);
  out += ",\"batch\":";
  out += std::to_string(t.batch);
  out += ",\"lr\":";
  append_fmt17(out, t.lr);
  out += ",\"weight_decay\":";
  append_fmt17(out, t.weight_decay);
  out += ",\"huber_delta\":";
  append_fmt17(out, t.huber_delta);
  out += ",\"act\":\"";
  out += t.act == Activation::Tanh ? "tanh" : "relu";
  out += "\",\"init_mode\":\"";
  out += t.init_mode == InitMode::Scaled ? "scaled" : "fixed";
  out += "\",\"init_sigma\":";
  append_fmt17(out, t.init_sigma);
  out += ",\"adam_beta1\":";
  append_fmt17(out, t.adam_beta1);
  out += ",\"adam_beta2\":";
  append_fmt17(out, t.adam_beta2);
  out += ",\"adam_eps\":";
  append_fmt17(out, t.adam_eps);
  out += ",\"standardize\":";
  out += t.standardize ? "true" : "false";
  out += "},\"inverse\":{\"steps\":";
  out += std::to_string(v.steps);
  out += ",\"step_size\":";
  append_fmt17(out, v.step_size);
  out += ",\"restarts\":";
  out += std::to_string(v.restarts);
  out += "}}";
  return out;
}

void config_from_json(const std::string& text, CampaignBundle& b) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptJsonError(std::string("config.json: ") + e.what());
  }
  try {
    b.schema_version = j.at("schema_version").get<int>();
    if (b.schema_version != 1)
      throw SchemaError("unsupported schema_version " + std::to_string(b.schema_version));
    b.oracle = j.at("oracle").get<std::string>();
    CampaignConfig& c = b.config;
    try {
      c.method = method_from_string(j.at("method").get<std::string>());
    } catch (const ConfigError& e) {
      throw SchemaError(std::string("config.json: ") + e.what());
    }
    c.budget = j.at("budget").get<int>();
    c.epsilon = j.at("epsilon").get<double>();
    c.master_seed = j.at("master_seed").get<uint64_t>();
    c.warm_checkpoint = j.at("warm_checkpoint").get<std::string>();
    c.grid_shape = j.at("grid_shape").get<std::vector<int>>();
    c.snes_pop = j.at("snes_pop").get<int>();
    c.snes_gens = j.at("snes_gens").get<int>();
    const json& t = j.at("train");
    c.train_cfg.iters = t.at("iters").get<int>();
    c.train_cfg.batch = t.at("batch").get<int>();
    c.train_cfg.lr = t.at("lr").get<double>();
    c.train_cfg.weight_decay = t.at("weight_decay").get<double>();
    c.train_cfg.huber_delta = t.at("huber_delta").get<double>();
    const std::string act = t.at("act").get<std::string>();
    if (act == "tanh")
      c.train_cfg.act = Activation::Tanh;
    else if (act == "relu")
      c.train_cfg.act = Activation::Relu;
    else
      throw SchemaError("config.json: unknown act " + act);
    const std::string mode = t.at("init_mode").get<std::string>();
    if (mode == "scaled")
      c.train_cfg.init_mode = InitMode::Scaled;
    else if (mode == "fixed")
      c.train_cfg.init_mode = InitMode::Fixed;
    else
      throw SchemaError("config.json: unknown init_mode " + mode);
    c.train_cfg.init_sigma = t.at("init_sigma").get<double>();
    c.train_cfg.adam_beta1 = t.at("adam_beta1").get<double>();
    c.train_cfg.adam_beta2 = t.at("adam_beta2").get<double>();
    c.train_cfg.adam_eps = t.at("adam_eps").get<double>();
    c.train_cfg.standardize = t.at("standardize").get<bool>();
    const json& v = j.at("inverse");
    c.inv_cfg.steps = v.at("steps").get<int>();
    c.inv_cfg.step_size = v.at("step_size").get<double>();
    c.inv_cfg.restarts = v.at("restarts").get<int>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config.json: ") + e.what());
  }
}

static bool space_equal(const DesignSpace& a, const DesignSpace& b) {
  if (a.dim != b.dim || a.lower != b.lower || a.upper != b.upper) return false;
  if (a.margins.size() != b.margins.size() || a.ties.size() != b.ties.size()) return false;
  for (size_t k = 0; k < a.margins.size(); ++k)
    if (a.margins[k].i != b.margins[k].i || a.margins[k].j != b.margins[k].j ||
        a.margins[k].m != b.margins[k].m)
      return false;
  for (size_t k = 0; k < a.ties.size(); ++k)
    if (a.ties[k].src != b.ties[k].src || a.ties[k].dst != b.ties[k].dst) return false;
  return true;
}

void validate_bundle(const CampaignBundle& b) {
  if (b.schema_version != 1)
    throw SchemaError("unsupported schema_version " + std::to_string(b.schema_version));
  validate_config(b.config, b.log.space.dim);
  const OracleSpec spec = parse_oracle(b.oracle);
  if (!space_equal(spec.space, b.log.space))
    throw InvariantError("log space does not match the oracle's design space");
  if (b.log.oracle_name != b.oracle)
    throw InvariantError("log oracle_name does not match config oracle");
  if (method_from_string(b.log.method) != b.config.method)
    throw MethodMismatchError("log method " + b.log.method + " does not match config " +
                              to_string(b.config.method));
  if (b.log.master_seed != b.config.master_seed)
    throw InvariantError("log master_seed does not match config");
  validate(b.log);
  const int target = effective_budget(b.config, b.log.space.dim);
  if (static_cast<int>(b.log.trials.size()) > target)
    throw InvariantError("log exceeds the campaign budget");
  if (b.final_checkpoint) {
    if (b.final_checkpoint->dims.empty() ||
        b.final_checkpoint->dims.front() != b.log.space.dim)
      throw DimensionError("checkpoint input width does not match the space");
  }
}

void save_bundle(const CampaignBundle& b, const std::string& dir) {
  validate_bundle(b);
  const fs::path target(dir);
  const fs::path tmp(dir + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp, ec);
  try {
    fs::create_directories(tmp);
    fault("config");
    write_file(tmp / "config.json", config_to_json(b));
    fault("trials");
    write_file(tmp / "trials.jsonl", to_jsonl(b.log));
    if (b.final_checkpoint) {
      fault("checkpoint");
      write_file(tmp / "checkpoint.json", checkpoint_to_json(*b.final_checkpoint));
    }
    fault("commit");
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  const fs::path old(dir + ".old");
  fs::remove_all(old, ec);
  if (fs::exists(target)) {
    fs::rename(target, old, ec);
    if (ec) throw IoError("rename failed: " + target.string() + ": " + ec.message());
    fs::rename(tmp, target, ec);
    if (ec) {
      std::error_code undo;
      fs::rename(old, target, undo);
      throw IoError("rename failed: " + target.string() + ": " + ec.message());
    }
    fs::remove_all(old, ec);
  } else {
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("rename failed: " + target.string() + ": " + ec.message());
  }
}

CampaignBundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  CampaignBundle b;
  config_from_json(read_file(root / "config.json"), b);
  b.log = trial_log_from_jsonl(read_file(root / "trials.jsonl"));
  if (fs::exists(root / "checkpoint.json"))
    b.final_checkpoint = load_checkpoint((root / "checkpoint.json").string());
  validate_bundle(b);
  return b;
}

// eps-greedy bundles end with a model fit on the complete log so later
// campaigns can warm-start from it; the fit draws from a dedicated seed
// stream, leaving trial seeds untouched.
static void finalize_checkpoint(CampaignBundle& b, const fs::path& root) {
  if (b.config.method != Method::EpsGreedy) return;
  Rng rng(derive_seed(b.config.master_seed, kStreamFinalFit, 0));
  Model m = b.config.warm_checkpoint.empty()
                ? fit_surrogate(b.log, b.config.train_cfg, rng)
                : fit_surrogate_warm(b.log, b.config.train_cfg,
                                     load_checkpoint(b.config.warm_checkpoint), rng);
  write_file_atomic(root / "checkpoint.json", checkpoint_to_json(m));
  b.final_checkpoint = std::move(m);
}

CampaignBundle run_bundle(const OracleSpec& oracle, const CampaignConfig& cfg,
                          const std::string& dir) {
  validate_config(cfg, oracle.space.dim);
  const fs::path root(dir);
  if (fs::exists(root / "config.json"))
    throw ConfigError("bundle already exists at " + dir + " (use resume)");
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  CampaignBundle b;
  b.oracle = oracle.name;
  b.config = cfg;
  b.log.space = oracle.space;
  b.log.oracle_name = oracle.name;
  b.log.method = to_string(cfg.method);
  b.log.master_seed = cfg.master_seed;

  write_file_atomic(root / "config.json", config_to_json(b));
  std::ofstream out(root / "trials.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + (root / "trials.jsonl").string());
  out << jsonl_header_line(b.log) << '\n';
  out.flush();
  continue_campaign(b.log, oracle, cfg, [&out](const Trial& t) {
    out << jsonl_trial_line(t) << '\n';
    out.flush();
    if (!out) throw IoError("write failed: trials.jsonl");
  });
  out.close();
  finalize_checkpoint(b, root);
  return b;
}

CampaignBundle resume_bundle(const std::string& dir, const ResumeOverrides& ovr) {
  const fs::path root(dir);
  CampaignBundle b = load_bundle(dir);
  bool changed = false;
  if (ovr.budget && *ovr.budget != b.config.budget) {
    b.config.budget = *ovr.budget;
    changed = true;
  }
  if (ovr.snes_gens && *ovr.snes_gens != b.config.snes_gens) {
    b.config.snes_gens = *ovr.snes_gens;
    changed = true;
  }
  if (changed) {
    validate_config(b.config, b.log.space.dim);
    if (effective_budget(b.config, b.log.space.dim) < static_cast<int>(b.log.trials.size()))
      throw ConfigError("new budget is below the number of completed trials");
    write_file_atomic(root / "config.json", config_to_json(b));
  }
  const OracleSpec oracle = parse_oracle(b.oracle);
  const int target = effective_budget(b.config, b.log.space.dim);
  const int len = static_cast<int>(b.log.trials.size());
  if (len < target) {
    std::ofstream out(root / "trials.jsonl", std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to " + (root / "trials.jsonl").string());
    continue_campaign(b.log, oracle, b.config, [&out](const Trial& t) {
      out << jsonl_trial_line(t) << '\n';
      out.flush();
      if (!out) throw IoError("write failed: trials.jsonl");
    });
    out.close();
    finalize_checkpoint(b, root);
  } else if (b.config.method == Method::EpsGreedy && !b.final_checkpoint) {
    finalize_checkpoint(b, root);
  }
  return b;
}

}  // namespace sforge
