#include "sforge/trial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sforge/error.hpp"
#include "sforge/text.hpp"

namespace sforge {

const char* to_string(TrialSource s) {
  switch (s) {
    case TrialSource::Explore: return "explore";
    case TrialSource::Exploit: return "exploit";
    case TrialSource::Random: return "random";
    case TrialSource::Grid: return "grid";
    case TrialSource::Snes: return "snes";
  }
  return "random";
}

TrialSource trial_source_from_string(const std::string& s) {
  if (s == "explore") return TrialSource::Explore;
  if (s == "exploit") return TrialSource::Exploit;
  if (s == "random") return TrialSource::Random;
  if (s == "grid") return TrialSource::Grid;
  if (s == "snes") return TrialSource::Snes;
  throw CorruptJsonError("unknown trial source: " + s);
}

void validate(const TrialLog& log) {
  for (size_t k = 0; k < log.trials.size(); ++k) {
    const Trial& t = log.trials[k];
    if (t.index != static_cast<int>(k) + 1)
      throw InvariantError("trial indices must be consecutive from 1");
    if (!std::isfinite(t.reward)) throw InvariantError("non-finite reward");
    if (static_cast<int>(t.design.size()) != log.space.dim)
      throw DimensionError("trial design dimension mismatch");
    if (!is_feasible(log.space, t.design))
      throw InvariantError("trial design infeasible in log space");
  }
}

const Trial& best_trial(const TrialLog& log) {
  if (log.trials.empty()) throw ConfigError("best_trial on an empty log");
  size_t win = 0;
  for (size_t k = 1; k < log.trials.size(); ++k)
    if (log.trials[k].reward > log.trials[win].reward) win = k;
  return log.trials[win];
}

Vec running_best(const TrialLog& log) {
  Vec out;
  out.reserve(log.trials.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const Trial& t : log.trials) {
    best = std::max(best, t.reward);
    out.push_back(best);
  }
  return out;
}

static void append_vec(std::string& out, const Vec& v) {
  out += '[';
  out += join_fmt17(v, ',');
  out += ']';
}

std::string jsonl_header_line(const TrialLog& log) {
  std::string out = "{\"space\":{\"dim\":";
  out += std::to_string(log.space.dim);
  out += ",\"lower\":";
  append_vec(out, log.space.lower);
  out += ",\"upper\":";
  append_vec(out, log.space.upper);
  out += ",\"margins\":[";
  for (size_t k = 0; k < log.space.margins.size(); ++k) {
    const Margin& m = log.space.margins[k];
    if (k) out += ',';
    out += '[';
    out += std::to_string(m.i);
    out += ',';
    out += std::to_string(m.j);
    out += ',';
    append_fmt17(out, m.m);
    out += ']';
  }
  out += "],\"ties\":[";
  for (size_t k = 0; k < log.space.ties.size(); ++k) {
    if (k) out += ',';
    out += '[';
    out += std::to_string(log.space.ties[k].src);
    out += ',';
    out += std::to_string(log.space.ties[k].dst);
    out += ']';
  }
  out += "]},\"oracle_name\":\"";
  out += json_escape(log.oracle_name);
  out += "\",\"method\":\"";
  out += json_escape(log.method);
  out += "\",\"master_seed\":";
  out += std::to_string(log.master_seed);
  out += '}';
  return out;
}

std::string jsonl_trial_line(const Trial& t) {
  std::string out = "{\"index\":";
  out += std::to_string(t.index);
  out += ",\"design\":";
  append_vec(out, t.design);
  out += ",\"reward\":";
  append_fmt17(out, t.reward);
  out += ",\"source\":\"";
  out += to_string(t.source);
  out += "\",\"rng_seed\":";
  out += std::to_string(t.rng_seed);
  out += ",\"wall_ms\":";
  out += std::to_string(t.wall_ms);
  out += '}';
  return out;
}

std::string to_jsonl(const TrialLog& log) {
  std::string out = jsonl_header_line(log);
  out += '\n';
  for (const Trial& t : log.trials) {
    out += jsonl_trial_line(t);
    out += '\n';
  }
  return out;
}

TrialLog trial_log_from_jsonl(const std::string& text) {
  using nlohmann::json;
  std::istringstream in(text);
  std::string line;
  TrialLog log;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorruptJsonError(std::string("bad JSONL line: ") + e.what());
    }
    try {
      if (!have_header) {
        const json& sp = j.at("space");
        Vec lower = sp.at("lower").get<Vec>();
        Vec upper = sp.at("upper").get<Vec>();
        std::vector<Margin> margins;
        for (const auto& m : sp.at("margins"))
          margins.push_back({m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<double>()});
        std::vector<Tie> ties;
        for (const auto& t : sp.at("ties"))
          ties.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
        log.space = make_space(std::move(lower), std::move(upper), std::move(margins),
                               std::move(ties));
        if (sp.at("dim").get<int>() != log.space.dim)
          throw CorruptJsonError("space dim field disagrees with bounds");
        log.oracle_name = j.at("oracle_name").get<std::string>();
        log.method = j.at("method").get<std::string>();
        log.master_seed = j.at("master_seed").get<uint64_t>();
        have_header = true;
        continue;
      }
      Trial t;
      t.index = j.at("index").get<int>();
      t.design = j.at("design").get<Vec>();
      t.reward = j.at("reward").get<double>();
      t.source = trial_source_from_string(j.at("source").get<std::string>());
      t.rng_seed = j.at("rng_seed").get<uint64_t>();
      t.wall_ms = j.at("wall_ms").get<int64_t>();
      log.trials.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw CorruptJsonError(std::string("bad JSONL field: ") + e.what());
    }
  }
  if (!have_header) throw CorruptJsonError("trial log missing header line");
  return log;
}

}  // namespace sforge
