#include "sforge/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sforge/error.hpp"
#include "sforge/text.hpp"

namespace sforge {

static constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const Model& m) {
  std::string out;
  out.reserve(m.weights.empty() ? 256 : m.weights[1].size() * 60);
  out += "{\"version\":";
  out += std::to_string(kCheckpointVersion);
  out += ",\"layer_dims\":[";
  for (size_t i = 0; i < m.dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(m.dims[i]);
  }
  out += "],\"activation\":\"";
  out += m.act == Activation::Tanh ? "tanh" : "relu";
  out += "\",\"weights\":[";
  for (size_t l = 0; l < m.weights.size(); ++l) {
    if (l) out += ',';
    const int K = m.dims[l], O = m.dims[l + 1];
    out += '[';
    for (int o = 0; o < O; ++o) {
      if (o) out += ',';
      out += '[';
      for (int k = 0; k < K; ++k) {
        if (k) out += ',';
        append_fmt17(out, m.weights[l][(size_t)k * O + o]);
      }
      out += ']';
    }
    out += ']';
  }
  out += "],\"biases\":[";
  for (size_t l = 0; l < m.biases.size(); ++l) {
    if (l) out += ',';
    out += '[';
    out += join_fmt17(m.biases[l], ',');
    out += ']';
  }
  out += "],\"reward_standardization\":";
  if (m.reward_std) {
    out += "{\"mean\":";
    append_fmt17(out, m.reward_std->mean);
    out += ",\"std\":";
    append_fmt17(out, m.reward_std->std);
    out += '}';
  } else {
    out += "null";
  }
  out += "}\n";
  return out;
}

Model checkpoint_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptJsonError(std::string("checkpoint: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version > kCheckpointVersion)
      throw SchemaError("checkpoint version " + std::to_string(version) +
                        " is newer than supported");
    Model m;
    m.dims = j.at("layer_dims").get<std::vector<int>>();
    if (m.dims.size() < 2) throw SchemaError("checkpoint has too few layers");
    const std::string act = j.at("activation").get<std::string>();
    if (act == "tanh")
      m.act = Activation::Tanh;
    else if (act == "relu")
      m.act = Activation::Relu;
    else
      throw SchemaError("unknown activation: " + act);
    const json& jw = j.at("weights");
    const json& jb = j.at("biases");
    const size_t L = m.dims.size() - 1;
    if (jw.size() != L || jb.size() != L)
      throw SchemaError("checkpoint layer count disagrees with layer_dims");
    m.weights.resize(L);
    m.biases.resize(L);
    for (size_t l = 0; l < L; ++l) {
      const int K = m.dims[l], O = m.dims[l + 1];
      if (static_cast<int>(jw[l].size()) != O)
        throw SchemaError("weight matrix row count mismatch");
      m.weights[l].resize((size_t)K * O);
      for (int o = 0; o < O; ++o) {
        const json& row = jw[l][o];
        if (static_cast<int>(row.size()) != K)
          throw SchemaError("weight matrix column count mismatch");
        for (int k = 0; k < K; ++k) {
          const double v = row[k].get<double>();
          if (!std::isfinite(v)) throw InvariantError("non-finite checkpoint weight");
          m.weights[l][(size_t)k * O + o] = v;
        }
      }
      m.biases[l] = jb[l].get<Vec>();
      if (static_cast<int>(m.biases[l].size()) != O)
        throw SchemaError("bias length mismatch");
      for (double v : m.biases[l])
        if (!std::isfinite(v)) throw InvariantError("non-finite checkpoint bias");
    }
    const json& rs = j.at("reward_standardization");
    if (!rs.is_null()) {
      RewardStd r{rs.at("mean").get<double>(), rs.at("std").get<double>()};
      if (!std::isfinite(r.mean) || !std::isfinite(r.std) || r.std <= 0.0)
        throw InvariantError("bad reward standardization");
      m.reward_std = r;
    }
    return m;
  } catch (const json::exception& e) {
    throw CorruptJsonError(std::string("checkpoint field: ") + e.what());
  }
}

void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  const std::string body = checkpoint_to_json(m);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw IoError("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string body((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(body);
}

}  // namespace sforge
