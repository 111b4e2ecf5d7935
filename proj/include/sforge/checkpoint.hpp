#pragma once

#include <string>

#include "sforge/mlp.hpp"

namespace sforge {

// Checkpoint JSON: {version, layer_dims, activation, weights, biases,
// reward_standardization}.  Weight matrices are nested output-major
// (weights[l][o][k]) in the file; floats carry 17 significant digits.
std::string checkpoint_to_json(const Model& m);
Model checkpoint_from_json(const std::string& text);

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace sforge
