#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sforge/design_space.hpp"
#include "sforge/rng.hpp"

namespace sforge {

enum class Activation { Tanh, Relu };

// Affine transform applied to training targets; stored with the model so a
// checkpoint predicts in original reward units.
struct RewardStd {
  double mean = 0.0;
  double std = 1.0;
};

// Fully connected net: dims[0] inputs, three hidden layers, scalar output,
// no output activation.  Weight matrices are stored input-major: weights[l]
// holds dims[l] rows of dims[l+1] values (entry [k*out + o] is the weight
// from input k to output o).  Every hot kernel walks rows of that layout;
// the on-disk checkpoint uses the conventional output-major nesting and the
// two are transposed at the serialization boundary.
struct Model {
  std::vector<int> dims;
  std::vector<Vec> weights;
  std::vector<Vec> biases;
  Activation act = Activation::Tanh;
  std::optional<RewardStd> reward_std;
};

enum class InitMode { Scaled, Fixed };

struct TrainConfig {
  int iters = 1000;
  int batch = 8;
  double lr = 0.01;
  double weight_decay = 0.1;
  double huber_delta = 1.0;
  Activation act = Activation::Tanh;
  InitMode init_mode = InitMode::Scaled;  // Scaled: sigma = 1/sqrt(fan_in)
  double init_sigma = 0.05;               // used by Fixed mode
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool standardize = false;
};

// Standard reward-model shape: [d_in, 512, 512, 512, 1].
Model init_model(int d_in, const TrainConfig& cfg, Rng& rng);
// Arbitrary layer sizes (testing, toy problems).
Model init_model_dims(std::vector<int> dims, const TrainConfig& cfg, Rng& rng);

double forward(const Model& m, const Vec& z);

// X is row-major n x d_in; out receives n values.
void forward_batch(const Model& m, const double* X, int n, double* out);

// Returns (loss, dloss/dpred) for one prediction.
std::pair<double, double> huber(double pred, double target, double delta);

struct Grads {
  std::vector<Vec> weights;  // same shapes/layout as Model
  std::vector<Vec> biases;
};

// Mean Huber loss over the batch and its exact reverse-mode gradient.
double grad_params(const Model& m, const std::vector<Vec>& inputs, const Vec& targets,
                   double huber_delta, Grads& out);

// d forward / d z at a single point.
Vec grad_input(const Model& m, const Vec& z);

/// Batched variant: fills fvals (n) and gz (row-major n x d_in).
void grad_input_batch(const Model& m, const double* X, int n, double* fvals, double* gz);

struct AdamWState {
  std::vector<Vec> m_w, v_w, m_b, v_b;  // layouts match Model tensors
  int64_t step = 0;
  double beta1_pow = 1.0;  // beta1^step, maintained incrementally
  double beta2_pow = 1.0;
};

AdamWState make_adamw_state(const Model& m);

// Decoupled weight decay: theta <- theta*(1 - lr*wd) - lr * mhat/(sqrt(vhat)+eps).
void adamw_step(Model& m, const Grads& g, AdamWState& st, const TrainConfig& cfg);

struct Dataset {
  int n = 0;
  int d = 0;
  Vec X;  // row-major n x d
  Vec y;  // n
};

// Runs exactly cfg.iters minibatch AdamW steps on mean Huber loss, sampling
// batches uniformly with replacement.  Equivalent to composing grad_params
// and adamw_step but executes a fused single-pass update per layer.  If
// cfg.standardize is set (or the model already carries a reward transform,
// e.g. a warm checkpoint), targets are standardized and the transform is
// recorded on the model.
void fit_adamw(Model& m, const Dataset& data, const TrainConfig& cfg, Rng& rng);

double mean_huber_loss(const Model& m, const Dataset& data, double delta);

// forward() mapped back to reward units via the model's stored transform.
double predict_reward(const Model& m, const Vec& z);

}  // namespace sforge
