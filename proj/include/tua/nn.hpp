#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tua/matrix.hpp"
#include "tua/rng.hpp"

namespace tua::nn {

struct Layer {
  std::string name;
  Matrix weight;             // out x in
  std::vector<double> bias;  // out

  std::size_t in() const { return weight.cols(); }
  std::size_t out() const { return weight.rows(); }
};

// Ordered set of affine layers; the flattened vector is the policy's w.
class ParameterStore {
 public:
  std::size_t add_layer(std::string name, std::size_t in, std::size_t out);

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::span<const Layer> layers() const { return layers_; }

  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);

  // Same shapes, all zeros, version 0.
  ParameterStore zeros_like() const;
  void set_zero();
  bool same_shapes(const ParameterStore& other) const;

  // Glorot-uniform weights, zero biases.
  void initialize(Rng& rng);

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  // Flat-index access for finite differences.
  double& at_flat(std::size_t index);

 private:
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

// affine -> ReLU -> affine, referencing two layers of a store.
struct Mlp {
  std::size_t hidden = 0;
  std::size_t output = 0;
};

std::size_t add_mlp(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                    std::size_t out, Mlp& mlp);

// Activations cached by one forward pass; consumed by exactly one backward.
struct MlpTape {
  Matrix input;
  Matrix pre_hidden;
  Matrix hidden;
  bool consumed = false;
};

// Batched forward, one sample per row. Throws ShapeError on input width mismatch.
Matrix mlp_forward(const ParameterStore& params, const Mlp& mlp, const Matrix& input, MlpTape* tape = nullptr);

// Accumulates parameter gradients into `grads`; returns d(loss)/d(input).
// Throws std::logic_error if the tape was already consumed.
Matrix mlp_backward(const ParameterStore& params, const Mlp& mlp, MlpTape& tape, const Matrix& upstream,
                    ParameterStore& grads);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> scores);
void softmax_rows_inplace(Matrix& m);

double l2_norm(const ParameterStore& grads);
// Rescales so that the global L2 norm is at most max_norm; returns the pre-clip norm.
double clip_grad_norm(ParameterStore& grads, double max_norm);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const ParameterStore& shapes, AdamOptions options);

  // Applies one ascent-free descent step and bumps the parameter version.
  void step(ParameterStore& params, const ParameterStore& grads);
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  ParameterStore m_;
  ParameterStore v_;
  std::uint64_t t_ = 0;
};

struct GradCheckOptions {
  std::size_t coordinates = 200;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error uses max(|analytic|, |numeric|, abs_floor) as denominator.
  double abs_floor = 1e-7;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  bool passed = false;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossFn = std::function<double(const ParameterStore&)>;

// Central differences on a random subset of coordinates (all of them when the
// store is smaller than the requested count).
GradCheckReport gradient_check(const LossFn& loss, const ParameterStore& params, const ParameterStore& analytic,
                               const GradCheckOptions& options);

// Checkpoint: magic, format version, JSON header (shapes + caller metadata +
// payload hash), then each layer's weights and bias as little-endian float64.
inline constexpr std::uint32_t kCheckpointFormat = 1;

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t parameter_hash(const ParameterStore& params);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const nlohmann::json& meta);

struct Checkpoint {
  ParameterStore params;
  nlohmann::json meta;
  std::uint64_t payload_hash = 0;
};

// Throws Error on bad magic, unknown format or payload hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tua::nn
