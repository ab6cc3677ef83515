#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "tua/env.hpp"
#include "tua/matrix.hpp"
#include "tua/nn.hpp"
#include "tua/rng.hpp"

namespace tua {

struct PolicyConfig {
  int n_sbs = 3;
  std::size_t width = 128;      // n: encoding width
  std::size_t head_width = 0;   // actor/critic hidden width, 0 means 2n
  // false: query from the neighbor, key from the UE itself (q_k k_j^T).
  // true: the more common self-query convention.
  bool self_query = false;
  Rect region{0.0, 0.0, 200.0, 200.0};

  std::size_t n_actions() const { return static_cast<std::size_t>(n_sbs) + 1; }
  std::size_t heads() const { return head_width == 0 ? 2 * width : head_width; }
  // one-hot previous action, rate, utility, ack, RSS and AoA per BS
  std::size_t local_size() const { return 3 * n_actions() + 3; }
};

// Normalized inputs for a batch of agents. Descriptor rows may be shared
// between samples (one table per environment step) or private per sample.
struct PolicyBatch {
  Matrix local;                                   // B x l
  Matrix descriptors;                             // D x 3
  std::vector<std::size_t> self_row;              // B
  std::vector<std::vector<std::size_t>> neighbor_rows;  // B lists into descriptors

  std::size_t size() const { return self_row.size(); }
};

struct PolicyTape {
  nn::MlpTape local, key, query, value, combine, actor, critic;
  Matrix keys, queries, values;        // D x n
  std::vector<std::vector<double>> weights;  // attention weights per sample
  Matrix aggregate;                    // B x n
  bool consumed = false;
};

struct PolicyOutput {
  Matrix local_encoding;  // u, B x n
  Matrix aggregate;       // v, B x n
  Matrix context;         // c, B x n
  Matrix logits;          // B x (N_s + 1)
  Matrix probs;
  std::vector<double> values;
};

// Scaled dot-product scores of one key against a set of query rows, softmaxed.
std::vector<double> attention_weights(std::span<const double> key, const Matrix& queries,
                                      std::span<const std::size_t> rows);

// Convex combination of value rows; zero vector when `rows` is empty.
std::vector<double> attention_aggregate(std::span<const double> weights, const Matrix& values,
                                        std::span<const std::size_t> rows);

// Shared by every UE: local encoder f, neighbor encoders g_k, g_q, g_v,
// combiner h, actor and critic heads.
class PolicyNetwork {
 public:
  explicit PolicyNetwork(PolicyConfig config);

  const PolicyConfig& config() const { return config_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  void initialize(Rng& rng) { params_.initialize(rng); }

  std::vector<double> flatten_local(const LocalObservation& obs) const;
  std::array<double, 3> normalize(const Descriptor& d) const;

  // One table row per UE id; for observations taken at the same step.
  PolicyBatch step_batch(std::span<const Observation> observations) const;
  // Private descriptor rows per sample; for training minibatches.
  PolicyBatch sample_batch(std::span<const Observation* const> observations) const;

  PolicyOutput forward(const PolicyBatch& batch, PolicyTape* tape = nullptr) const;
  PolicyOutput forward(const nn::ParameterStore& params, const PolicyBatch& batch, PolicyTape* tape) const;

  // Accumulates into grads. d_logits: B x A, d_values: B.
  void backward(const nn::ParameterStore& params, const PolicyBatch& batch, PolicyTape& tape,
                const Matrix& d_logits, std::span<const double> d_values, nn::ParameterStore& grads) const;

  // Single-agent views of the same computation.
  std::vector<double> encode_local(const LocalObservation& obs) const;
  std::vector<double> attention_scores(const Descriptor& self, std::span<const Descriptor> neighborhood) const;
  std::vector<double> neighbor_values(std::span<const Descriptor> neighborhood) const;  // row-major m x n
  std::vector<double> combine_context(std::span<const double> local, std::span<const double> aggregate) const;
  std::vector<double> action_distribution(std::span<const double> context) const;
  double value(std::span<const double> context) const;

 private:
  std::vector<double> apply(const nn::Mlp& mlp, std::span<const double> input) const;
  const nn::Mlp& self_net() const { return config_.self_query ? query_ : key_; }
  const nn::Mlp& neighbor_net() const { return config_.self_query ? key_ : query_; }

  PolicyConfig config_;
  nn::ParameterStore params_;
  nn::Mlp local_, key_, query_, value_, combine_, actor_, critic_;
};

BsId sample_action(std::span<const double> probs, Rng& rng);
BsId greedy_action(std::span<const double> probs);
double entropy(std::span<const double> probs);

}  // namespace tua
