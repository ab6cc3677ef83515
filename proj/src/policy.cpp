#include "tua/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tua/channel.hpp"
#include "tua/error.hpp"

namespace tua {

namespace {

double log_scale(double v) { return std::copysign(std::log10(1.0 + std::abs(v)) / 10.0, v); }

Matrix one_row(std::span<const double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

}  // namespace

std::vector<double> attention_weights(std::span<const double> key, const Matrix& queries,
                                      std::span<const std::size_t> rows) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(key.size()));
  std::vector<double> scores(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto q = queries.row(rows[k]);
    double s = 0.0;
    for (std::size_t d = 0; d < key.size(); ++d) s += q[d] * key[d];
    scores[k] = s * scale;
  }
  return nn::softmax(scores);
}

std::vector<double> attention_aggregate(std::span<const double> weights, const Matrix& values,
                                        std::span<const std::size_t> rows) {
  std::vector<double> out(values.cols(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto v = values.row(rows[k]);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += weights[k] * v[d];
  }
  return out;
}

PolicyNetwork::PolicyNetwork(PolicyConfig config) : config_(config) {
  if (config_.n_sbs < 1 || config_.width == 0) throw ConfigError("policy needs n_sbs >= 1 and width > 0");
  const std::size_t n = config_.width;
  nn::add_mlp(params_, "local", config_.local_size(), n, n, local_);
  nn::add_mlp(params_, "key", 3, n, n, key_);
  nn::add_mlp(params_, "query", 3, n, n, query_);
  nn::add_mlp(params_, "value", 3, n, n, value_);
  nn::add_mlp(params_, "combine", 2 * n, n, n, combine_);
  nn::add_mlp(params_, "actor", n, config_.heads(), config_.n_actions(), actor_);
  nn::add_mlp(params_, "critic", n, config_.heads(), 1, critic_);
}

std::vector<double> PolicyNetwork::flatten_local(const LocalObservation& obs) const {
  const std::size_t a = config_.n_actions();
  if (obs.rss.size() != a || obs.aoa.size() != a)
    throw ShapeError("local observation has " + std::to_string(obs.rss.size()) + " BS entries, expected " +
                     std::to_string(a));
  std::vector<double> x(config_.local_size(), 0.0);
  if (obs.prev_action >= 0 && static_cast<std::size_t>(obs.prev_action) < a)
    x[static_cast<std::size_t>(obs.prev_action)] = 1.0;
  x[a] = log_scale(obs.prev_rate);
  x[a + 1] = log_scale(obs.prev_network_utility);
  x[a + 2] = static_cast<double>(obs.ack);
  for (std::size_t i = 0; i < a; ++i) {
    x[a + 3 + i] = obs.rss[i] > 0.0 ? watts_to_dbm(obs.rss[i]) / 100.0 : 0.0;
    x[2 * a + 3 + i] = obs.aoa[i] / std::numbers::pi;
  }
  return x;
}

std::array<double, 3> PolicyNetwork::normalize(const Descriptor& d) const {
  const Rect& r = config_.region;
  return {(d.x - r.x_min) / r.width(), (d.y - r.y_min) / r.height(), log_scale(d.rate)};
}

PolicyBatch PolicyNetwork::step_batch(std::span<const Observation> observations) const {
  PolicyBatch b;
  const std::size_t bsz = observations.size();
  std::size_t table = 0;
  for (const auto& o : observations) {
    table = std::max(table, o.ue + 1);
    for (std::size_t id : o.global.neighbor_ids) table = std::max(table, id + 1);
  }
  b.local = Matrix(bsz, config_.local_size());
  b.descriptors = Matrix(table, 3);
  b.self_row.resize(bsz);
  b.neighbor_rows.resize(bsz);
  auto put = [&](std::size_t row, const Descriptor& d) {
    const auto n = normalize(d);
    std::copy(n.begin(), n.end(), b.descriptors.row(row).begin());
  };
  for (std::size_t s = 0; s < bsz; ++s) {
    const auto& o = observations[s];
    const auto x = flatten_local(o.local);
    std::copy(x.begin(), x.end(), b.local.row(s).begin());
    put(o.ue, o.self);
    b.self_row[s] = o.ue;
    for (std::size_t k = 0; k < o.global.neighbor_ids.size(); ++k) put(o.global.neighbor_ids[k], o.global.neighbors[k]);
    b.neighbor_rows[s] = o.global.neighbor_ids;
  }
  return b;
}

PolicyBatch PolicyNetwork::sample_batch(std::span<const Observation* const> observations) const {
  PolicyBatch b;
  const std::size_t bsz = observations.size();
  std::size_t table = 0;
  for (const auto* o : observations) table += 1 + o->global.neighbors.size();
  b.local = Matrix(bsz, config_.local_size());
  b.descriptors = Matrix(table, 3);
  b.self_row.resize(bsz);
  b.neighbor_rows.resize(bsz);
  std::size_t row = 0;
  auto put = [&](const Descriptor& d) {
    const auto n = normalize(d);
    std::copy(n.begin(), n.end(), b.descriptors.row(row).begin());
    return row++;
  };
  for (std::size_t s = 0; s < bsz; ++s) {
    const auto& o = *observations[s];
    const auto x = flatten_local(o.local);
    std::copy(x.begin(), x.end(), b.local.row(s).begin());
    b.self_row[s] = put(o.self);
    for (const auto& d : o.global.neighbors) b.neighbor_rows[s].push_back(put(d));
  }
  return b;
}

PolicyOutput PolicyNetwork::forward(const PolicyBatch& batch, PolicyTape* tape) const {
  return forward(params_, batch, tape);
}

PolicyOutput PolicyNetwork::forward(const nn::ParameterStore& params, const PolicyBatch& batch,
                                    PolicyTape* tape) const {
  const std::size_t n = config_.width;
  const std::size_t bsz = batch.size();
  PolicyOutput out;
  out.local_encoding = nn::mlp_forward(params, local_, batch.local, tape ? &tape->local : nullptr);
  Matrix keys = nn::mlp_forward(params, self_net(), batch.descriptors, tape ? &tape->key : nullptr);
  Matrix queries = nn::mlp_forward(params, neighbor_net(), batch.descriptors, tape ? &tape->query : nullptr);
  Matrix values = nn::mlp_forward(params, value_, batch.descriptors, tape ? &tape->value : nullptr);

  out.aggregate = Matrix(bsz, n);
  std::vector<std::vector<double>> weights(bsz);
  for (std::size_t s = 0; s < bsz; ++s) {
    const auto& rows = batch.neighbor_rows[s];
    if (rows.empty()) continue;
    weights[s] = attention_weights(keys.row(batch.self_row[s]), queries, rows);
    const auto v = attention_aggregate(weights[s], values, rows);
    std::copy(v.begin(), v.end(), out.aggregate.row(s).begin());
  }

  Matrix z(bsz, 2 * n);
  for (std::size_t s = 0; s < bsz; ++s) {
    auto zr = z.row(s);
    std::copy(out.local_encoding.row(s).begin(), out.local_encoding.row(s).end(), zr.begin());
    std::copy(out.aggregate.row(s).begin(), out.aggregate.row(s).end(), zr.begin() + static_cast<std::ptrdiff_t>(n));
  }
  out.context = nn::mlp_forward(params, combine_, z, tape ? &tape->combine : nullptr);
  out.logits = nn::mlp_forward(params, actor_, out.context, tape ? &tape->actor : nullptr);
  out.probs = out.logits;
  nn::softmax_rows_inplace(out.probs);
  const Matrix v = nn::mlp_forward(params, critic_, out.context, tape ? &tape->critic : nullptr);
  out.values.resize(bsz);
  for (std::size_t s = 0; s < bsz; ++s) out.values[s] = v(s, 0);

  if (tape) {
    tape->keys = std::move(keys);
    tape->queries = std::move(queries);
    tape->values = std::move(values);
    tape->weights = std::move(weights);
    tape->aggregate = out.aggregate;
    tape->consumed = false;
  }
  return out;
}

void PolicyNetwork::backward(const nn::ParameterStore& params, const PolicyBatch& batch, PolicyTape& tape,
                             const Matrix& d_logits, std::span<const double> d_values,
                             nn::ParameterStore& grads) const {
  if (tape.consumed) throw std::logic_error("policy backward: tape already consumed");
  tape.consumed = true;
  const std::size_t n = config_.width;
  const std::size_t bsz = batch.size();
  if (d_logits.rows() != bsz || d_values.size() != bsz) throw ShapeError("policy backward: gradient batch mismatch");

  Matrix dv(bsz, 1);
  for (std::size_t s = 0; s < bsz; ++s) dv(s, 0) = d_values[s];
  Matrix d_context = nn::mlp_backward(params, actor_, tape.actor, d_logits, grads);
  const Matrix d_context_critic = nn::mlp_backward(params, critic_, tape.critic, dv, grads);
  for (std::size_t i = 0; i < d_context.size(); ++i) d_context.data()[i] += d_context_critic.data()[i];

  const Matrix dz = nn::mlp_backward(params, combine_, tape.combine, d_context, grads);
  Matrix du(bsz, n);
  Matrix dagg(bsz, n);
  for (std::size_t s = 0; s < bsz; ++s)
    for (std::size_t d = 0; d < n; ++d) {
      du(s, d) = dz(s, d);
      dagg(s, d) = dz(s, n + d);
    }
  nn::mlp_backward(params, local_, tape.local, du, grads);

  const std::size_t rows_total = batch.descriptors.rows();
  Matrix dkeys(rows_total, n), dqueries(rows_total, n), dvalues(rows_total, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t s = 0; s < bsz; ++s) {
    const auto& rows = batch.neighbor_rows[s];
    if (rows.empty()) continue;
    const auto& w = tape.weights[s];
    const auto g = dagg.row(s);
    const std::size_t self = batch.self_row[s];
    std::vector<double> dw(rows.size());
    double wsum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto v = tape.values.row(rows[k]);
      auto dvr = dvalues.row(rows[k]);
      double acc = 0.0;
      for (std::size_t d = 0; d < n; ++d) {
        dvr[d] += w[k] * g[d];
        acc += g[d] * v[d];
      }
      dw[k] = acc;
      wsum += w[k] * acc;
    }
    const auto key = tape.keys.row(self);
    auto dkey = dkeys.row(self);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double ds = w[k] * (dw[k] - wsum) * scale;
      if (ds == 0.0) continue;
      const auto q = tape.queries.row(rows[k]);
      auto dq = dqueries.row(rows[k]);
      for (std::size_t d = 0; d < n; ++d) {
        dq[d] += ds * key[d];
        dkey[d] += ds * q[d];
      }
    }
  }
  nn::mlp_backward(params, self_net(), tape.key, dkeys, grads);
  nn::mlp_backward(params, neighbor_net(), tape.query, dqueries, grads);
  nn::mlp_backward(params, value_, tape.value, dvalues, grads);
}

std::vector<double> PolicyNetwork::apply(const nn::Mlp& mlp, std::span<const double> input) const {
  const Matrix out = nn::mlp_forward(params_, mlp, one_row(input));
  return {out.row(0).begin(), out.row(0).end()};
}

std::vector<double> PolicyNetwork::encode_local(const LocalObservation& obs) const {
  return apply(local_, flatten_local(obs));
}

std::vector<double> PolicyNetwork::attention_scores(const Descriptor& self,
                                                    std::span<const Descriptor> neighborhood) const {
  if (neighborhood.empty()) return {};
  const auto key = apply(self_net(), normalize(self));
  Matrix input(neighborhood.size(), 3);
  for (std::size_t k = 0; k < neighborhood.size(); ++k) {
    const auto d = normalize(neighborhood[k]);
    std::copy(d.begin(), d.end(), input.row(k).begin());
  }
  const Matrix queries = nn::mlp_forward(params_, neighbor_net(), input);
  std::vector<std::size_t> rows(neighborhood.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
  return attention_weights(key, queries, rows);
}

std::vector<double> PolicyNetwork::neighbor_values(std::span<const Descriptor> neighborhood) const {
  Matrix input(neighborhood.size(), 3);
  for (std::size_t k = 0; k < neighborhood.size(); ++k) {
    const auto d = normalize(neighborhood[k]);
    std::copy(d.begin(), d.end(), input.row(k).begin());
  }
  if (neighborhood.empty()) return {};
  const Matrix v = nn::mlp_forward(params_, value_, input);
  return {v.values().begin(), v.values().end()};
}

std::vector<double> PolicyNetwork::combine_context(std::span<const double> local,
                                                   std::span<const double> aggregate) const {
  if (local.size() != config_.width || aggregate.size() != config_.width)
    throw ShapeError("combine_context expects two vectors of width " + std::to_string(config_.width));
  std::vector<double> z(local.begin(), local.end());
  z.insert(z.end(), aggregate.begin(), aggregate.end());
  return apply(combine_, z);
}

std::vector<double> PolicyNetwork::action_distribution(std::span<const double> context) const {
  return nn::softmax(apply(actor_, context));
}

double PolicyNetwork::value(std::span<const double> context) const { return apply(critic_, context).at(0); }

BsId sample_action(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (x < acc) return static_cast<BsId>(i);
  }
  // Rounding left x above the last cumulative value; pick the last nonzero entry.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<BsId>(i);
  return 0;
}

BsId greedy_action(std::span<const double> probs) {
  return static_cast<BsId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace tua
