#include "tua/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tua/error.hpp"
#include "tua/kernels.hpp"

namespace tua::nn {

std::size_t ParameterStore::add_layer(std::string name, std::size_t in, std::size_t out) {
  layers_.push_back({std::move(name), Matrix(out, in), std::vector<double>(out, 0.0)});
  return layers_.size() - 1;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> ParameterStore::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void ParameterStore::unflatten(std::span<const double> values) {
  if (values.size() != parameter_count())
    throw ShapeError("unflatten: got " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(parameter_count()));
  std::size_t pos = 0;
  for (auto& l : layers_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.weight.size(), l.weight.data());
    pos += l.weight.size();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore z;
  for (const auto& l : layers_) z.add_layer(l.name, l.in(), l.out());
  return z;
}

void ParameterStore::set_zero() {
  for (auto& l : layers_) {
    l.weight.fill(0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

bool ParameterStore::same_shapes(const ParameterStore& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].in() != other.layers_[i].in() || layers_[i].out() != other.layers_[i].out()) return false;
  return true;
}

void ParameterStore::initialize(Rng& rng) {
  for (auto& l : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in() + l.out()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : l.weight.values()) w = u(rng);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

double& ParameterStore::at_flat(std::size_t index) {
  for (auto& l : layers_) {
    if (index < l.weight.size()) return l.weight.data()[index];
    index -= l.weight.size();
    if (index < l.bias.size()) return l.bias[index];
    index -= l.bias.size();
  }
  throw std::out_of_range("parameter index out of range");
}

std::size_t add_mlp(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                    std::size_t out, Mlp& mlp) {
  mlp.hidden = store.add_layer(name + ".0", in, hidden);
  mlp.output = store.add_layer(name + ".1", hidden, out);
  return mlp.output;
}

Matrix mlp_forward(const ParameterStore& params, const Mlp& mlp, const Matrix& input, MlpTape* tape) {
  const Layer& l0 = params.layer(mlp.hidden);
  const Layer& l1 = params.layer(mlp.output);
  if (input.cols() != l0.in())
    throw ShapeError(l0.name + ": input width " + std::to_string(input.cols()) + ", expected " +
                     std::to_string(l0.in()));
  Matrix pre, out;
  kernels::dense_forward(input, l0.weight, l0.bias, pre);
  Matrix hidden = pre;
  kernels::relu_inplace(hidden);
  kernels::dense_forward(hidden, l1.weight, l1.bias, out);
  if (tape) {
    tape->input = input;
    tape->pre_hidden = std::move(pre);
    tape->hidden = std::move(hidden);
    tape->consumed = false;
  }
  return out;
}

Matrix mlp_backward(const ParameterStore& params, const Mlp& mlp, MlpTape& tape, const Matrix& upstream,
                    ParameterStore& grads) {
  if (tape.consumed) throw std::logic_error("mlp_backward: tape already consumed");
  tape.consumed = true;
  const Layer& l0 = params.layer(mlp.hidden);
  const Layer& l1 = params.layer(mlp.output);
  Layer& g0 = grads.layer(mlp.hidden);
  Layer& g1 = grads.layer(mlp.output);
  Matrix d_hidden, d_input;
  kernels::dense_backward(tape.hidden, l1.weight, upstream, d_hidden, g1.weight, g1.bias);
  kernels::relu_backward_inplace(tape.pre_hidden, d_hidden);
  kernels::dense_backward(tape.input, l0.weight, d_hidden, d_input, g0.weight, g0.bias);
  return d_input;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

void softmax_rows_inplace(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    auto p = softmax(row);
    std::copy(p.begin(), p.end(), row.begin());
  }
}

double l2_norm(const ParameterStore& grads) {
  double s = 0.0;
  for (const auto& l : grads.layers()) {
    for (double v : l.weight.values()) s += v * v;
    for (double v : l.bias) s += v * v;
  }
  return std::sqrt(s);
}

double clip_grad_norm(ParameterStore& grads, double max_norm) {
  const double norm = l2_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.layer_count(); ++i) {
      auto& l = grads.layer(i);
      for (double& v : l.weight.values()) v *= scale;
      for (double& v : l.bias) v *= scale;
    }
  }
  return norm;
}

Adam::Adam(const ParameterStore& shapes, AdamOptions options)
    : options_(options), m_(shapes.zeros_like()), v_(shapes.zeros_like()) {}

void Adam::step(ParameterStore& params, const ParameterStore& grads) {
  if (!params.same_shapes(grads) || !params.same_shapes(m_)) throw ShapeError("Adam: shape mismatch");
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto apply = [&](std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      p[k] -= options_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  };
  for (std::size_t i = 0; i < params.layer_count(); ++i) {
    auto& P = params.layer(i);
    const auto& G = grads.layer(i);
    auto& M = m_.layer(i);
    auto& V = v_.layer(i);
    apply(P.weight.values(), G.weight.values(), M.weight.values(), V.weight.values());
    apply(P.bias, G.bias, M.bias, V.bias);
  }
  params.bump_version();
}

GradCheckReport gradient_check(const LossFn& loss, const ParameterStore& params, const ParameterStore& analytic,
                               const GradCheckOptions& options) {
  if (!params.same_shapes(analytic)) throw ShapeError("gradient_check: analytic gradient shape mismatch");
  const std::size_t n = params.parameter_count();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.coordinates < n) {
    Rng rng(options.seed);
    std::vector<std::size_t> picked;
    std::sample(coords.begin(), coords.end(), std::back_inserter(picked), options.coordinates, rng);
    coords = std::move(picked);
  }
  const auto flat_grad = analytic.flatten();
  ParameterStore probe = params;
  GradCheckReport rep;
  for (std::size_t idx : coords) {
    double& p = probe.at_flat(idx);
    const double saved = p;
    p = saved + options.step;
    const double up = loss(probe);
    p = saved - options.step;
    const double down = loss(probe);
    p = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = flat_grad[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++rep.checked;
    if (rel > rep.max_rel_error || rep.checked == 1) {
      rep.max_rel_error = rel;
      rep.worst_index = idx;
      rep.worst_analytic = a;
      rep.worst_numeric = numeric;
    }
  }
  rep.passed = rep.checked > 0 && rep.max_rel_error < options.tolerance;
  return rep;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'T', 'U', 'A', 'C', 'K', 'P', 'T', '\0'};

void put_le64(std::vector<unsigned char>& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

double get_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_le32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_le32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::vector<unsigned char> payload(const ParameterStore& params) {
  std::vector<unsigned char> out;
  out.reserve(params.parameter_count() * 8);
  for (const auto& l : params.layers()) {
    for (double v : l.weight.values()) put_le64(out, v);
    for (double v : l.bias) put_le64(out, v);
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::uint64_t parameter_hash(const ParameterStore& params) { return fnv1a(payload(params)); }

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params, const nlohmann::json& meta) {
  const auto body = payload(params);
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["meta"] = meta;
  header["version"] = params.version();
  header["payload_hash"] = hex64(fnv1a(body));
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : params.layers()) layers.push_back({{"name", l.name}, {"in", l.in()}, {"out", l.out()}});
  header["layers"] = layers;
  const std::string text = header.dump();

  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_le32(out, kCheckpointFormat);
  put_le32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), body.begin(), body.end());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw Error("not a checkpoint: " + path.string());
  const std::uint32_t format = get_le32(bytes.data() + 8);
  if (format != kCheckpointFormat) throw Error("unsupported checkpoint format " + std::to_string(format));
  const std::uint32_t hlen = get_le32(bytes.data() + 12);
  if (16 + static_cast<std::size_t>(hlen) > bytes.size()) throw Error("truncated checkpoint header");
  const auto header =
      nlohmann::json::parse(std::string(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(hlen)));

  Checkpoint ck;
  for (const auto& l : header.at("layers"))
    ck.params.add_layer(l.at("name").get<std::string>(), l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>());
  const std::size_t offset = 16 + hlen;
  const std::size_t expected = ck.params.parameter_count() * 8;
  if (bytes.size() - offset != expected)
    throw Error("checkpoint payload has " + std::to_string(bytes.size() - offset) + " bytes, expected " +
                std::to_string(expected));
  const std::span<const unsigned char> body(bytes.data() + offset, expected);
  ck.payload_hash = fnv1a(body);
  if (hex64(ck.payload_hash) != header.at("payload_hash").get<std::string>())
    throw Error("checkpoint hash mismatch in " + path.string());

  std::vector<double> values(ck.params.parameter_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_le64(body.data() + 8 * i);
  ck.params.unflatten(values);
  ck.params.set_version(header.at("version").get<std::uint64_t>());
  ck.meta = header.at("meta");
  return ck;
}

}  // namespace tua::nn
