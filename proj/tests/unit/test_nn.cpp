#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tua/error.hpp"
#include "tua/nn.hpp"

using namespace tua;
using namespace tua::nn;

namespace {

struct Net {
  ParameterStore store;
  Mlp mlp;
  Net(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
    add_mlp(store, "net", in, hidden, out, mlp);
    Rng rng(seed);
    store.initialize(rng);
  }
};

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.row(0).begin());
  return m;
}

// 0.5 * ||mlp(x)||^2 summed over the batch.
double half_sq(const ParameterStore& p, const Mlp& mlp, const Matrix& x) {
  const Matrix y = mlp_forward(p, mlp, x);
  double s = 0.0;
  for (double v : y.values()) s += 0.5 * v * v;
  return s;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveZero) {
  Net n(3, 4, 2, 1);
  n.store.set_zero();
  const Matrix y = mlp_forward(n.store, n.mlp, row({1.0, -2.0, 3.0}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, IdentityPassthroughForNonnegativeInput) {
  Net n(3, 3, 3, 1);
  n.store.set_zero();
  for (std::size_t l : {n.mlp.hidden, n.mlp.output})
    for (std::size_t i = 0; i < 3; ++i) n.store.layer(l).weight(i, i) = 1.0;
  const Matrix y = mlp_forward(n.store, n.mlp, row({0.5, 0.0, 2.0}));
  EXPECT_EQ(y(0, 0), 0.5);
  EXPECT_EQ(y(0, 1), 0.0);
  EXPECT_EQ(y(0, 2), 2.0);
}

TEST(Mlp, PureAndShapeChecked) {
  Net n(3, 5, 2, 2);
  const Matrix x = row({0.1, 0.2, 0.3});
  EXPECT_EQ(mlp_forward(n.store, n.mlp, x), mlp_forward(n.store, n.mlp, x));
  EXPECT_THROW(mlp_forward(n.store, n.mlp, row({1.0, 2.0})), ShapeError);
}

TEST(Mlp, LinearLayerGradientIsOuterProduct) {
  // Output layer gradient: dL/dW_out = upstream (x) hidden activation.
  Net n(2, 3, 2, 3);
  const Matrix x = row({0.7, -0.4});
  MlpTape tape;
  const Matrix y = mlp_forward(n.store, n.mlp, x, &tape);
  auto grads = n.store.zeros_like();
  const Matrix up = row({1.5, -2.0});
  mlp_backward(n.store, n.mlp, tape, up, grads);
  const auto& w1 = n.store.layer(n.mlp.hidden);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t h = 0; h < 3; ++h) {
      double pre = w1.bias[h];
      for (std::size_t i = 0; i < 2; ++i) pre += w1.weight(h, i) * x(0, i);
      EXPECT_NEAR(grads.layer(n.mlp.output).weight(o, h), up(0, o) * std::max(pre, 0.0), 1e-14);
    }
  (void)y;
}

TEST(Mlp, DeadUnitPassesNoGradient) {
  Net n(1, 1, 1, 4);
  n.store.layer(n.mlp.hidden).weight(0, 0) = 1.0;
  n.store.layer(n.mlp.hidden).bias[0] = 0.0;
  MlpTape tape;
  mlp_forward(n.store, n.mlp, row({-3.0}), &tape);
  auto grads = n.store.zeros_like();
  const Matrix dx = mlp_backward(n.store, n.mlp, tape, row({1.0}), grads);
  EXPECT_EQ(dx(0, 0), 0.0);
  EXPECT_EQ(grads.layer(n.mlp.hidden).weight(0, 0), 0.0);
}

TEST(Mlp, ReusedTapeThrows) {
  Net n(2, 2, 1, 5);
  MlpTape tape;
  mlp_forward(n.store, n.mlp, row({1.0, 1.0}), &tape);
  auto grads = n.store.zeros_like();
  mlp_backward(n.store, n.mlp, tape, row({1.0}), grads);
  EXPECT_THROW(mlp_backward(n.store, n.mlp, tape, row({1.0}), grads), std::logic_error);
}

TEST(Mlp, GradientCheckAndLinearity) {
  Net n(4, 6, 3, 6);
  Matrix x(5, 4);
  Rng rng(1);
  std::normal_distribution<double> nd;
  for (double& v : x.values()) v = nd(rng);
  const auto grad_of = [&](double scale) {
    MlpTape tape;
    const Matrix y = mlp_forward(n.store, n.mlp, x, &tape);
    Matrix up = y;
    for (double& v : up.values()) v *= scale;
    auto g = n.store.zeros_like();
    mlp_backward(n.store, n.mlp, tape, up, g);
    return g;
  };
  const auto g = grad_of(1.0);
  GradCheckOptions o;
  o.coordinates = 1000;
  const auto rep = gradient_check([&](const ParameterStore& p) { return half_sq(p, n.mlp, x); }, n.store, g, o);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error;
  // grad(2 L) = 2 grad(L)
  const auto g2 = grad_of(2.0);
  const auto a = g.flatten(), b = g2.flatten();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 2.0 * a[i], 1e-12 * (1.0 + std::abs(a[i])));
}

TEST(GradientCheck, QuadraticExactAndCorruptedFails) {
  ParameterStore p;
  p.add_layer("w", 5, 4);
  Rng rng(2);
  p.initialize(rng);
  for (auto& b : p.layer(0).bias) b = 0.3;
  auto g = p;  // d||w||^2 = 2w
  auto flat = p.flatten();
  for (double& v : flat) v *= 2.0;
  g.unflatten(flat);
  const LossFn loss = [](const ParameterStore& s) {
    double t = 0.0;
    for (double v : s.flatten()) t += v * v;
    return t;
  };
  GradCheckOptions o;
  const auto ok = gradient_check(loss, p, g, o);
  EXPECT_TRUE(ok.passed);
  EXPECT_LT(ok.max_rel_error, 1e-8);
  flat[3] += 0.5;
  g.unflatten(flat);
  o.coordinates = 1000;
  EXPECT_FALSE(gradient_check(loss, p, g, o).passed);
}

TEST(Softmax, Examples) {
  const double eq[] = {2.0, 2.0, 2.0, 2.0};
  for (double v : softmax(eq)) EXPECT_DOUBLE_EQ(v, 0.25);
  const double big[] = {1000.0, 0.0};
  const auto s = softmax(big);
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_GE(s[1], 0.0);
  EXPECT_TRUE(std::isfinite(s[1]));
  const double one[] = {-7.0};
  EXPECT_EQ(softmax(one)[0], 1.0);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(3);
  std::normal_distribution<double> nd(0.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(1 + t % 9), shifted;
    for (double& v : s) v = nd(rng);
    for (double v : s) shifted.push_back(v + 123.0);
    const auto p = softmax(s), q = softmax(shifted);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GT(p[i], 0.0);
      EXPECT_LE(p[i], 1.0);
      EXPECT_NEAR(p[i], q[i], 1e-12);
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ParameterStore, FlattenRoundTripAndGlorotBounds) {
  ParameterStore p;
  p.add_layer("a", 3, 4);
  p.add_layer("b", 4, 2);
  Rng rng(4);
  p.initialize(rng);
  EXPECT_EQ(p.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
  const double lim = std::sqrt(6.0 / 7.0);
  for (double v : p.layer(0).weight.values()) EXPECT_LE(std::abs(v), lim);
  for (double v : p.layer(0).bias) EXPECT_EQ(v, 0.0);
  auto q = p.zeros_like();
  q.unflatten(p.flatten());
  EXPECT_EQ(q.flatten(), p.flatten());
}

TEST(Adam, StepMovesAgainstGradientAndBumpsVersion) {
  ParameterStore p;
  p.add_layer("a", 2, 1);
  auto g = p.zeros_like();
  g.layer(0).weight(0, 0) = 1.0;
  g.layer(0).weight(0, 1) = -2.0;
  Adam adam(p, {0.1, 0.9, 0.999, 1e-8});
  adam.step(p, g);
  // First Adam step is lr * sign(g) up to epsilon.
  EXPECT_NEAR(p.layer(0).weight(0, 0), -0.1, 1e-6);
  EXPECT_NEAR(p.layer(0).weight(0, 1), 0.1, 1e-6);
  EXPECT_EQ(p.version(), 1u);
}

TEST(ClipGradNorm, Rescales) {
  ParameterStore g;
  g.add_layer("a", 2, 1);
  g.layer(0).weight(0, 0) = 3.0;
  g.layer(0).weight(0, 1) = 4.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(l2_norm(g), 1.0, 1e-15);
}

TEST(Checkpoint, BitExactRoundTripAndCorruption) {
  Net n(7, 9, 4, 8);
  n.store.set_version(42);
  const auto path = std::filesystem::temp_directory_path() / "tua_test_ckpt.bin";
  save_checkpoint(path, n.store, {{"note", "x"}});
  const auto ck = load_checkpoint(path);
  EXPECT_EQ(ck.params.flatten(), n.store.flatten());
  EXPECT_EQ(ck.params.version(), 42u);
  EXPECT_EQ(ck.meta["note"], "x");
  EXPECT_EQ(parameter_hash(ck.params), parameter_hash(n.store));

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(-3, std::ios::end);
  f.put('\x7f');
  f.close();
  EXPECT_THROW(load_checkpoint(path), Error);
  std::filesystem::remove(path);
}
