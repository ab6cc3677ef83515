#include <gtest/gtest.h>

#include "tua/kernels.hpp"
#include "tua/rng.hpp"

using namespace tua;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (double& v : m.values()) v = nd(rng);
  return m;
}

}  // namespace

// Sizes straddle the OpenMP work threshold so both branches are exercised.
class DenseKernels : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(DenseKernels, ForwardMatchesReferenceAndHand) {
  const auto [b, in, out] = GetParam();
  Rng rng(1);
  const Matrix x = random_matrix(b, in, rng), w = random_matrix(out, in, rng);
  std::vector<double> bias(out);
  for (int o = 0; o < out; ++o) bias[o] = 0.1 * o;
  Matrix y(b, out), y_ref(b, out);
  kernels::dense_forward(x, w, bias, y);
  kernels::reference::dense_forward(x, w, bias, y_ref);
  for (int r = 0; r < b; ++r)
    for (int o = 0; o < out; ++o) {
      double s = bias[o];
      for (int i = 0; i < in; ++i) s += x(r, i) * w(o, i);
      EXPECT_NEAR(y(r, o), s, 1e-12 * (1.0 + std::abs(s)));
      EXPECT_NEAR(y(r, o), y_ref(r, o), 1e-12 * (1.0 + std::abs(s)));
    }
}

TEST_P(DenseKernels, BackwardMatchesReference) {
  const auto [b, in, out] = GetParam();
  Rng rng(2);
  const Matrix x = random_matrix(b, in, rng), w = random_matrix(out, in, rng), dy = random_matrix(b, out, rng);
  Matrix dx(b, in), dw(out, in, 0.5), dx_ref(b, in), dw_ref(out, in, 0.5);
  std::vector<double> db(out, 0.25), db_ref(out, 0.25);
  kernels::dense_backward(x, w, dy, dx, dw, db);
  kernels::reference::dense_backward(x, w, dy, dx_ref, dw_ref, db_ref);
  for (std::size_t i = 0; i < dx.size(); ++i) EXPECT_NEAR(dx.values()[i], dx_ref.values()[i], 1e-10);
  for (std::size_t i = 0; i < dw.size(); ++i) EXPECT_NEAR(dw.values()[i], dw_ref.values()[i], 1e-10);
  for (int o = 0; o < out; ++o) EXPECT_NEAR(db[o], db_ref[o], 1e-10);
  // dw accumulates upstream (x) input on top of its previous contents.
  double s = 0.5;
  for (int r = 0; r < b; ++r) s += dy(r, 0) * x(r, 0);
  EXPECT_NEAR(dw(0, 0), s, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Sizes, DenseKernels,
                         ::testing::Values(std::make_tuple(1, 3, 2), std::make_tuple(7, 16, 9),
                                           std::make_tuple(64, 64, 128), std::make_tuple(200, 128, 256)));

TEST(Relu, ForwardBackward) {
  Matrix m(1, 4);
  m(0, 0) = -1.0;
  m(0, 1) = 0.0;
  m(0, 2) = 2.0;
  m(0, 3) = -0.5;
  const Matrix pre = m;
  kernels::relu_inplace(m);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(0, 2), 2.0);
  Matrix dy(1, 4, 1.0);
  kernels::relu_backward_inplace(pre, dy);
  EXPECT_EQ(dy(0, 0), 0.0);
  EXPECT_EQ(dy(0, 1), 0.0);
  EXPECT_EQ(dy(0, 2), 1.0);
  EXPECT_EQ(dy(0, 3), 0.0);
}
