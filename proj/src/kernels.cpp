#include "tua/kernels.hpp"

#include <cassert>

namespace tua::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

inline double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  const std::size_t rows = x.rows(), in = x.cols(), out = w.rows();
  assert(w.cols() == in && b.size() == out);
  if (y.rows() != rows || y.cols() != out) y = Matrix(rows, out);
  const bool par = rows * in * out >= kParallelWork;
#pragma omp parallel for if (par) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) yr[o] = b[o] + dot(xr, w.data() + o * in, in);
  }
}

void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw,
                    std::span<double> db) {
  const std::size_t rows = x.rows(), in = x.cols(), out = w.rows();
  assert(dy.rows() == rows && dy.cols() == out);
  if (dx.rows() != rows || dx.cols() != in) dx = Matrix(rows, in);
  const bool par = rows * in * out >= kParallelWork;

#pragma omp parallel for if (par) schedule(static)
  for (std::size_t r = 0; r < rows; ++r) {
    double* dxr = dx.data() + r * in;
    const double* dyr = dy.data() + r * out;
#pragma omp simd
    for (std::size_t k = 0; k < in; ++k) dxr[k] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      const double* wo = w.data() + o * in;
#pragma omp simd
      for (std::size_t k = 0; k < in; ++k) dxr[k] += g * wo[k];
    }
  }

  // Each thread owns whole rows of dw, so there is no write sharing.
#pragma omp parallel for if (par) schedule(static)
  for (std::size_t o = 0; o < out; ++o) {
    double* dwo = dw.data() + o * in;
    double bsum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double g = dy(r, o);
      bsum += g;
      if (g == 0.0) continue;
      const double* xr = x.data() + r * in;
#pragma omp simd
      for (std::size_t k = 0; k < in; ++k) dwo[k] += g * xr[k];
    }
    db[o] += bsum;
  }
}

void relu_inplace(Matrix& m) {
  for (double& v : m.values())
    if (v < 0.0) v = 0.0;
}

void relu_backward_inplace(const Matrix& pre, Matrix& dy) {
  auto p = pre.values();
  auto d = dy.values();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(p[i] > 0.0)) d[i] = 0.0;
}

namespace reference {

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  y = Matrix(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double acc = b[o];
      for (std::size_t k = 0; k < x.cols(); ++k) acc += x(r, k) * w(o, k);
      y(r, o) = acc;
    }
}

void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw,
                    std::span<double> db) {
  dx = Matrix(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double g = dy(r, o);
      db[o] += g;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        dx(r, k) += g * w(o, k);
        dw(o, k) += g * x(r, k);
      }
    }
}

}  // namespace reference

}  // namespace tua::kernels
