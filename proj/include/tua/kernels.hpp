#pragma once

#include <span>

#include "tua/matrix.hpp"

// Dense-layer kernels. The default versions split rows across OpenMP
// threads and vectorize the inner products; `reference` holds the plain
// serial loops they are tested and benchmarked against.
namespace tua::kernels {

// y = x * w^T + b        x: (B x in), w: (out x in), y: (B x out)
void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y);

// dx = dy * w (overwritten), dw += dy^T * x, db += colsum(dy)
void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw,
                    std::span<double> db);

void relu_inplace(Matrix& m);

// dy *= (pre > 0)
void relu_backward_inplace(const Matrix& pre, Matrix& dy);

namespace reference {

void dense_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y);
void dense_backward(const Matrix& x, const Matrix& w, const Matrix& dy, Matrix& dx, Matrix& dw,
                    std::span<double> db);

}  // namespace reference

}  // namespace tua::kernels
