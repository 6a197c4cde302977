#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

// Linear algebra. All matrix ops take 2-D tensors and throw ShapeError naming
// both operand shapes when they do not conform.
Tensor matmul(const Tensor& a, const Tensor& b);
// x [m, in] * weight[out, in]^T + bias[out]. bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// Elementwise. `b` may also be a vector matching the last dimension of `a`,
// in which case it is broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
// Half-open range [begin, end) along `axis` of a 1-D or 2-D tensor.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Max-subtracted softmax along `axis` (0 or 1 for matrices, 0 for vectors).
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

// -log softmax(logits)[target] for a vector of logits.
Tensor cross_entropy(const Tensor& logits, std::size_t target);
// Sum over rows of cross_entropy(logits[r], targets[r]).
Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets);

// Row-wise normalisation of the last dimension.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon);
// Exact erf form: 0.5 x (1 + erf(x / sqrt 2)).
Tensor gelu(const Tensor& x);
// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

}  // namespace jointnlu
