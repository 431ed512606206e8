#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "feats/graph.hpp"
#include "feats/tensor.hpp"

namespace feats {

// Eager helpers on plain tensors.
Tensor softmax_stable(const Tensor& v);
Tensor relu(const Tensor& v);
Tensor sigmoid(const Tensor& v);
double sigmoid(double x);
Tensor matmul(const Tensor& a, const Tensor& b);

// Differentiable ops. Matrices are row-major [rows x cols]; a rank-1 tensor is
// treated as a single row.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// a[r x c] + bias[c] on every row.
Var add_bias(Var a, Var bias);
// a[r x c] * v[c] on every row.
Var scale_columns(Var a, Var v);
Var relu(Var a);
Var sigmoid(Var a);
// Softmax along the last axis of every row.
Var softmax_rows(Var a);
// [r x c], [r x c] -> [r x 1]
Var row_dot(Var a, Var b);
Var row_sum(Var a);
Var sum(Var a);
Var abs_sum(Var a);
Var square_sum(Var a);
Var reshape(Var a, Shape shape);

// x[B x (series*length)] -> [(B*length) x (series*(2*tau+1))]. Row (b, k) holds the
// window centred at time k with column index series*(2*tau+1) + (l + tau); cells
// whose time k+l falls outside [0, length) are zero.
Var unfold_windows(Var x, std::size_t series, std::size_t length, std::size_t tau);

// Picks columns of x[r x c]; an index of -1 yields a zero column.
Var select_columns(Var x, std::vector<std::ptrdiff_t> columns);
Var concat_columns(std::span<const Var> parts);

// Weighted mean losses. `weights` is either empty (all ones) or one entry per row.
Var mse_loss(Var predictions, const Tensor& targets, const Tensor& weights);
// Binary cross-entropy on logits; probabilities clamped to [1e-12, 1-1e-12].
Var bce_with_logits_loss(Var logits, const Tensor& targets, const Tensor& weights);
// Categorical cross-entropy on logits[B x K] with integer class labels.
Var softmax_cross_entropy_loss(Var logits, std::span<const std::int64_t> labels, const Tensor& weights);

inline constexpr double kProbabilityClamp = 1e-12;

}  // namespace feats
