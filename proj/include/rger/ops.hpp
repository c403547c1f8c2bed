#pragma once

#include <vector>

#include "rger/tensor.hpp"

namespace rger::ops {

// Forward ops. Every op validates shapes (ShapeError names the op and the
// offending shapes), produces finite outputs on finite inputs, and records
// a node whenever grad mode is on and any input requires grad.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// add/sub accept equal shapes, a 1xC row vector broadcast over rows, or a
// 1x1 scalar broadcast over everything.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);

// mul: elementwise with the same broadcast rules as add.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
// scale by a trainable 1x1 tensor
Tensor scale(const Tensor& a, const Tensor& c);

Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// Square score matrix; row t is softmaxed over columns 0..t, rest zero.
Tensor causal_softmax(const Tensor& a);

// Row-wise layer norm, epsilon 1e-5, no affine.
Tensor layer_norm_rows(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

Tensor mean_all(const Tensor& a);  // 1x1
Tensor sum_all(const Tensor& a);   // 1x1
Tensor mean_rows(const Tensor& a); // column means, 1xC

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor slice_cols(const Tensor& a, int c0, int c1);

// table: VxD; one output row per id.
Tensor embed_lookup(const Tensor& table, const std::vector<int>& ids);

// out[r,0] = a[r, ids[r]]
Tensor pick_per_row(const Tensor& a, const std::vector<int>& ids);

constexpr double kLayerNormEps = 1e-5;

}  // namespace rger::ops
