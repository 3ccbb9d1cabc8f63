#pragma once

#include <vector>

#include "feta/tensor.h"

// Differentiable primitives. All operate on 1-D or 2-D tensors; a 1-D tensor
// of length n behaves as a 1 x n row.
//
// Binary elementwise ops broadcast the right operand when it is a scalar
// (one element), a row [1 x n] or a column [m x 1].
namespace feta {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard product
Tensor scale(const Tensor& a, double s);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);

Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);

// axis 0 averages rows into [1 x n]; axis 1 averages columns into [m x 1].
Tensor mean(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
// Per-row normalization to zero mean and unit variance, no affine part.
Tensor layer_norm(const Tensor& a, double eps = 1e-5);
// Subgradient 0 at the origin.
Tensor frobenius_norm(const Tensor& a);

}  // namespace feta
