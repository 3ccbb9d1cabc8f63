#include "feta/coeff_gnn.h"

#include <cmath>

#include "feta/errors.h"
#include "feta/ops.h"

namespace feta {

namespace {

Tensor gaussian(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, stddev);
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = nd(rng);
  return t;
}

}  // namespace

std::vector<Tensor> CoeffGnnParams::tensors() const {
  std::vector<Tensor> out = w_p;
  out.insert(out.end(), {w1, b1, w2, b2});
  return out;
}

CoeffGnnParams coeff_gnn_init(std::size_t order, std::size_t layers, std::mt19937_64& rng) {
  const std::size_t k1 = order + 1;
  const double s = 1.0 / std::sqrt(static_cast<double>(k1));
  CoeffGnnParams p;
  for (std::size_t l = 0; l < layers; ++l) p.w_p.push_back(gaussian({k1, k1}, s, rng));
  p.w1 = gaussian({k1, k1}, s, rng);
  p.b1 = Tensor::full({1, k1}, 0.01);  // off the ReLU kink when a state column is dead
  p.w2 = gaussian({k1, k1}, 1e-2, rng);
  p.b2 = Tensor::zeros({1, k1});
  p.b2[0] = 1.0;
  return p;
}

Tensor attention_to_laplacian(const Tensor& c_head) {
  if (c_head.dim() != 2 || c_head.rows() != c_head.cols()) {
    throw DimensionError("attention_to_laplacian: expected a square map, got " + shape_str(c_head.shape()));
  }
  const std::size_t n = c_head.rows();
  const Tensor eye = Tensor::eye(n);
  Tensor a = add(scale(add(c_head, transpose(c_head)), 0.5), eye);
  Tensor degree = matmul(a, Tensor::full({n, 1}, 1.0));
  // The self-loop keeps every degree at least 1.
  Tensor inv_sqrt = exp(scale(log(degree), -0.5));
  return sub(eye, mul(mul(a, inv_sqrt), transpose(inv_sqrt)));
}

Tensor coeff_initial_state(std::size_t n, std::size_t order) { return Tensor::full({n, order + 1}, 1.0); }

Tensor coeff_message_pass(const CoeffGnnParams& params, const Tensor& l_att, const Tensor& state,
                          std::size_t layer) {
  if (layer >= params.w_p.size()) {
    throw DimensionError("coeff_message_pass: layer " + std::to_string(layer) + " of " +
                         std::to_string(params.w_p.size()));
  }
  const Tensor& w = params.w_p[layer];
  if (state.dim() != 2 || state.cols() != w.rows()) {
    throw DimensionError("coeff_message_pass: state " + shape_str(state.shape()) + " does not match W_p " +
                         shape_str(w.shape()));
  }
  return relu(matmul(matmul(l_att, state), w));
}

FilterCoefficients coeff_readout(const CoeffGnnParams& params, const Tensor& state) {
  if (state.dim() != 2 || state.rows() == 0) {
    throw DimensionError("coeff_readout: need at least one node state, got " + shape_str(state.shape()));
  }
  if (state.cols() != params.w1.rows()) {
    throw DimensionError("coeff_readout: state width " + std::to_string(state.cols()) + ", readout expects " +
                         std::to_string(params.w1.rows()));
  }
  Tensor pooled = mean(state, 0);
  Tensor hidden = relu(add(matmul(pooled, params.w1), params.b1));
  return {add(matmul(hidden, params.w2), params.b2)};
}

FilterCoefficients coefficients_from_attention(const CoeffGnnParams& params, const Tensor& c_head) {
  Tensor l_att = attention_to_laplacian(c_head);
  Tensor state = coeff_initial_state(c_head.rows(), params.order());
  for (std::size_t l = 0; l < params.layers(); ++l) state = coeff_message_pass(params, l_att, state, l);
  return coeff_readout(params, state);
}

Tensor orthogonality_penalty(const Tensor& alphas) {
  if (alphas.dim() != 2 || alphas.cols() == 0) {
    throw DimensionError("orthogonality_penalty: expected (K+1) x h, got " + shape_str(alphas.shape()));
  }
  const std::size_t h = alphas.cols();
  Tensor off = Tensor::full({h, h}, 1.0);
  for (std::size_t i = 0; i < h; ++i) off(i, i) = 0.0;
  return frobenius_norm(mul(matmul(transpose(alphas), alphas), off));
}

}  // namespace feta
