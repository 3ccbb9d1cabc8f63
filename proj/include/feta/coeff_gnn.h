#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "feta/cheb_filter.h"
#include "feta/tensor.h"

namespace feta {

// Shared by every head and every transformer layer.
struct CoeffGnnParams {
  std::vector<Tensor> w_p;  // per GNN layer, (K+1) x (K+1)
  Tensor w1, b1;            // readout hidden layer
  Tensor w2, b2;            // readout output layer

  std::size_t order() const { return w1.rows() - 1; }
  std::size_t layers() const { return w_p.size(); }
  std::vector<Tensor> tensors() const;
};

// Message weights ~ N(0, 1/(K+1)); the output layer starts near zero with
// bias e_0 so every head begins as the all-pass filter.
CoeffGnnParams coeff_gnn_init(std::size_t order, std::size_t layers, std::mt19937_64& rng);

// A'' = (C + C^T)/2 + I and L = I - D''^{-1/2} A'' D''^{-1/2}. Differentiable in C.
Tensor attention_to_laplacian(const Tensor& c_head);

// All-ones n x (K+1) node state.
Tensor coeff_initial_state(std::size_t n, std::size_t order);

// ReLU(L_att * state * W_p[layer]).
Tensor coeff_message_pass(const CoeffGnnParams& params, const Tensor& l_att, const Tensor& state,
                          std::size_t layer);

// alpha = W2 ReLU(W1 mean_nodes(state) + b1) + b2, as a 1 x (K+1) row.
FilterCoefficients coeff_readout(const CoeffGnnParams& params, const Tensor& state);

// Attention map to coefficients: Laplacian, every message-passing layer, readout.
FilterCoefficients coefficients_from_attention(const CoeffGnnParams& params, const Tensor& c_head);

// || (A^T A) o (1 1^T - I) ||_F for the (K+1) x h matrix of head coefficients.
Tensor orthogonality_penalty(const Tensor& alphas);

}  // namespace feta
