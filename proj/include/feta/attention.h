#pragma once

#include <cstddef>
#include <vector>

#include "feta/graph.h"
#include "feta/tensor.h"

namespace feta {

enum class PeMode { kNone, kLapStatic, kKernelDiffusion, kKernelRandomWalk };

struct AttentionConfig {
  std::size_t heads = 1;
  std::size_t d_in = 0;
  std::size_t d_out = 0;  // per-head width
  bool tie_query_key = false;
  PeMode pe_mode = PeMode::kNone;
  double beta = 1.0;        // diffusion kernel exp(-beta L)
  double gamma = 0.5;       // random-walk kernel (I - gamma L)^p
  int walk_steps = 3;       // p
  std::size_t pe_k = 8;     // Laplacian eigenvectors used by lap_static
};

// Projections act on the right: Q = X W_q with W_q of shape d_in x d_out.
struct HeadParams {
  Tensor w_q;
  Tensor w_k;  // ignored when tie_query_key
  Tensor w_v;
};

struct GatHeadParams {
  Tensor w;      // d_in x d_out
  Tensor a_src;  // d_out x 1
  Tensor a_dst;  // d_out x 1
};

// One row-stochastic n x n convolution support per head.
struct AttentionMap {
  std::vector<Tensor> c;
};

struct AttentionOutput {
  AttentionMap map;
  std::vector<Tensor> heads;  // per-head outputs, n x d_out
};

// C^h = softmax_rows(Q K^T / sqrt(d_out)), X^h = C^h V.
AttentionOutput scaled_dot_attention(const AttentionConfig& cfg, const Tensor& x,
                                     const std::vector<HeadParams>& params);

// GAT: e_ij = LeakyReLU_0.2(a_src . W x_i + a_dst . W x_j) over j in N(i) + {i}.
AttentionOutput gat_attention(const AttentionConfig& cfg, const Graph& g, const Tensor& x,
                              const std::vector<GatHeadParams>& params);
// Same, with the neighbor sets supplied directly (self-loops are added here).
AttentionOutput gat_attention(const AttentionConfig& cfg, const std::vector<std::vector<std::size_t>>& neighbors,
                              const Tensor& x, const std::vector<GatHeadParams>& params);

// Diffusion: U exp(-beta Lambda) U^T. Random walk: (I - gamma L)^p.
// Throws DomainError for negative beta or p, or gamma above 1 / lambda_max.
Tensor build_pe_kernel(const LaplacianMatrix& l, PeMode mode, const AttentionConfig& cfg);

// C = row-normalize(exp(Q Q^T / sqrt(d_out)) * K_p); rows without kernel mass
// become uniform. Requires tie_query_key.
AttentionOutput kernel_pe_attention(const AttentionConfig& cfg, const Tensor& x, const Tensor& kernel,
                                    const std::vector<HeadParams>& params);

// X + U[:, 1..k] diag(signs) P where P is a k x d projection. When k equals n
// the missing eigenvector column is zero.
Tensor laplacian_pe_features(const SpectralBasis& basis, const Tensor& x, std::size_t k,
                             const Tensor& projection, const std::vector<double>& signs);

}  // namespace feta
