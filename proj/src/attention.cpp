#include "feta/attention.h"

#include <cmath>

#include "feta/errors.h"
#include "feta/ops.h"

namespace feta {

namespace {

// Large negative logit standing in for -inf; keeps every entry finite.
constexpr double kMaskedLogit = -1e30;

void require_heads(const AttentionConfig& cfg, std::size_t provided, const char* who) {
  if (cfg.heads == 0) throw DomainError(std::string(who) + ": at least one head required");
  if (provided != cfg.heads) {
    throw DimensionError(std::string(who) + ": config has " + std::to_string(cfg.heads) +
                         " heads, parameters have " + std::to_string(provided));
  }
}

void require_input(const AttentionConfig& cfg, const Tensor& x, const char* who) {
  if (x.dim() != 2 || x.cols() != cfg.d_in) {
    throw DimensionError(std::string(who) + ": input " + shape_str(x.shape()) + " does not have d_in = " +
                         std::to_string(cfg.d_in) + " columns");
  }
}

Tensor scaled_logits(const Tensor& q, const Tensor& k, std::size_t d_out) {
  return scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_out)));
}

}  // namespace

AttentionOutput scaled_dot_attention(const AttentionConfig& cfg, const Tensor& x,
                                     const std::vector<HeadParams>& params) {
  require_heads(cfg, params.size(), "scaled_dot_attention");
  require_input(cfg, x, "scaled_dot_attention");
  AttentionOutput out;
  for (const auto& p : params) {
    Tensor q = matmul(x, p.w_q);
    Tensor k = cfg.tie_query_key ? q : matmul(x, p.w_k);
    Tensor v = matmul(x, p.w_v);
    Tensor c = softmax_rows(scaled_logits(q, k, cfg.d_out));
    out.heads.push_back(matmul(c, v));
    out.map.c.push_back(std::move(c));
  }
  return out;
}

AttentionOutput gat_attention(const AttentionConfig& cfg, const Graph& g, const Tensor& x,
                              const std::vector<GatHeadParams>& params) {
  g.validate();
  return gat_attention(cfg, g.neighbors(), x, params);
}

AttentionOutput gat_attention(const AttentionConfig& cfg, const std::vector<std::vector<std::size_t>>& neighbors,
                              const Tensor& x, const std::vector<GatHeadParams>& params) {
  require_heads(cfg, params.size(), "gat_attention");
  require_input(cfg, x, "gat_attention");
  const std::size_t n = x.rows();
  if (neighbors.size() != n) {
    throw DimensionError("gat_attention: neighbor lists for " + std::to_string(neighbors.size()) +
                         " nodes, signal has " + std::to_string(n));
  }
  Tensor mask = Tensor::full({n, n}, kMaskedLogit);
  for (std::size_t i = 0; i < n; ++i) {
    mask(i, i) = 0.0;
    for (auto j : neighbors[i]) mask(i, j) = 0.0;
  }
  const Tensor zeros = Tensor::zeros({n, n});
  AttentionOutput out;
  for (const auto& p : params) {
    Tensor z = matmul(x, p.w);
    Tensor src = matmul(z, p.a_src);  // n x 1
    Tensor dst = matmul(z, p.a_dst);  // n x 1
    Tensor e = leaky_relu(add(add(zeros, src), transpose(dst)), 0.2);
    Tensor c = softmax_rows(add(e, mask));
    out.heads.push_back(matmul(c, z));
    out.map.c.push_back(std::move(c));
  }
  return out;
}

Tensor build_pe_kernel(const LaplacianMatrix& l, PeMode mode, const AttentionConfig& cfg) {
  const std::size_t n = l.l.rows();
  if (mode == PeMode::kKernelDiffusion) {
    if (!(cfg.beta >= 0.0)) throw DomainError("build_pe_kernel: beta must be non-negative");
    SpectralBasis basis = eigendecompose(l);
    std::vector<double> response(n);
    for (std::size_t i = 0; i < n; ++i) response[i] = std::exp(-cfg.beta * basis.lambda[i]);
    Tensor k = spectral_synthesis(basis, response);
    // Round-off can leave entries a hair below zero.
    for (auto& v : k.data())
      if (v < 0.0 && v > -1e-12) v = 0.0;
    return k;
  }
  if (mode == PeMode::kKernelRandomWalk) {
    if (cfg.walk_steps < 0) throw DomainError("build_pe_kernel: walk steps must be non-negative");
    if (cfg.gamma < 0.0) throw DomainError("build_pe_kernel: gamma must be non-negative");
    if (cfg.gamma > 0.0 && cfg.walk_steps > 0) {
      const double lmax = eigendecompose(l).lambda_max;
      if (lmax > 0.0 && cfg.gamma > 1.0 / lmax + 1e-12) {
        throw DomainError("build_pe_kernel: gamma " + std::to_string(cfg.gamma) + " exceeds 1/lambda_max = " +
                          std::to_string(1.0 / lmax) + "; kernel may lose positive semi-definiteness");
      }
    }
    Tensor step = Tensor::eye(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) step(i, j) -= cfg.gamma * l.l(i, j);
    Tensor k = Tensor::eye(n);
    for (int s = 0; s < cfg.walk_steps; ++s) k = matmul(k, step);
    return k;
  }
  throw DomainError("build_pe_kernel: mode is not a kernel encoding");
}

AttentionOutput kernel_pe_attention(const AttentionConfig& cfg, const Tensor& x, const Tensor& kernel,
                                    const std::vector<HeadParams>& params) {
  require_heads(cfg, params.size(), "kernel_pe_attention");
  require_input(cfg, x, "kernel_pe_attention");
  if (!cfg.tie_query_key) throw ContractError("kernel_pe_attention: requires tie_query_key");
  const std::size_t n = x.rows();
  if (kernel.dim() != 2 || kernel.rows() != n || kernel.cols() != n) {
    throw DimensionError("kernel_pe_attention: kernel " + shape_str(kernel.shape()) + " for " +
                         std::to_string(n) + " nodes");
  }
  // exp(S) * K normalized per row == softmax(S + log K), with log 0 masked.
  Tensor log_kernel = Tensor::zeros({n, n});
  Tensor keep_row = Tensor::zeros({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    bool has_mass = false;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = kernel(i, j);
      if (v < 0.0) {
        throw DomainError("kernel_pe_attention: negative kernel entry at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
      has_mass = has_mass || v > 0.0;
      log_kernel(i, j) = v > 0.0 ? std::log(v) : kMaskedLogit;
    }
    if (has_mass) {
      keep_row(i, 0) = 1.0;
    } else {
      for (std::size_t j = 0; j < n; ++j) log_kernel(i, j) = 0.0;
    }
  }
  AttentionOutput out;
  for (const auto& p : params) {
    Tensor q = matmul(x, p.w_q);
    Tensor v = matmul(x, p.w_v);
    Tensor logits = add(mul(scaled_logits(q, q, cfg.d_out), keep_row), log_kernel);
    Tensor c = softmax_rows(logits);
    out.heads.push_back(matmul(c, v));
    out.map.c.push_back(std::move(c));
  }
  return out;
}

Tensor laplacian_pe_features(const SpectralBasis& basis, const Tensor& x, std::size_t k,
                             const Tensor& projection, const std::vector<double>& signs) {
  const std::size_t n = basis.size();
  if (k > n) {
    throw DomainError("laplacian_pe_features: k = " + std::to_string(k) + " exceeds node count " +
                      std::to_string(n));
  }
  if (k == 0) return x;
  if (projection.rows() != k || projection.cols() != x.cols()) {
    throw DimensionError("laplacian_pe_features: projection " + shape_str(projection.shape()) + " expected [" +
                         std::to_string(k) + "x" + std::to_string(x.cols()) + "]");
  }
  if (signs.size() != k) throw DimensionError("laplacian_pe_features: need one sign per eigenvector");
  Tensor pe = Tensor::zeros({n, k});
  for (std::size_t c = 0; c < k; ++c) {
    if (c + 1 >= n) break;
    for (std::size_t i = 0; i < n; ++i) pe(i, c) = signs[c] * basis.u(i, c + 1);
  }
  return add(x, matmul(pe, projection));
}

}  // namespace feta
