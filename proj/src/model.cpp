#include "feta/model.h"

#include <algorithm>
#include <cmath>

#include "feta/cheb_filter.h"
#include "feta/coeff_gnn.h"
#include "feta/errors.h"
#include "feta/ops.h"

namespace feta {

namespace {

std::string layer_key(std::size_t layer, const std::string& name) {
  return "layer" + std::to_string(layer) + "." + name;
}

std::string head_key(std::size_t layer, std::size_t head, const std::string& name) {
  return layer_key(layer, "head" + std::to_string(head) + "." + name);
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual dense-layer default.
Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

bool uses_coeff_gnn(FilterKind k) { return k == FilterKind::kChebyshev || k == FilterKind::kArma; }

AttentionConfig attention_config(const FetaConfig& cfg) {
  AttentionConfig a;
  a.heads = cfg.heads;
  a.d_in = cfg.hidden;
  a.d_out = cfg.head_dim();
  a.tie_query_key = cfg.attention == AttentionKind::kKernelPe;
  a.pe_mode = cfg.pe_mode;
  a.beta = cfg.pe_beta;
  a.gamma = cfg.pe_gamma;
  a.walk_steps = cfg.pe_walk_steps;
  a.pe_k = cfg.pe_k;
  return a;
}

CoeffGnnParams coeff_params(const FetaParams& params, const FetaConfig& cfg) {
  CoeffGnnParams p;
  for (std::size_t l = 0; l < cfg.gnn_layers; ++l) p.w_p.push_back(params.at("coeff.w_p" + std::to_string(l)));
  p.w1 = params.at("coeff.w1");
  p.b1 = params.at("coeff.b1");
  p.w2 = params.at("coeff.w2");
  p.b2 = params.at("coeff.b2");
  return p;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

// Row-wise log-softmax from primitives; the subtracted row max is a constant.
Tensor log_softmax_rows(const Tensor& logits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor row_max = Tensor::zeros({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits(i, j));
    row_max(i, 0) = mx;
  }
  Tensor shifted = sub(logits, row_max);
  Tensor lse = log(matmul(exp(shifted), Tensor::full({n, 1}, 1.0)));
  return sub(shifted, lse);
}

LayerOutput layer_forward(const FetaConfig& cfg, const FetaParams& params, std::size_t layer,
                          const GraphContext& ctx, const Tensor& x, FilterKind kind) {
  if (x.dim() != 2 || x.cols() != cfg.hidden) {
    throw DimensionError("feta layer: input " + shape_str(x.shape()) + " does not have width " +
                         std::to_string(cfg.hidden));
  }
  const AttentionConfig acfg = attention_config(cfg);
  AttentionOutput att;
  if (cfg.attention == AttentionKind::kGat) {
    std::vector<GatHeadParams> hp;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      hp.push_back({params.at(head_key(layer, h, "w")), params.at(head_key(layer, h, "a_src")),
                    params.at(head_key(layer, h, "a_dst"))});
    }
    att = gat_attention(acfg, ctx.neighbors, x, hp);
  } else {
    std::vector<HeadParams> hp;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const Tensor& wq = params.at(head_key(layer, h, "w_q"));
      hp.push_back({wq, acfg.tie_query_key ? wq : params.at(head_key(layer, h, "w_k")),
                    params.at(head_key(layer, h, "w_v"))});
    }
    att = cfg.attention == AttentionKind::kKernelPe ? kernel_pe_attention(acfg, x, ctx.kernel, hp)
                                                    : scaled_dot_attention(acfg, x, hp);
  }

  LayerOutput out;
  out.map = att.map;
  out.attended = concat_cols(att.heads);
  Tensor mixed = dense(out.attended, params.at(layer_key(layer, "w_o")), params.at(layer_key(layer, "b_o")));

  Tensor fuse_in = mixed;
  if (kind != FilterKind::kNone) {
    std::vector<Tensor> alpha_cols, filtered;
    CoeffGnnParams cp;
    if (uses_coeff_gnn(kind)) cp = coeff_params(params, cfg);
    const std::vector<double> poles = arma_default_poles(cfg.order);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      Tensor alpha;  // 1 x (K+1)
      if (kind == FilterKind::kStaticChebyshev) {
        alpha = transpose(slice_cols(params.at(layer_key(layer, "static_alpha")), h, h + 1));
      } else {
        alpha = coefficients_from_attention(cp, att.map.c[h]).alpha;
      }
      alpha_cols.push_back(transpose(alpha));
      if (kind == FilterKind::kArma) {
        ArmaParams ap;
        ap.a = poles;
        ap.direct = slice_cols(alpha, 0, 1);
        ap.b = cfg.order > 0 ? slice_cols(alpha, 1, cfg.order + 1) : Tensor::zeros({1, 0});
        ap.iterations = cfg.arma_iterations;
        filtered.push_back(arma_apply(ap, ctx.l_tilde, att.heads[h]));
      } else {
        filtered.push_back(apply_filter({alpha}, ctx.l_tilde, att.heads[h]));
      }
    }
    out.alphas = concat_cols(alpha_cols);
    out.filtered = concat_cols(filtered);
    fuse_in = concat_cols({mixed, out.filtered});
  }
  Tensor hidden = relu(dense(fuse_in, params.at(layer_key(layer, "fuse.w1")), params.at(layer_key(layer, "fuse.b1"))));
  Tensor fused = dense(hidden, params.at(layer_key(layer, "fuse.w2")), params.at(layer_key(layer, "fuse.b2")));
  Tensor normed = layer_norm(add(x, fused));
  out.x = add(mul(normed, params.at(layer_key(layer, "ln.gamma"))), params.at(layer_key(layer, "ln.beta")));
  return out;
}

}  // namespace

void FetaConfig::validate() const {
  if (layers == 0) throw ConfigError("layers must be at least 1");
  if (heads == 0) throw ConfigError("heads must be at least 1");
  if (hidden == 0 || hidden % heads != 0) {
    throw ConfigError("hidden width " + std::to_string(hidden) + " must be a positive multiple of heads " +
                      std::to_string(heads));
  }
  if (in_dim == 0) throw ConfigError("input width must be positive");
  if (out_dim == 0) throw ConfigError("output width must be positive");
  if (task == TaskKind::kGraphRegress && out_dim != 1) throw ConfigError("regression needs out_dim 1");
  if (lambda_reg < 0.0) throw ConfigError("lambda_reg must be non-negative");
  if (uses_coeff_gnn(filter) && gnn_layers == 0) throw ConfigError("coefficient GNN needs at least one layer");
  if (arma_iterations < 0) throw ConfigError("arma_iterations must be non-negative");
  if (attention == AttentionKind::kKernelPe && pe_mode != PeMode::kKernelDiffusion &&
      pe_mode != PeMode::kKernelRandomWalk) {
    throw ConfigError("kernel-pe attention needs pe_mode kernel_diffusion or kernel_random_walk");
  }
  if (attention != AttentionKind::kKernelPe &&
      (pe_mode == PeMode::kKernelDiffusion || pe_mode == PeMode::kKernelRandomWalk)) {
    throw ConfigError("kernel positional encodings require kernel-pe attention");
  }
}

std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::kChebyshev: return "chebyshev";
    case FilterKind::kArma: return "arma";
    case FilterKind::kStaticChebyshev: return "static-chebyshev";
    case FilterKind::kNone: return "none";
  }
  return "?";
}

std::string to_string(AttentionKind k) {
  switch (k) {
    case AttentionKind::kScaledDot: return "scaled-dot";
    case AttentionKind::kGat: return "gat";
    case AttentionKind::kKernelPe: return "kernel-pe";
  }
  return "?";
}

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kNodeClass: return "node-class";
    case TaskKind::kGraphClass: return "graph-class";
    case TaskKind::kGraphRegress: return "graph-regress";
  }
  return "?";
}

std::string to_string(PeMode m) {
  switch (m) {
    case PeMode::kNone: return "none";
    case PeMode::kLapStatic: return "lap_static";
    case PeMode::kKernelDiffusion: return "kernel_diffusion";
    case PeMode::kKernelRandomWalk: return "kernel_random_walk";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& s) {
  for (auto k : {FilterKind::kChebyshev, FilterKind::kArma, FilterKind::kStaticChebyshev, FilterKind::kNone})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown filter kind '" + s + "' (chebyshev, arma, static-chebyshev, none)");
}

AttentionKind parse_attention_kind(const std::string& s) {
  for (auto k : {AttentionKind::kScaledDot, AttentionKind::kGat, AttentionKind::kKernelPe})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown attention kind '" + s + "' (scaled-dot, gat, kernel-pe)");
}

TaskKind parse_task_kind(const std::string& s) {
  for (auto k : {TaskKind::kNodeClass, TaskKind::kGraphClass, TaskKind::kGraphRegress})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown task '" + s + "' (node-class, graph-class, graph-regress)");
}

PeMode parse_pe_mode(const std::string& s) {
  for (auto m : {PeMode::kNone, PeMode::kLapStatic, PeMode::kKernelDiffusion, PeMode::kKernelRandomWalk})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown pe mode '" + s + "' (none, lap_static, kernel_diffusion, kernel_random_walk)");
}

Tensor& FetaParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

const Tensor& FetaParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<Tensor> FetaParams::list() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : tensors) out.push_back(t);
  return out;
}

FetaParams FetaParams::clone() const {
  FetaParams p;
  for (const auto& [name, t] : tensors) p.tensors.emplace(name, t.detach());
  return p;
}

std::size_t FetaParams::count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.numel();
  return n;
}

FetaParams init_params(const FetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = cfg.hidden, dh = cfg.head_dim(), k1 = cfg.order + 1;
  FetaParams p;
  auto& t = p.tensors;
  t["embed.w"] = uniform_init({cfg.in_dim, d}, cfg.in_dim, rng);
  t["embed.b"] = uniform_init({1, d}, cfg.in_dim, rng);
  if (cfg.pe_mode == PeMode::kLapStatic) t["pe.proj"] = uniform_init({cfg.pe_k, d}, cfg.pe_k, rng);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      if (cfg.attention == AttentionKind::kGat) {
        t[head_key(l, h, "w")] = uniform_init({d, dh}, d, rng);
        t[head_key(l, h, "a_src")] = uniform_init({dh, 1}, dh, rng);
        t[head_key(l, h, "a_dst")] = uniform_init({dh, 1}, dh, rng);
      } else {
        t[head_key(l, h, "w_q")] = uniform_init({d, dh}, d, rng);
        if (cfg.attention != AttentionKind::kKernelPe) t[head_key(l, h, "w_k")] = uniform_init({d, dh}, d, rng);
        t[head_key(l, h, "w_v")] = uniform_init({d, dh}, d, rng);
      }
    }
    t[layer_key(l, "w_o")] = uniform_init({d, d}, d, rng);
    t[layer_key(l, "b_o")] = uniform_init({1, d}, d, rng);
    if (cfg.filter == FilterKind::kStaticChebyshev) {
      Tensor a = Tensor::zeros({k1, cfg.heads});
      for (std::size_t h = 0; h < cfg.heads; ++h) a(0, h) = 1.0;
      t[layer_key(l, "static_alpha")] = a;
    }
    const std::size_t fuse_in = cfg.filter == FilterKind::kNone ? d : 2 * d;
    t[layer_key(l, "fuse.w1")] = uniform_init({fuse_in, d}, fuse_in, rng);
    t[layer_key(l, "fuse.b1")] = uniform_init({1, d}, fuse_in, rng);
    t[layer_key(l, "fuse.w2")] = uniform_init({d, d}, d, rng);
    t[layer_key(l, "fuse.b2")] = uniform_init({1, d}, d, rng);
    t[layer_key(l, "ln.gamma")] = Tensor::full({1, d}, 1.0);
    t[layer_key(l, "ln.beta")] = Tensor::zeros({1, d});
  }
  if (uses_coeff_gnn(cfg.filter)) {
    CoeffGnnParams c = coeff_gnn_init(cfg.order, cfg.gnn_layers, rng);
    for (std::size_t l = 0; l < c.w_p.size(); ++l) t["coeff.w_p" + std::to_string(l)] = c.w_p[l];
    t["coeff.w1"] = c.w1;
    t["coeff.b1"] = c.b1;
    t["coeff.w2"] = c.w2;
    t["coeff.b2"] = c.b2;
  }
  t["out.w"] = uniform_init({d, cfg.out_dim}, d, rng);
  t["out.b"] = uniform_init({1, cfg.out_dim}, d, rng);
  return p;
}

GraphContext prepare_graph(const FetaConfig& cfg, const Graph& g) {
  g.validate();
  if (!g.x.defined() || g.x.dim() != 2 || g.x.rows() != g.n || g.x.cols() != cfg.in_dim) {
    throw DimensionError("prepare_graph: node signals " + (g.x.defined() ? shape_str(g.x.shape()) : "missing") +
                         " do not match " + std::to_string(g.n) + " nodes of width " + std::to_string(cfg.in_dim));
  }
  GraphContext ctx;
  ctx.graph = &g;
  ctx.x = g.x;
  LaplacianMatrix l = build_laplacian(g, LaplacianKind::kNormalized);
  ctx.basis = eigendecompose(l);
  // An edgeless graph has lambda_max 0; fall back to the normalized bound.
  const double lmax = cfg.fixed_lambda_max || ctx.basis.lambda_max <= 1e-12 ? 2.0 : ctx.basis.lambda_max;
  ctx.l_tilde = rescale_spectrum(l, lmax);
  ctx.neighbors = g.neighbors();
  if (cfg.attention == AttentionKind::kKernelPe) ctx.kernel = build_pe_kernel(l, cfg.pe_mode, attention_config(cfg));
  ctx.pe_signs.assign(cfg.pe_k, 1.0);
  return ctx;
}

LayerOutput feta_layer_forward(const FetaConfig& cfg, const FetaParams& params, std::size_t layer,
                               const GraphContext& ctx, const Tensor& x) {
  return layer_forward(cfg, params, layer, ctx, x, cfg.filter);
}

LayerOutput feta_static_forward(const FetaConfig& cfg, const FetaParams& params, std::size_t layer,
                                const GraphContext& ctx, const Tensor& x) {
  return layer_forward(cfg, params, layer, ctx, x, FilterKind::kStaticChebyshev);
}

ModelOutput model_forward(const FetaConfig& cfg, const FetaParams& params, const GraphContext& ctx) {
  Tensor x = dense(ctx.x, params.at("embed.w"), params.at("embed.b"));
  if (cfg.pe_mode == PeMode::kLapStatic) {
    const std::size_t k = std::min(cfg.pe_k, ctx.basis.size());
    Tensor proj = params.at("pe.proj");
    if (k < cfg.pe_k) proj = transpose(slice_cols(transpose(proj), 0, k));
    std::vector<double> signs(ctx.pe_signs.begin(), ctx.pe_signs.begin() + static_cast<std::ptrdiff_t>(k));
    x = laplacian_pe_features(ctx.basis, x, k, proj, signs);
  }
  ModelOutput out;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    LayerOutput lo = feta_layer_forward(cfg, params, l, ctx, x);
    x = lo.x;
    out.alphas.push_back(lo.alphas);
    out.maps.push_back(std::move(lo.map));
  }
  if (cfg.task != TaskKind::kNodeClass) x = mean(x, 0);
  out.logits = dense(x, params.at("out.w"), params.at("out.b"));
  return out;
}

Tensor model_loss(const FetaConfig& cfg, const Tensor& logits, const Graph& g, const std::vector<Tensor>& alphas) {
  Tensor task;
  if (cfg.task == TaskKind::kGraphRegress) {
    if (g.targets.size() != logits.numel()) {
      throw DimensionError("model_loss: " + std::to_string(g.targets.size()) + " regression targets for " +
                           std::to_string(logits.numel()) + " outputs");
    }
    Tensor target = Tensor::from(logits.shape(), g.targets);
    task = scale(sum(abs(sub(logits, target))), 1.0 / static_cast<double>(logits.numel()));
  } else {
    const std::size_t rows = logits.rows(), classes = logits.cols();
    Tensor weights = Tensor::zeros({rows, classes});
    std::size_t supervised = 0;
    if (cfg.task == TaskKind::kGraphClass) {
      if (g.labels.empty()) throw DomainError("model_loss: graph has no label");
      supervised = 1;
    } else {
      if (g.labels.size() != rows) {
        throw DimensionError("model_loss: " + std::to_string(g.labels.size()) + " labels for " +
                             std::to_string(rows) + " nodes");
      }
      for (std::size_t i = 0; i < rows; ++i) supervised += g.mask.empty() || g.mask[i];
      if (supervised == 0) throw DomainError("model_loss: supervision mask selects no nodes");
    }
    for (std::size_t i = 0; i < rows; ++i) {
      if (cfg.task == TaskKind::kNodeClass && !g.mask.empty() && !g.mask[i]) continue;
      const int y = g.labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw DomainError("model_loss: label " + std::to_string(y) + " outside " + std::to_string(classes) +
                          " classes");
      }
      weights(i, static_cast<std::size_t>(y)) = 1.0 / static_cast<double>(supervised);
    }
    task = scale(sum(mul(log_softmax_rows(logits), weights)), -1.0);
  }
  if (cfg.lambda_reg > 0.0) {
    for (const auto& a : alphas) {
      if (a.defined()) task = add(task, scale(orthogonality_penalty(a), cfg.lambda_reg));
    }
  }
  return task;
}

}  // namespace feta
