#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "feta/attention.h"
#include "feta/graph.h"
#include "feta/tensor.h"

namespace feta {

enum class FilterKind { kChebyshev, kArma, kStaticChebyshev, kNone };
enum class AttentionKind { kScaledDot, kGat, kKernelPe };
enum class TaskKind { kNodeClass, kGraphClass, kGraphRegress };

struct FetaConfig {
  std::size_t layers = 3;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t order = 8;  // K
  FilterKind filter = FilterKind::kChebyshev;
  AttentionKind attention = AttentionKind::kScaledDot;
  PeMode pe_mode = PeMode::kNone;
  double pe_beta = 1.0;
  double pe_gamma = 0.5;
  int pe_walk_steps = 3;
  std::size_t pe_k = 8;
  double lambda_reg = 1e-2;
  std::size_t gnn_layers = 2;
  int arma_iterations = 15;
  // Use 2 instead of the exact largest eigenvalue when rescaling.
  bool fixed_lambda_max = false;
  TaskKind task = TaskKind::kNodeClass;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;  // classes, or 1 for regression

  // Throws ConfigError on inconsistent settings.
  void validate() const;
  std::size_t head_dim() const { return hidden / heads; }
};

std::string to_string(FilterKind k);
std::string to_string(AttentionKind k);
std::string to_string(TaskKind k);
std::string to_string(PeMode m);
FilterKind parse_filter_kind(const std::string& s);
AttentionKind parse_attention_kind(const std::string& s);
TaskKind parse_task_kind(const std::string& s);
PeMode parse_pe_mode(const std::string& s);

// Named parameter tensors, iterated in name order.
struct FetaParams {
  std::map<std::string, Tensor> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
  std::vector<Tensor> list() const;
  FetaParams clone() const;
  std::size_t count() const;
};

FetaParams init_params(const FetaConfig& cfg, std::uint64_t seed);

// Graph-dependent constants computed once per graph.
struct GraphContext {
  const Graph* graph = nullptr;
  Tensor x;                // n x in_dim
  Tensor l_tilde;          // input graph, rescaled
  SpectralBasis basis;     // of the normalized Laplacian
  Tensor kernel;           // kernel positional encoding, when used
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<double> pe_signs;  // Laplacian PE sign flips
};

GraphContext prepare_graph(const FetaConfig& cfg, const Graph& g);

struct LayerOutput {
  Tensor x;         // n x hidden
  Tensor alphas;    // (K+1) x h, undefined for kind none
  Tensor attended;  // concatenated head outputs X^h
  Tensor filtered;  // concatenated filtered head outputs H^h, undefined for kind none
  AttentionMap map;
};

LayerOutput feta_layer_forward(const FetaConfig& cfg, const FetaParams& params, std::size_t layer,
                               const GraphContext& ctx, const Tensor& x);
// Same layer with coefficient learning bypassed: alpha comes from the
// per-layer learnable "static_alpha" parameter.
LayerOutput feta_static_forward(const FetaConfig& cfg, const FetaParams& params, std::size_t layer,
                                const GraphContext& ctx, const Tensor& x);

struct ModelOutput {
  Tensor logits;               // n x out (node task) or 1 x out (graph task)
  std::vector<Tensor> alphas;  // per layer, (K+1) x h
  std::vector<AttentionMap> maps;
};

ModelOutput model_forward(const FetaConfig& cfg, const FetaParams& params, const GraphContext& ctx);

// Cross-entropy over supervised nodes (node task) or the graph label, L1 for
// regression, plus lambda_reg * sum of per-layer orthogonality penalties.
Tensor model_loss(const FetaConfig& cfg, const Tensor& logits, const Graph& g, const std::vector<Tensor>& alphas);

}  // namespace feta
