#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "feta/graph.h"
#include "feta/tensor.h"

namespace feta {

// Desired diagonal response F in the eigenbasis of a graph.
struct FilterTarget {
  std::vector<double> f;
  SpectralBasis basis;

  Tensor support() const;  // C_g = U diag(f) U^T
};

FilterTarget make_target(const Graph& g, std::vector<double> f);

// || C_t - U diag(f) U^T ||_F
double conv_support_error(const Tensor& c_t, const FilterTarget& target);

struct OptimalFilter {
  std::vector<double> f;  // diagonal of U^T C_t U
  double value = 0.0;     // sqrt(trace(C_t^T C_t - D^2))
};

OptimalFilter optimal_filter_for_support(const Tensor& c_t, const SpectralBasis& basis);

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(const std::vector<double>& v);

struct ProjectedGradientOptions {
  int max_iterations = 10000;
  int restarts = 20;
  double lipschitz = 2.0;  // of the gradient of ||C - C_g||_F^2
  double tolerance = 1e-13;
  std::uint64_t seed = 0;
};

struct ProjectedGradientResult {
  Tensor c;
  double error = 0.0;
  bool converged = false;
  int iterations = 0;  // of the best restart
};

// min ||C - C_g||_F over row-stochastic non-negative C.
ProjectedGradientResult min_error_projected_gradient(const Tensor& c_g, const ProjectedGradientOptions& opt = {});

struct ErrorReport {
  double e_star = 0.0;
  // Value of the closed form C_g - (1/n)(C_g 1 - 1) 1^T, optimal when only
  // the row sums are constrained.
  double e_star_affine = 0.0;
  double lower = 0.0;            // smallest |f_i - 1|
  double upper = 0.0;            // largest |f_i - 1|
  double attention_upper = 0.0;  // sqrt(sum (f_i - 1)^2)
  Tensor witness;
  bool closed_form_feasible = false;  // closed-form witness has no entry below -1e-9
  bool feasible = false;              // reported witness is row-stochastic and non-negative
  bool converged = true;
  bool lower_ok = false;
  bool upper_ok = false;
  bool attention_upper_ok = false;

  bool passed() const { return lower_ok && upper_ok && attention_upper_ok; }
};

ErrorReport min_error_over_stochastic(const FilterTarget& target, const ProjectedGradientOptions& opt = {});

// min_error_over_stochastic plus the bound checks, each with slack `tol`.
ErrorReport verify_error_bounds(const FilterTarget& target, double tol = 1e-7,
                                const ProjectedGradientOptions& opt = {});

struct AttentionSearchOptions {
  std::size_t d = 0;  // 0 means n
  int restarts = 20;
  int iterations = 3000;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

// Best ||softmax_rows(X W_Q W_K^T X^T / sqrt(d)) - C_g||_F found by Adam over
// X, W_Q and W_K from random starts. An upper estimate of the attainable
// minimum.
double attention_min_error_search(const FilterTarget& target, const AttentionSearchOptions& opt = {});

struct LemmaReport {
  std::vector<double> analytic_gradient;  // -2 (u_i^T C_t u_i - f_i)
  std::vector<double> numeric_gradient;   // central differences of E^2
  double gradient_error = 0.0;            // max relative error
  // 2 u_i^T C_t u_i, the curvature expression stated for tied maps. The
  // second derivative of E^2 in f_i is the constant 2, reported below.
  std::vector<double> stated_hessian;
  std::vector<double> numeric_hessian;  // second differences of E^2
  bool gradient_ok = false;
  bool hessian_ok = false;  // numeric diagonal >= -1e-9
  bool stated_hessian_nonnegative = false;

  bool passed() const { return gradient_ok && hessian_ok; }
};

LemmaReport check_lemma_gradients(const Tensor& c_t, const FilterTarget& target, double tol = 1e-6);

// softmax_rows(X X^T / sqrt(d)) for a random n x d matrix X: the tied
// query/key attention map.
Tensor tied_attention_map(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace feta
