#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "feta/tensor.h"

namespace feta {

// Chebyshev expansion weights alpha[0..K] of one head's filter.
struct FilterCoefficients {
  Tensor alpha;  // K+1 entries, any 1 x (K+1) or (K+1) layout

  std::size_t order() const { return alpha.numel() - 1; }
};

struct FrequencyResponse {
  std::vector<double> grid;
  std::vector<double> magnitude;
};

// Parallel first-order rational filter: out = direct * X + sum_s b_s y_s where
// y_s approximately solves (I - a_s L~) y_s = X by unrolled fixed-point steps
// y <- a_s L~ y + X starting from y = X.
struct ArmaParams {
  std::vector<double> a;  // poles, |a_s| < 1
  Tensor b;               // S gains
  Tensor direct;          // optional scalar pass-through gain
  int iterations = 15;
};

// T_k(x) by the three-term recursion.
double cheb_eval(int k, double x);
// T_k of a symmetric matrix (spectrum expected within [-1, 1]).
Tensor cheb_eval(int k, const Tensor& x);

// Uniform grid of m points on [-1, 1], endpoints included.
std::vector<double> response_grid(std::size_t m = 256);

// magnitude[j] = sum_k alpha[k] T_k(grid[j]); throws DomainError outside [-1, 1].
FrequencyResponse frequency_response(const FilterCoefficients& c, std::span<const double> grid);

// sum_k alpha[k] T_k(L~) X via z_0 = X, z_1 = L~X, z_k = 2 L~ z_{k-1} - z_{k-2}.
// Differentiable in alpha and X.
Tensor apply_filter(const FilterCoefficients& c, const Tensor& l_tilde, const Tensor& x);

Tensor arma_apply(const ArmaParams& p, const Tensor& l_tilde, const Tensor& x);

// Response of the unrolled filter: direct + sum_s b_s sum_{t<=T} (a_s x)^t.
FrequencyResponse arma_frequency_response(const ArmaParams& p, std::span<const double> grid);

// Evenly spaced poles strictly inside (-limit, limit).
std::vector<double> arma_default_poles(std::size_t branches, double limit = 0.9);

// Least-squares Chebyshev coefficients of order K for target(grid) samples.
std::vector<double> fit_chebyshev(const std::function<double(double)>& target, std::size_t order,
                                  std::span<const double> grid);

}  // namespace feta
