#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "feta/tensor.h"

namespace feta {

// Compares tape gradients of a scalar function against central differences
// (f(p+eps) - f(p-eps)) / (2 eps), elementwise over every entry of `params`.
// Returns the worst relative error |a-b| / max(|a|, |b|, 1e-8).
//
// `f` must rebuild its result from the current contents of `params` on every
// call. Throws ContractError when eps is outside (0, 1e-2] or when two
// evaluations at the same point disagree.
double finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                         double eps = 1e-5);

struct KinkAwareCheck {
  double worst = 0.0;
  std::size_t entries = 0;
  std::size_t rescored = 0;  // entries that needed the fine step
};

// Central differences at `eps`, and at `eps / 10` for entries whose coarse
// estimate misses 1e-4 relative; each entry keeps the better of the two.
// A stencil straddling a kink (a ReLU switching sign) is off at the coarse
// step only, while a wrong tape gradient is off at both.
KinkAwareCheck finite_diff_check_kink_aware(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                            double eps = 1e-3);

}  // namespace feta
