#include "feta/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "feta/errors.h"

namespace feta {

double finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> params, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ContractError("finite_diff_check: eps must lie in (0, 1e-2], got " + std::to_string(eps));
  }
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor out = f();
    backward(out);
    for (const auto& p : params) analytic.push_back(p.grad());
  }

  const double base1 = f().item();
  const double base2 = f().item();
  if (base1 != base2) {
    throw ContractError("finite_diff_check: function is not deterministic");
  }

  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = f().item();
      values[k] = saved - eps;
      const double down = f().item();
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[t][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  for (auto& p : params) p.zero_grad();
  return worst;
}

KinkAwareCheck finite_diff_check_kink_aware(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                            double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ContractError("finite_diff_check_kink_aware: eps must lie in (0, 1e-2], got " + std::to_string(eps));
  }
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor out = f();
    backward(out);
    for (const auto& p : params) analytic.push_back(p.grad());
  }
  if (f().item() != f().item()) {
    throw ContractError("finite_diff_check_kink_aware: function is not deterministic");
  }

  KinkAwareCheck r;
  auto relative = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); };
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      auto central = [&](double h) {
        values[k] = saved + h;
        const double up = f().item();
        values[k] = saved - h;
        const double down = f().item();
        values[k] = saved;
        return (up - down) / (2.0 * h);
      };
      double err = relative(analytic[t][k], central(eps));
      if (err >= 1e-4) {
        err = std::min(err, relative(analytic[t][k], central(eps / 10.0)));
        ++r.rescored;
      }
      r.worst = std::max(r.worst, err);
      ++r.entries;
    }
  }
  for (auto& p : params) p.zero_grad();
  return r;
}

}  // namespace feta
