#include "feta/cheb_filter.h"

#include <Eigen/Dense>
#include <cmath>

#include "feta/errors.h"
#include "feta/ops.h"

namespace feta {

namespace {

Tensor coefficient(const Tensor& alpha, std::size_t k) {
  return slice_cols(reshape(alpha, {1, alpha.numel()}), k, k + 1);
}

void require_filter_shapes(const Tensor& l_tilde, const Tensor& x, const char* who) {
  if (l_tilde.dim() != 2 || l_tilde.rows() != l_tilde.cols() || x.rows() != l_tilde.rows()) {
    throw DimensionError(std::string(who) + ": operator " + shape_str(l_tilde.shape()) +
                         " does not match signal " + shape_str(x.shape()));
  }
}

}  // namespace

double cheb_eval(int k, double x) {
  if (k < 0) throw DomainError("cheb_eval: negative order");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int i = 2; i <= k; ++i) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Tensor cheb_eval(int k, const Tensor& x) {
  if (k < 0) throw DomainError("cheb_eval: negative order");
  if (x.dim() != 2 || x.rows() != x.cols()) {
    throw DimensionError("cheb_eval: expected a square matrix, got " + shape_str(x.shape()));
  }
  Tensor prev = Tensor::eye(x.rows());
  if (k == 0) return prev;
  Tensor cur = x;
  for (int i = 2; i <= k; ++i) {
    Tensor next = sub(scale(matmul(x, cur), 2.0), prev);
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<double> response_grid(std::size_t m) {
  std::vector<double> grid(m);
  if (m == 1) {
    grid[0] = 0.0;
    return grid;
  }
  for (std::size_t j = 0; j < m; ++j)
    grid[j] = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(m - 1);
  return grid;
}

FrequencyResponse frequency_response(const FilterCoefficients& c, std::span<const double> grid) {
  FrequencyResponse r;
  r.grid.assign(grid.begin(), grid.end());
  r.magnitude.resize(grid.size());
  auto alpha = c.alpha.data();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid[j];
    if (!(x >= -1.0 && x <= 1.0)) {
      throw DomainError("frequency_response: grid point " + std::to_string(x) + " outside [-1, 1]");
    }
    double prev = 1.0, cur = x;
    double acc = alpha[0];
    for (std::size_t k = 1; k < alpha.size(); ++k) {
      if (k > 1) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
      }
      acc += alpha[k] * cur;
    }
    r.magnitude[j] = acc;
  }
  return r;
}

Tensor apply_filter(const FilterCoefficients& c, const Tensor& l_tilde, const Tensor& x) {
  require_filter_shapes(l_tilde, x, "apply_filter");
  const std::size_t order = c.order();
  Tensor z0 = x;
  Tensor out = mul(z0, coefficient(c.alpha, 0));
  if (order == 0) return out;
  Tensor z1 = matmul(l_tilde, x);
  out = add(out, mul(z1, coefficient(c.alpha, 1)));
  for (std::size_t k = 2; k <= order; ++k) {
    Tensor z2 = sub(scale(matmul(l_tilde, z1), 2.0), z0);
    out = add(out, mul(z2, coefficient(c.alpha, k)));
    z0 = z1;
    z1 = z2;
  }
  return out;
}

Tensor arma_apply(const ArmaParams& p, const Tensor& l_tilde, const Tensor& x) {
  require_filter_shapes(l_tilde, x, "arma_apply");
  if (p.b.numel() != p.a.size()) {
    throw DimensionError("arma_apply: " + std::to_string(p.a.size()) + " poles but " +
                         std::to_string(p.b.numel()) + " gains");
  }
  for (double a : p.a) {
    if (!(std::abs(a) < 1.0)) {
      throw DomainError("arma_apply: pole " + std::to_string(a) + " violates |a| < 1; iteration would diverge");
    }
  }
  Tensor out;
  if (p.direct.defined()) out = mul(x, p.direct);
  for (std::size_t s = 0; s < p.a.size(); ++s) {
    Tensor y = x;
    for (int it = 0; it < p.iterations; ++it) y = add(scale(matmul(l_tilde, y), p.a[s]), x);
    Tensor term = mul(y, coefficient(p.b, s));
    out = out.defined() ? add(out, term) : term;
  }
  if (!out.defined()) out = scale(x, 0.0);
  return out;
}

FrequencyResponse arma_frequency_response(const ArmaParams& p, std::span<const double> grid) {
  if (p.b.numel() != p.a.size())
    throw DimensionError("arma_frequency_response: " + std::to_string(p.a.size()) + " poles but " +
                         std::to_string(p.b.numel()) + " gains");
  FrequencyResponse r;
  r.grid.assign(grid.begin(), grid.end());
  for (double x : grid) {
    if (x < -1.0 || x > 1.0) throw DomainError("arma_frequency_response: grid point outside [-1, 1]");
    double g = p.direct.defined() ? p.direct[0] : 0.0;
    for (std::size_t s = 0; s < p.a.size(); ++s) {
      double term = 1.0, partial = 1.0;
      for (int t = 0; t < p.iterations; ++t) {
        term *= p.a[s] * x;
        partial += term;
      }
      g += p.b[s] * partial;
    }
    r.magnitude.push_back(g);
  }
  return r;
}

std::vector<double> arma_default_poles(std::size_t branches, double limit) {
  std::vector<double> poles(branches);
  for (std::size_t s = 0; s < branches; ++s) {
    poles[s] = branches == 1 ? 0.0
                             : -limit + 2.0 * limit * static_cast<double>(s) / static_cast<double>(branches - 1);
  }
  return poles;
}

std::vector<double> fit_chebyshev(const std::function<double(double)>& target, std::size_t order,
                                  std::span<const double> grid) {
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(order + 1));
  Eigen::VectorXd y(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t k = 0; k <= order; ++k)
      basis(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = cheb_eval(static_cast<int>(k), grid[j]);
    y(static_cast<Eigen::Index>(j)) = target(grid[j]);
  }
  Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(y);
  return {coef.data(), coef.data() + coef.size()};
}

}  // namespace feta
