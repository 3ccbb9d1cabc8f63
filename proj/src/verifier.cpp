#include "feta/verifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "feta/errors.h"
#include "feta/ops.h"
#include "feta/train.h"

namespace feta {

namespace {

double frobenius_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.numel(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

void require_square(const Tensor& c, std::size_t n, const char* who) {
  if (c.shape() != Shape{n, n})
    throw DimensionError(std::string(who) + ": expected [" + std::to_string(n) + "x" + std::to_string(n) + "], got " +
                         shape_str(c.shape()));
}

// u_i^T C u_i for every eigenvector.
std::vector<double> rayleigh_diagonal(const Tensor& c, const SpectralBasis& basis) {
  const std::size_t n = basis.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double row = 0.0;
      for (std::size_t q = 0; q < n; ++q) row += c(r, q) * basis.u(q, i);
      s += basis.u(r, i) * row;
    }
    out[i] = s;
  }
  return out;
}

double squared_error(const Tensor& c_t, const SpectralBasis& basis, const std::vector<double>& f) {
  const Tensor c_g = spectral_synthesis(basis, f);
  const double e = frobenius_distance(c_t, c_g);
  return e * e;
}

}  // namespace

Tensor FilterTarget::support() const { return spectral_synthesis(basis, f); }

FilterTarget make_target(const Graph& g, std::vector<double> f) {
  FilterTarget t{std::move(f), eigendecompose(build_laplacian(g, LaplacianKind::kNormalized))};
  if (t.f.size() != g.n)
    throw DimensionError("make_target: " + std::to_string(t.f.size()) + " responses for " + std::to_string(g.n) +
                         " nodes");
  return t;
}

double conv_support_error(const Tensor& c_t, const FilterTarget& target) {
  require_square(c_t, target.basis.size(), "conv_support_error");
  return frobenius_distance(c_t, target.support());
}

OptimalFilter optimal_filter_for_support(const Tensor& c_t, const SpectralBasis& basis) {
  require_square(c_t, basis.size(), "optimal_filter_for_support");
  OptimalFilter out;
  out.f = rayleigh_diagonal(c_t, basis);
  double trace = 0.0;
  for (std::size_t k = 0; k < c_t.numel(); ++k) trace += c_t[k] * c_t[k];
  for (double d : out.f) trace -= d * d;
  out.value = std::sqrt(std::max(trace, 0.0));
  return out;
}

std::vector<double> project_simplex(const std::vector<double>& v) {
  if (v.empty()) throw DomainError("project_simplex: empty vector");
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - theta, 0.0);
  return out;
}

ProjectedGradientResult min_error_projected_gradient(const Tensor& c_g, const ProjectedGradientOptions& opt) {
  const std::size_t n = c_g.rows();
  require_square(c_g, n, "min_error_projected_gradient");
  if (opt.restarts < 1 || opt.max_iterations < 1) throw ConfigError("projected gradient: need restarts and iterations");
  std::mt19937_64 rng(opt.seed);
  std::exponential_distribution<double> expo(1.0);
  auto objective = [&](const Tensor& c) {
    const double e = frobenius_distance(c, c_g);
    return e * e;
  };
  auto project_rows = [&](Tensor& c) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(n);
      for (std::size_t j = 0; j < n; ++j) row[j] = c(i, j);
      row = project_simplex(row);
      for (std::size_t j = 0; j < n; ++j) c(i, j) = row[j];
    }
  };

  ProjectedGradientResult best;
  best.error = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < opt.restarts; ++restart) {
    Tensor c = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += c(i, j) = expo(rng);
      for (std::size_t j = 0; j < n; ++j) c(i, j) /= total;
    }
    double value = objective(c);
    double step = 0.1 / opt.lipschitz;
    bool converged = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
      Tensor next = c.clone();
      double moved = 0.0, linear = 0.0;
      // Backtrack until the quadratic upper model holds.
      for (;;) {
        for (std::size_t k = 0; k < c.numel(); ++k) next[k] = c[k] - step * 2.0 * (c[k] - c_g[k]);
        project_rows(next);
        moved = linear = 0.0;
        for (std::size_t k = 0; k < c.numel(); ++k) {
          const double delta = next[k] - c[k];
          moved += delta * delta;
          linear += 2.0 * (c[k] - c_g[k]) * delta;
        }
        if (objective(next) <= value + linear + moved / (2.0 * step) + 1e-15 || step < 1e-12) break;
        step *= 0.5;
      }
      c = next;
      value = objective(c);
      if (std::sqrt(moved) < opt.tolerance) {
        converged = true;
        ++it;
        break;
      }
    }
    const double err = std::sqrt(value);
    if (err < best.error) {
      best.error = err;
      best.c = c;
      best.converged = converged;
      best.iterations = it;
    }
  }
  return best;
}

ErrorReport min_error_over_stochastic(const FilterTarget& target, const ProjectedGradientOptions& opt) {
  const std::size_t n = target.basis.size();
  if (target.f.size() != n) throw DimensionError("min_error_over_stochastic: response length mismatch");
  const Tensor c_g = target.support();
  Tensor closed = c_g.clone();
  for (std::size_t i = 0; i < n; ++i) {
    double row = -1.0;
    for (std::size_t j = 0; j < n; ++j) row += c_g(i, j);
    for (std::size_t j = 0; j < n; ++j) closed(i, j) -= row / static_cast<double>(n);
  }

  ErrorReport r;
  r.e_star_affine = frobenius_distance(closed, c_g);
  r.closed_form_feasible = true;
  for (double v : closed.data()) r.closed_form_feasible = r.closed_form_feasible && v >= -1e-9;
  if (r.closed_form_feasible) {
    r.e_star = r.e_star_affine;
    r.witness = closed;
  } else {
    ProjectedGradientResult pg = min_error_projected_gradient(c_g, opt);
    r.e_star = pg.error;
    r.witness = pg.c;
    r.converged = pg.converged;
  }
  r.feasible = true;
  for (double v : r.witness.data()) r.feasible = r.feasible && v >= -1e-9;

  r.lower = std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (double f : target.f) {
    const double lambda = std::abs(f - 1.0);  // eigenvalues of U (F - I) U^T
    r.lower = std::min(r.lower, lambda);
    r.upper = std::max(r.upper, lambda);
    sq += lambda * lambda;
  }
  r.attention_upper = std::sqrt(sq);
  return r;
}

ErrorReport verify_error_bounds(const FilterTarget& target, double tol, const ProjectedGradientOptions& opt) {
  ErrorReport r = min_error_over_stochastic(target, opt);
  r.lower_ok = r.e_star >= r.lower - tol;
  r.upper_ok = r.e_star <= r.upper + tol;
  r.attention_upper_ok = r.e_star <= r.attention_upper + tol;
  return r;
}

double attention_min_error_search(const FilterTarget& target, const AttentionSearchOptions& opt) {
  const std::size_t n = target.basis.size();
  const std::size_t d = opt.d == 0 ? n : opt.d;
  const Tensor c_g = target.support();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  auto random = [&](Shape s) {
    Tensor t = Tensor::zeros(std::move(s));
    for (auto& v : t.data()) v = nd(rng);
    return t.set_requires_grad(true);
  };

  double best = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < opt.restarts; ++restart) {
    Tensor x = random({n, d}), w_q = random({d, d}), w_k = random({d, d});
    Adam adam({x, w_q, w_k}, opt.lr);
    for (int it = 0; it < opt.iterations; ++it) {
      Tape tape;
      TapeScope scope(tape);
      Tensor logits = scale(matmul(matmul(x, w_q), transpose(matmul(x, w_k))), inv_sqrt_d);
      Tensor err = frobenius_norm(sub(softmax_rows(logits), c_g));
      const double value = err.item();
      if (!std::isfinite(value)) break;
      best = std::min(best, value);
      backward(err);
      adam.step();
    }
  }
  return best;
}

LemmaReport check_lemma_gradients(const Tensor& c_t, const FilterTarget& target, double tol) {
  const std::size_t n = target.basis.size();
  require_square(c_t, n, "check_lemma_gradients");
  LemmaReport r;
  const std::vector<double> diag = rayleigh_diagonal(c_t, target.basis);
  const double h1 = 1e-4, h2 = 1e-3;
  const double base = squared_error(c_t, target.basis, target.f);
  for (std::size_t i = 0; i < n; ++i) {
    r.analytic_gradient.push_back(-2.0 * (diag[i] - target.f[i]));
    r.stated_hessian.push_back(2.0 * diag[i]);
    std::vector<double> f = target.f;
    f[i] = target.f[i] + h1;
    const double up1 = squared_error(c_t, target.basis, f);
    f[i] = target.f[i] - h1;
    const double down1 = squared_error(c_t, target.basis, f);
    r.numeric_gradient.push_back((up1 - down1) / (2.0 * h1));
    f[i] = target.f[i] + h2;
    const double up2 = squared_error(c_t, target.basis, f);
    f[i] = target.f[i] - h2;
    const double down2 = squared_error(c_t, target.basis, f);
    r.numeric_hessian.push_back((up2 - 2.0 * base + down2) / (h2 * h2));
  }
  // Relative error, measured absolutely for gradients below 1 (the gradient
  // vanishes at the optimum).
  for (std::size_t i = 0; i < n; ++i) {
    const double a = r.analytic_gradient[i], b = r.numeric_gradient[i];
    r.gradient_error = std::max(r.gradient_error, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}));
  }
  r.gradient_ok = r.gradient_error < tol;
  r.hessian_ok = r.stated_hessian_nonnegative = true;
  for (std::size_t i = 0; i < n; ++i) {
    r.hessian_ok = r.hessian_ok && r.numeric_hessian[i] >= -1e-9;
    r.stated_hessian_nonnegative = r.stated_hessian_nonnegative && r.stated_hessian[i] >= -1e-9;
  }
  return r;
}

Tensor tied_attention_map(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Tensor x = Tensor::zeros({n, d});
  for (auto& v : x.data()) v = nd(rng);
  return softmax_rows(scale(matmul(x, transpose(x)), 1.0 / std::sqrt(static_cast<double>(d))));
}

}  // namespace feta
