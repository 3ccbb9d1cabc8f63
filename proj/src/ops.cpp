#include "feta/ops.h"

#include <algorithm>
#include <cmath>

#include "feta/errors.h"

namespace feta {

namespace {

// Gradient buffer of parent i, or nullptr when that parent is a constant.
std::vector<double>* parent_grad(TensorImpl& node, std::size_t i) {
  auto& p = node.parents[i];
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return &p->grad;
}

enum class Broadcast { kSame, kScalar, kRow, kCol };

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dim() > 2 || b.dim() > 2) {
    throw DimensionError(std::string(op) + ": only 1-D/2-D tensors supported, got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.numel() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(b.shape()) + " onto " +
                       shape_str(a.shape()));
}

inline std::size_t bindex(Broadcast mode, std::size_t i, std::size_t j, std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame: return i * cols + j;
    case Broadcast::kScalar: return 0;
    case Broadcast::kRow: return j;
    case Broadcast::kCol: return i;
  }
  return 0;
}

template <typename F, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA da, DB db) {
  const Broadcast mode = classify(a, b, name);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = f(av[i * n + j], bv[bindex(mode, i, j, n)]);
  Tensor ac = a, bc = b;
  return make_result(a.shape(), std::move(out), {a, b}, [ac, bc, mode, m, n, da, db](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    auto* gb = parent_grad(node, 1);
    auto av = ac.data();
    auto bv = bc.data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const std::size_t kb = bindex(mode, i, j, n);
        const double g = node.grad[k];
        if (ga) (*ga)[k] += g * da(av[k], bv[kb]);
        if (gb) (*gb)[kb] += g * db(av[k], bv[kb]);
      }
    }
  });
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D d) {
  std::vector<double> out(a.numel());
  auto av = a.data();
  std::transform(av.begin(), av.end(), out.begin(), f);
  Tensor ac = a;
  return make_result(a.shape(), std::move(out), {a}, [ac, d](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    auto av = ac.data();
    for (std::size_t k = 0; k < av.size(); ++k) (*ga)[k] += node.grad[k] * d(av[k], node.data[k]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() > 2 || b.dim() > 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = bv.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += x * brow[j];
    }
  }
  Tensor ac = a, bc = b;
  return make_result({m, n}, std::move(out), {a, b}, [ac, bc, m, k, n](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    auto* gb = parent_grad(node, 1);
    auto av = ac.data();
    auto bv = bc.data();
    const auto& g = node.grad;
    if (ga) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          (*ga)[i * k + p] += s;
        }
    }
    if (gb) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += x * g[i * n + j];
        }
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = av.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      s += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= s;
  }
  return make_result(a.shape(), std::move(out), {a}, [m, n](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    const auto& y = node.data;
    const auto& g = node.grad;
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_result({n, m}, std::move(out), {a}, [m, n](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += node.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  if (count != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(std::move(shape), std::move(out), {a}, [](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    for (std::size_t k = 0; k < node.grad.size(); ++k) (*ga)[k] += node.grad[k];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row count mismatch " + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    }
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(m * total);
  for (std::size_t t = 0; t < parts.size(); ++t) {
    const std::size_t c = parts[t].cols();
    auto pv = parts[t].data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pv.data() + i * c, c, out.data() + i * total + offsets[t]);
  }
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.cols());
  return make_result({m, total}, std::move(out), parts, [m, total, offsets, widths](TensorImpl& node) {
    for (std::size_t t = 0; t < widths.size(); ++t) {
      auto* gp = parent_grad(node, t);
      if (!gp) continue;
      const std::size_t c = widths[t];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gp)[i * c + j] += node.grad[i * total + offsets[t] + j];
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t m = a.rows(), n = a.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + shape_str(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i) std::copy_n(av.data() + i * n + begin, w, out.data() + i * w);
  return make_result({m, w}, std::move(out), {a}, [m, n, w, begin](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) (*ga)[i * n + begin + j] += node.grad[i * w + j];
  });
}

Tensor mean(const Tensor& a, int axis) {
  const std::size_t m = a.rows(), n = a.cols();
  auto av = a.data();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
    for (auto& v : out) v /= static_cast<double>(m);
    return make_result({1, n}, std::move(out), {a}, [m, n](TensorImpl& node) {
      auto* ga = parent_grad(node, 0);
      if (!ga) return;
      const double inv = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += node.grad[j] * inv;
    });
  }
  if (axis == 1) {
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i] += av[i * n + j];
    for (auto& v : out) v /= static_cast<double>(n);
    return make_result({m, 1}, std::move(out), {a}, [m, n](TensorImpl& node) {
      auto* ga = parent_grad(node, 0);
      if (!ga) return;
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*ga)[i * n + j] += node.grad[i] * inv;
    });
  }
  throw DimensionError("mean: axis must be 0 or 1, got " + std::to_string(axis));
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({1}, {s}, {a}, [](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    for (auto& g : *ga) g += node.grad[0];
  });
}

Tensor layer_norm(const Tensor& a, double eps) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.numel());
  std::vector<double> inv_std(m);
  auto av = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = av.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (row[j] - mu) * inv_std[i];
  }
  return make_result(a.shape(), std::move(out), {a}, [m, n, inv_std](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga) return;
    const auto& y = node.data;
    const auto& g = node.grad;
    for (std::size_t i = 0; i < m; ++i) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mg += g[i * n + j];
        mgy += g[i * n + j] * y[i * n + j];
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j)
        (*ga)[i * n + j] += inv_std[i] * (g[i * n + j] - mg - y[i * n + j] * mgy);
    }
  });
}

Tensor frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  const double norm = std::sqrt(s);
  Tensor ac = a;
  return make_result({1}, {norm}, {a}, [ac, norm](TensorImpl& node) {
    auto* ga = parent_grad(node, 0);
    if (!ga || norm == 0.0) return;
    auto av = ac.data();
    for (std::size_t k = 0; k < av.size(); ++k) (*ga)[k] += node.grad[0] * av[k] / norm;
  });
}

}  // namespace feta
