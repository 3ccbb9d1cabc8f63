#include "feta/graph.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feta/errors.h"
#include "feta/ops.h"

namespace feta {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kSymmetryTol = 1e-9;
constexpr double kZeroComponent = 1e-12;

void require_square(const Tensor& m, const char* who) {
  if (m.dim() != 2 || m.rows() != m.cols()) {
    throw DimensionError(std::string(who) + ": expected a square matrix, got " + shape_str(m.shape()));
  }
}

}  // namespace

void Graph::validate() const {
  for (const auto& e : edges) {
    if (e.i >= n || e.j >= n) {
      throw DomainError("graph edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                        ") out of range for " + std::to_string(n) + " nodes");
    }
    if (e.i == e.j) throw DomainError("graph edge is a self-loop at node " + std::to_string(e.i));
    if (!(e.weight >= 0.0)) {
      throw DomainError("negative edge weight " + std::to_string(e.weight) + " on edge (" +
                        std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
    }
  }
}

Tensor Graph::adjacency() const {
  validate();
  Tensor a = Tensor::zeros({n, n});
  for (const auto& e : edges) {
    a(e.i, e.j) += e.weight;
    a(e.j, e.i) += e.weight;
  }
  return a;
}

std::vector<std::vector<std::size_t>> Graph::neighbors() const {
  std::vector<std::vector<std::size_t>> nb(n);
  for (const auto& e : edges) {
    nb[e.i].push_back(e.j);
    nb[e.j].push_back(e.i);
  }
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return nb;
}

std::size_t Graph::component_count() const {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::size_t count = n;
  for (const auto& e : edges) {
    if (e.weight <= 0.0) continue;
    auto a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --count;
    }
  }
  return count;
}

LaplacianMatrix laplacian_from_adjacency(const Tensor& a, LaplacianKind kind) {
  require_square(a, "laplacian_from_adjacency");
  const std::size_t n = a.rows();
  for (double v : a.data()) {
    if (v < 0.0) throw DomainError("laplacian_from_adjacency: negative edge weight");
  }
  Tensor w = a.clone();
  if (kind == LaplacianKind::kSelfLoopNormalized) {
    for (std::size_t i = 0; i < n; ++i) w(i, i) += 1.0;
  }
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += w(i, j);

  Tensor l = Tensor::zeros({n, n});
  if (kind == LaplacianKind::kUnnormalized) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) l(i, j) = (i == j ? degree[i] : 0.0) - w(i, j);
    return {l, kind};
  }
  // Degree-zero nodes get D^{-1/2} = 0 and therefore L[i,i] = 0.
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double ident = (i == j && degree[i] > 0.0) ? 1.0 : 0.0;
      l(i, j) = ident - inv_sqrt[i] * w(i, j) * inv_sqrt[j];
    }
  return {l, kind};
}

Graph path_graph(std::size_t n) {
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
  return g;
}

Graph complete_graph(std::size_t n) {
  Graph g;
  g.n = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
  return g;
}

Graph disjoint_union(const Graph& a, const Graph& b) {
  Graph g;
  g.n = a.n + b.n;
  g.edges = a.edges;
  for (const Edge& e : b.edges) g.edges.push_back({e.i + a.n, e.j + a.n, e.weight});
  return g;
}

LaplacianMatrix build_laplacian(const Graph& g, LaplacianKind kind) {
  return laplacian_from_adjacency(g.adjacency(), kind);
}

SpectralBasis eigendecompose(const Tensor& symmetric) {
  require_square(symmetric, "eigendecompose");
  const std::size_t n = symmetric.rows();
  double scale = 0.0;
  for (double v : symmetric.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(symmetric(i, j) - symmetric(j, i)) > kSymmetryTol * std::max(1.0, scale)) {
        throw ContractError("eigendecompose: matrix is not symmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      }
    }

  std::vector<double> a(symmetric.data().begin(), symmetric.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = a[j * n + i] = 0.5 * (a[i * n + j] + a[j * n + i]);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a[i * n + i] * a[i * n + i];
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    }
    if (off == 0.0 || off <= 1e-32 * (diag + off)) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  struct Pair {
    double value;
    std::vector<double> vec;
  };
  std::vector<Pair> pairs(n);
  for (std::size_t k = 0; k < n; ++k) {
    pairs[k].value = a[k * n + k];
    pairs[k].vec.resize(n);
    for (std::size_t i = 0; i < n; ++i) pairs[k].vec[i] = v[i * n + k];
    for (double c : pairs[k].vec) {
      if (std::abs(c) > kZeroComponent) {
        if (c < 0.0)
          for (auto& x : pairs[k].vec) x = -x;
        break;
      }
    }
  }
  const double tie = 1e-10 * std::max(1.0, scale);
  std::sort(pairs.begin(), pairs.end(), [tie](const Pair& x, const Pair& y) {
    if (std::abs(x.value - y.value) > tie) return x.value < y.value;
    return std::lexicographical_compare(y.vec.begin(), y.vec.end(), x.vec.begin(), x.vec.end());
  });

  SpectralBasis basis;
  basis.u = Tensor::zeros({n, n});
  basis.lambda.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    basis.lambda[k] = pairs[k].value;
    for (std::size_t i = 0; i < n; ++i) basis.u(i, k) = pairs[k].vec[i];
  }
  basis.lambda_max = n ? basis.lambda.back() : 0.0;
  return basis;
}

SpectralBasis eigendecompose(const LaplacianMatrix& l) { return eigendecompose(l.l); }

Tensor graph_fourier(const SpectralBasis& basis, const Tensor& x, FourierDirection direction) {
  if (x.rows() != basis.size()) {
    throw DimensionError("graph_fourier: signal has " + std::to_string(x.rows()) + " rows, basis has " +
                         std::to_string(basis.size()) + " nodes");
  }
  if (direction == FourierDirection::kForward) return matmul(transpose(basis.u), x);
  return matmul(basis.u, x);
}

Tensor rescale_spectrum(const LaplacianMatrix& l, double lambda_max) {
  if (!(lambda_max > 0.0)) {
    throw DomainError("rescale_spectrum: lambda_max must be positive, got " + std::to_string(lambda_max));
  }
  const std::size_t n = l.l.rows();
  Tensor out = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = 2.0 * l.l(i, j) / lambda_max - (i == j ? 1.0 : 0.0);
  return out;
}

Tensor spectral_synthesis(const SpectralBasis& basis, const std::vector<double>& values) {
  const std::size_t n = basis.size();
  if (values.size() != n) {
    throw DimensionError("spectral_synthesis: " + std::to_string(values.size()) + " values for " +
                         std::to_string(n) + " eigenvectors");
  }
  Tensor out = Tensor::zeros({n, n});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double uik = basis.u(i, k) * values[k];
      if (uik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * basis.u(j, k);
    }
  return out;
}

}  // namespace feta
