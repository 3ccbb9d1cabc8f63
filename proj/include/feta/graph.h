#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "feta/tensor.h"

namespace feta {

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 1.0;
};

// Undirected graph with node signals. Self-loops are never stored; routines
// that need them add them explicitly.
struct Graph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  Tensor x;  // n x d node signals
  std::vector<int> labels;
  std::vector<bool> mask;  // true marks a supervised node
  std::vector<double> targets;  // graph regression targets
  int chosen_eig = -1;          // eigenvector behind a synthetic signal

  // Throws DomainError on out-of-range endpoints, self-loops or negative weights.
  void validate() const;
  Tensor adjacency() const;
  std::vector<std::vector<std::size_t>> neighbors() const;
  std::size_t component_count() const;
};

struct DatasetSplit {
  std::string name;
  std::vector<Graph> train, valid, test;
};

enum class LaplacianKind { kNormalized, kUnnormalized, kSelfLoopNormalized };

struct LaplacianMatrix {
  Tensor l;
  LaplacianKind kind = LaplacianKind::kNormalized;
};

struct SpectralBasis {
  Tensor u;                    // eigenvectors in columns
  std::vector<double> lambda;  // ascending
  double lambda_max = 0.0;

  std::size_t size() const { return lambda.size(); }
};

// Unit-weight families with no signals.
Graph path_graph(std::size_t n);
Graph complete_graph(std::size_t n);
// b's nodes are renumbered after a's.
Graph disjoint_union(const Graph& a, const Graph& b);

LaplacianMatrix build_laplacian(const Graph& g, LaplacianKind kind);
// Same construction from a dense symmetric non-negative weight matrix.
LaplacianMatrix laplacian_from_adjacency(const Tensor& a, LaplacianKind kind);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
// ascending; every eigenvector's first nonzero component is positive; vectors
// of (numerically) equal eigenvalues are ordered lexicographically.
SpectralBasis eigendecompose(const Tensor& symmetric);
SpectralBasis eigendecompose(const LaplacianMatrix& l);

enum class FourierDirection { kForward, kInverse };

// Forward: U^T X. Inverse: U X. Differentiable in X.
Tensor graph_fourier(const SpectralBasis& basis, const Tensor& x, FourierDirection direction);

// 2 L / lambda_max - I.
Tensor rescale_spectrum(const LaplacianMatrix& l, double lambda_max);

// U diag(values) U^T.
Tensor spectral_synthesis(const SpectralBasis& basis, const std::vector<double>& values);

}  // namespace feta
