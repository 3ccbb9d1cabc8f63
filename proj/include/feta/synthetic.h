#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "feta/graph.h"

namespace feta {

struct SbmConfig {
  std::size_t blocks = 2;           // B
  std::size_t nodes_per_block = 10;  // N
  double p_in = 0.9;
  double p_out = 0.05;

  std::size_t nodes() const { return blocks * nodes_per_block; }
};

enum class EigenSelection {
  kLowHigh,     // {1, n-1}
  kLowMidHigh,  // {1, ceil(n/2), n-1}
};

struct SyntheticPreset {
  std::string name;
  SbmConfig sbm;
  EigenSelection selection = EigenSelection::kLowHigh;
  std::size_t train = 1000;
  std::size_t valid = 100;
  std::size_t test = 100;
};

// "Synthetic_1", "Synthetic_2" or "Synthetic_3"; ConfigError otherwise.
SyntheticPreset synthetic_preset(const std::string& name);

// Eigenvector indices (0-based, ascending eigenvalue) a preset may draw from.
std::vector<std::size_t> eigen_index_set(EigenSelection selection, std::size_t n);

// Undirected unit-weight SBM with blocks of exactly N consecutive nodes,
// resampled until connected. DomainError on invalid probabilities or after
// 20 disconnected draws.
Graph generate_sbm(const SbmConfig& cfg, std::mt19937_64& rng);

// 1-D k-means (k-means++ seeding, 50 Lloyd iterations). Cluster ids are
// ordered by centroid. DomainError when x has fewer than k distinct values.
std::vector<int> kmeans_1d(const std::vector<double>& x, std::size_t k, std::mt19937_64& rng);

// Clusters the components of eigenvector `eig_index` into `classes` labels,
// writes one-hot features, then zeroes the features of exactly ceil(n/2)
// random nodes. Those hidden nodes form the supervision mask.
void assign_spectral_signals(Graph& g, std::size_t eig_index, std::size_t classes, std::mt19937_64& rng);

// Graph i draws from its own stream seeded by (seed, i), so the result does
// not depend on generation order.
DatasetSplit build_synthetic_dataset(const SyntheticPreset& preset, std::uint64_t seed);
DatasetSplit build_synthetic_dataset(const std::string& name, std::uint64_t seed);

}  // namespace feta
