#include "feta/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "feta/errors.h"

namespace feta {

namespace {

constexpr int kConnectAttempts = 20;
constexpr int kLloydIterations = 50;

std::size_t nearest(const std::vector<double>& centers, double v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < centers.size(); ++c)
    if (std::abs(v - centers[c]) < std::abs(v - centers[best])) best = c;
  return best;
}

}  // namespace

SyntheticPreset synthetic_preset(const std::string& name) {
  SyntheticPreset p;
  p.name = name;
  if (name == "Synthetic_1") {
    p.sbm = {2, 10, 0.9, 0.05};
  } else if (name == "Synthetic_2") {
    p.sbm = {6, 10, 0.9, 0.05};
  } else if (name == "Synthetic_3") {
    p.sbm = {6, 10, 0.9, 0.05};
    p.selection = EigenSelection::kLowMidHigh;
  } else {
    throw ConfigError("unknown synthetic preset '" + name + "'");
  }
  return p;
}

std::vector<std::size_t> eigen_index_set(EigenSelection selection, std::size_t n) {
  if (n < 2) throw DomainError("eigen_index_set: need at least 2 nodes");
  if (selection == EigenSelection::kLowHigh) return {1, n - 1};
  return {1, (n + 1) / 2, n - 1};
}

Graph generate_sbm(const SbmConfig& cfg, std::mt19937_64& rng) {
  if (!(cfg.p_out >= 0.0 && cfg.p_out <= cfg.p_in && cfg.p_in <= 1.0))
    throw DomainError("generate_sbm: need 0 <= p_out <= p_in <= 1");
  if (cfg.nodes() == 0) throw DomainError("generate_sbm: empty graph");
  const std::size_t n = cfg.nodes();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < kConnectAttempts; ++attempt) {
    Graph g;
    g.n = n;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool same = i / cfg.nodes_per_block == j / cfg.nodes_per_block;
        if (u(rng) < (same ? cfg.p_in : cfg.p_out)) g.edges.push_back({i, j, 1.0});
      }
    if (g.component_count() == 1) return g;
  }
  throw DomainError("generate_sbm: no connected sample in 20 attempts");
}

std::vector<int> kmeans_1d(const std::vector<double>& x, std::size_t k, std::mt19937_64& rng) {
  if (k == 0) throw DomainError("kmeans_1d: k must be positive");
  std::vector<double> distinct = x;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 distinct.end());
  if (distinct.size() < k)
    throw DomainError("kmeans_1d: " + std::to_string(distinct.size()) + " distinct values for " + std::to_string(k) +
                      " clusters");

  std::vector<double> centers{x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]};
  while (centers.size() < k) {
    std::vector<double> d2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - centers[nearest(centers, x[i])];
      d2[i] = d * d;
    }
    centers.push_back(x[std::discrete_distribution<std::size_t>(d2.begin(), d2.end())(rng)]);
  }

  std::vector<std::size_t> assign(x.size());
  for (int it = 0; it < kLloydIterations; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) assign[i] = nearest(centers, x[i]);
    std::vector<double> total(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      total[assign[i]] += x[i];
      ++count[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        centers[c] = total[c] / static_cast<double>(count[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      std::size_t far = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = std::abs(x[i] - centers[assign[i]]);
        if (d > worst) {
          worst = d;
          far = i;
        }
      }
      centers[c] = x[far];
      assign[far] = c;
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) assign[i] = nearest(centers, x[i]);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
  std::vector<int> rank(k);
  for (std::size_t r = 0; r < k; ++r) rank[order[r]] = static_cast<int>(r);
  std::vector<int> labels(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) labels[i] = rank[assign[i]];
  return labels;
}

void assign_spectral_signals(Graph& g, std::size_t eig_index, std::size_t classes, std::mt19937_64& rng) {
  if (eig_index == 0 || eig_index >= g.n)
    throw DomainError("assign_spectral_signals: eigenvector index " + std::to_string(eig_index) +
                      " outside [1, " + std::to_string(g.n - 1) + "]");
  const SpectralBasis basis = eigendecompose(build_laplacian(g, LaplacianKind::kNormalized));
  std::vector<double> component(g.n);
  for (std::size_t i = 0; i < g.n; ++i) component[i] = basis.u(i, eig_index);

  g.labels = kmeans_1d(component, classes, rng);
  g.x = Tensor::zeros({g.n, classes});
  for (std::size_t i = 0; i < g.n; ++i) g.x(i, static_cast<std::size_t>(g.labels[i])) = 1.0;

  std::vector<std::size_t> perm(g.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  g.mask.assign(g.n, false);
  for (std::size_t r = 0; r < (g.n + 1) / 2; ++r) {
    g.mask[perm[r]] = true;
    for (std::size_t c = 0; c < classes; ++c) g.x(perm[r], c) = 0.0;
  }
  g.chosen_eig = static_cast<int>(eig_index);
}

DatasetSplit build_synthetic_dataset(const SyntheticPreset& preset, std::uint64_t seed) {
  DatasetSplit out;
  out.name = preset.name;
  const std::size_t total = preset.train + preset.valid + preset.test;
  const auto choices = eigen_index_set(preset.selection, preset.sbm.nodes());
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    std::mt19937_64 rng(seq);
    Graph g = generate_sbm(preset.sbm, rng);
    const std::size_t eig = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
    assign_spectral_signals(g, eig, preset.sbm.blocks, rng);
    auto& dst = idx < preset.train ? out.train : idx < preset.train + preset.valid ? out.valid : out.test;
    dst.push_back(std::move(g));
  }
  return out;
}

DatasetSplit build_synthetic_dataset(const std::string& name, std::uint64_t seed) {
  return build_synthetic_dataset(synthetic_preset(name), seed);
}

}  // namespace feta
