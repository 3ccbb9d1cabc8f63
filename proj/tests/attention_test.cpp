#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "feta/attention.h"
#include "feta/errors.h"
#include "feta/gradcheck.h"
#include "feta/ops.h"

using namespace feta;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Tensor t = Tensor::zeros(std::move(s));
  for (auto& v : t.data()) v = nd(rng);
  return t;
}

std::vector<HeadParams> random_heads(std::size_t h, std::size_t din, std::size_t dout, std::mt19937_64& rng) {
  std::vector<HeadParams> p;
  for (std::size_t i = 0; i < h; ++i)
    p.push_back({random_tensor({din, dout}, rng), random_tensor({din, dout}, rng), random_tensor({din, dout}, rng)});
  return p;
}

Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  Graph g;
  g.n = n;
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) g.edges.push_back({i, j, 1.0});
  return g;
}

void expect_stochastic(const Tensor& c, double tol = 1e-10) {
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      EXPECT_GE(c(i, j), 0.0);
      row += c(i, j);
    }
    EXPECT_NEAR(row, 1.0, tol);
  }
}

double spectral_radius(const Tensor& c) {
  Eigen::MatrixXd m(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) m(i, j) = c(i, j);
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST(ScaledDot, ZeroInputGivesUniformMap) {
  std::mt19937_64 rng(31);
  AttentionConfig cfg{2, 3, 4};
  auto out = scaled_dot_attention(cfg, Tensor::zeros({5, 3}), random_heads(2, 3, 4, rng));
  ASSERT_EQ(out.map.c.size(), 2u);
  for (const auto& c : out.map.c)
    for (double v : c.data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(ScaledDot, SingleNode) {
  std::mt19937_64 rng(32);
  AttentionConfig cfg{1, 3, 2};
  auto heads = random_heads(1, 3, 2, rng);
  Tensor x = random_tensor({1, 3}, rng);
  auto out = scaled_dot_attention(cfg, x, heads);
  EXPECT_EQ(out.map.c[0](0, 0), 1.0);
  Tensor v = matmul(x, heads[0].w_v);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out.heads[0](0, j), v(0, j), 1e-15);
}

TEST(ScaledDot, RandomMapsAreStochasticWithBoundedSpectrum) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 7;
    AttentionConfig cfg{1, 4, 3};
    cfg.tie_query_key = trial % 2 == 0;
    auto out = scaled_dot_attention(cfg, random_tensor({n, 4}, rng, 2.0), random_heads(1, 4, 3, rng));
    expect_stochastic(out.map.c[0]);
    EXPECT_LE(spectral_radius(out.map.c[0]), 1.0 + 1e-8);
  }
}

TEST(ScaledDot, TiedKeysMakeSymmetricLogits) {
  std::mt19937_64 rng(34);
  AttentionConfig cfg{1, 3, 3};
  cfg.tie_query_key = true;
  auto heads = random_heads(1, 3, 3, rng);
  Tensor x = random_tensor({4, 3}, rng);
  auto tied = scaled_dot_attention(cfg, x, heads);
  heads[0].w_k = heads[0].w_q;
  cfg.tie_query_key = false;
  auto explicit_tie = scaled_dot_attention(cfg, x, heads);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(tied.map.c[0][i], explicit_tie.map.c[0][i]);
}

TEST(ScaledDot, PermutationEquivariance) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + trial % 6;
    AttentionConfig cfg{2, 3, 2};
    auto heads = random_heads(2, 3, 2, rng);
    Tensor x = random_tensor({n, 3}, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor px = Tensor::zeros({n, 3});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 3; ++j) px(i, j) = x(perm[i], j);
    auto a = scaled_dot_attention(cfg, x, heads);
    auto b = scaled_dot_attention(cfg, px, heads);
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(b.map.c[h](i, j), a.map.c[h](perm[i], perm[j]), 1e-12);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b.heads[h](i, j), a.heads[h](perm[i], j), 1e-12);
      }
    }
  }
}

TEST(ScaledDot, ShapeErrors) {
  std::mt19937_64 rng(36);
  AttentionConfig cfg{2, 3, 2};
  EXPECT_THROW(scaled_dot_attention(cfg, Tensor::zeros({4, 5}), random_heads(2, 3, 2, rng)), DimensionError);
  EXPECT_THROW(scaled_dot_attention(cfg, Tensor::zeros({4, 3}), random_heads(1, 3, 2, rng)), DimensionError);
}

TEST(ScaledDot, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(37);
  AttentionConfig cfg{2, 3, 2};
  auto heads = random_heads(2, 3, 2, rng);
  Tensor x = random_tensor({5, 3}, rng);
  Tensor w = random_tensor({5, 2}, rng);
  auto f = [&] {
    auto out = scaled_dot_attention(cfg, x, heads);
    return add(sum(mul(out.heads[0], w)), sum(mul(out.heads[1], out.heads[1])));
  };
  std::vector<Tensor> params{x};
  for (auto& h : heads) params.insert(params.end(), {h.w_q, h.w_k, h.w_v});
  EXPECT_LT(finite_diff_check(f, params), 1e-6);
}

namespace {

std::vector<GatHeadParams> gat_heads(std::size_t h, std::size_t din, std::size_t dout, std::mt19937_64& rng) {
  std::vector<GatHeadParams> p;
  for (std::size_t i = 0; i < h; ++i)
    p.push_back({random_tensor({din, dout}, rng), random_tensor({dout, 1}, rng), random_tensor({dout, 1}, rng)});
  return p;
}

}  // namespace

TEST(Gat, CompleteGraphWithZeroAttentionVectorIsUniform) {
  std::mt19937_64 rng(41);
  Graph g;
  g.n = 5;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) g.edges.push_back({i, j, 1.0});
  AttentionConfig cfg{1, 3, 2};
  auto heads = gat_heads(1, 3, 2, rng);
  heads[0].a_src = Tensor::zeros({2, 1});
  heads[0].a_dst = Tensor::zeros({2, 1});
  auto out = gat_attention(cfg, g, random_tensor({5, 3}, rng), heads);
  for (double v : out.map.c[0].data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Gat, IsolatedNodeAttendsToItself) {
  std::mt19937_64 rng(42);
  Graph g{3, {{0, 1}}};
  AttentionConfig cfg{1, 2, 2};
  auto out = gat_attention(cfg, g, random_tensor({3, 2}, rng), gat_heads(1, 2, 2, rng));
  EXPECT_EQ(out.map.c[0](2, 2), 1.0);
  EXPECT_EQ(out.map.c[0](2, 0), 0.0);
  EXPECT_EQ(out.map.c[0](2, 1), 0.0);
}

TEST(Gat, PathSupportIsNeighborhood) {
  std::mt19937_64 rng(43);
  Graph g{3, {{0, 1}, {1, 2}}};
  AttentionConfig cfg{2, 3, 2};
  auto out = gat_attention(cfg, g, random_tensor({3, 3}, rng), gat_heads(2, 3, 2, rng));
  for (const auto& c : out.map.c) {
    EXPECT_EQ(c(0, 2), 0.0);
    EXPECT_EQ(c(2, 0), 0.0);
    EXPECT_GT(c(0, 0), 0.0);
    EXPECT_GT(c(1, 2), 0.0);
    expect_stochastic(c);
  }
}

TEST(Gat, MatchesLogitFormulaAndDifferentiates) {
  std::mt19937_64 rng(44);
  Graph g = random_graph(6, 0.5, rng);
  AttentionConfig cfg{1, 3, 2};
  auto heads = gat_heads(1, 3, 2, rng);
  Tensor x = random_tensor({6, 3}, rng);
  auto out = gat_attention(cfg, g, x, heads);
  Tensor z = matmul(x, heads[0].w);
  auto nb = g.neighbors();
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<std::size_t> cand = nb[i];
    cand.push_back(i);
    std::vector<double> e;
    double zsum = 0.0;
    for (auto j : cand) {
      double s = 0.0;
      for (std::size_t k = 0; k < 2; ++k) s += heads[0].a_src(k, 0) * z(i, k) + heads[0].a_dst(k, 0) * z(j, k);
      s = s > 0 ? s : 0.2 * s;
      e.push_back(std::exp(s));
      zsum += e.back();
    }
    for (std::size_t c = 0; c < cand.size(); ++c) EXPECT_NEAR(out.map.c[0](i, cand[c]), e[c] / zsum, 1e-12);
  }
  Tensor w = random_tensor({6, 2}, rng);
  auto f = [&] { return sum(mul(gat_attention(cfg, g, x, heads).heads[0], w)); };
  EXPECT_LT(finite_diff_check(f, {x, heads[0].w, heads[0].a_src, heads[0].a_dst}), 1e-6);
}

TEST(PeKernel, TrivialLimits) {
  std::mt19937_64 rng(45);
  Graph g = random_graph(5, 0.7, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  AttentionConfig cfg;
  cfg.beta = 0.0;
  Tensor kd = build_pe_kernel(l, PeMode::kKernelDiffusion, cfg);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(kd(i, j), i == j ? 1.0 : 0.0, 1e-12);

  cfg.gamma = 0.0;
  Tensor k0 = build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(k0[i], Tensor::eye(5)[i]);
  cfg.gamma = 0.5;
  cfg.walk_steps = 0;
  Tensor kp0 = build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(kp0[i], Tensor::eye(5)[i]);

  cfg.gamma = 0.3;
  cfg.walk_steps = 1;
  Tensor k1 = build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(k1(i, j), (i == j ? 1.0 : 0.0) - 0.3 * l.l(i, j));
}

TEST(PeKernel, DiffusionMatchesMatrixExponential) {
  std::mt19937_64 rng(46);
  Graph g = random_graph(6, 0.6, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  AttentionConfig cfg;
  cfg.beta = 0.7;
  Tensor kd = build_pe_kernel(l, PeMode::kKernelDiffusion, cfg);
  // Truncated Taylor series as an independent oracle.
  Tensor term = Tensor::eye(6), acc = Tensor::eye(6);
  for (int k = 1; k < 40; ++k) {
    term = scale(matmul(term, l.l), -cfg.beta / k);
    acc = add(acc, term);
  }
  for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(kd[i], acc[i], 1e-10);
}

TEST(PeKernel, DomainErrors) {
  Graph g{3, {{0, 1}, {1, 2}}};
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  AttentionConfig cfg;
  cfg.beta = -1.0;
  EXPECT_THROW(build_pe_kernel(l, PeMode::kKernelDiffusion, cfg), DomainError);
  cfg.gamma = 0.9;  // lambda_max = 2 for the path of three
  EXPECT_THROW(build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg), DomainError);
  cfg.gamma = 0.3;
  cfg.walk_steps = -1;
  EXPECT_THROW(build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg), DomainError);
  EXPECT_THROW(build_pe_kernel(l, PeMode::kNone, cfg), DomainError);
}

TEST(KernelPe, MatchesProductFormula) {
  std::mt19937_64 rng(47);
  Graph g = random_graph(6, 0.5, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  AttentionConfig cfg{1, 3, 2};
  cfg.tie_query_key = true;
  cfg.gamma = 0.5;
  cfg.walk_steps = 2;
  Tensor kernel = build_pe_kernel(l, PeMode::kKernelRandomWalk, cfg);
  auto heads = random_heads(1, 3, 2, rng);
  Tensor x = random_tensor({6, 3}, rng);
  auto out = kernel_pe_attention(cfg, x, kernel, heads);
  Tensor q = matmul(x, heads[0].w_q);
  Tensor s = matmul(q, transpose(q));
  for (std::size_t i = 0; i < 6; ++i) {
    double z = 0.0;
    std::vector<double> w(6);
    for (std::size_t j = 0; j < 6; ++j) z += w[j] = std::exp(s(i, j) / std::sqrt(2.0)) * kernel(i, j);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(out.map.c[0](i, j), w[j] / z, 1e-12);
  }
}

TEST(KernelPe, ZeroRowsFallBackToUniform) {
  std::mt19937_64 rng(48);
  AttentionConfig cfg{1, 2, 2};
  cfg.tie_query_key = true;
  Tensor kernel = Tensor::eye(4);
  for (std::size_t j = 0; j < 4; ++j) kernel(2, j) = 0.0;
  auto out = kernel_pe_attention(cfg, random_tensor({4, 2}, rng), kernel, random_heads(1, 2, 2, rng));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.map.c[0](2, j), 0.25, 1e-15);
  EXPECT_EQ(out.map.c[0](0, 0), 1.0);
  expect_stochastic(out.map.c[0]);
}

TEST(KernelPe, ContractAndDomainErrors) {
  std::mt19937_64 rng(49);
  AttentionConfig cfg{1, 2, 2};
  auto heads = random_heads(1, 2, 2, rng);
  Tensor x = random_tensor({3, 2}, rng);
  EXPECT_THROW(kernel_pe_attention(cfg, x, Tensor::eye(3), heads), ContractError);
  cfg.tie_query_key = true;
  Tensor neg = Tensor::eye(3);
  neg(0, 1) = -0.1;
  EXPECT_THROW(kernel_pe_attention(cfg, x, neg, heads), DomainError);
}

TEST(KernelPe, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(50);
  Graph g = random_graph(5, 0.6, rng);
  AttentionConfig cfg{1, 3, 2};
  cfg.tie_query_key = true;
  cfg.beta = 0.5;
  Tensor kernel = build_pe_kernel(build_laplacian(g, LaplacianKind::kNormalized), PeMode::kKernelDiffusion, cfg);
  auto heads = random_heads(1, 3, 2, rng);
  Tensor x = random_tensor({5, 3}, rng);
  Tensor w = random_tensor({5, 2}, rng);
  auto f = [&] { return sum(mul(kernel_pe_attention(cfg, x, kernel, heads).heads[0], w)); };
  EXPECT_LT(finite_diff_check(f, {x, heads[0].w_q, heads[0].w_v}), 1e-6);
}

TEST(LapPe, AddsProjectedNontrivialEigenvectors) {
  std::mt19937_64 rng(51);
  Graph g = random_graph(6, 0.6, rng);
  SpectralBasis b = eigendecompose(build_laplacian(g, LaplacianKind::kNormalized));
  Tensor x = random_tensor({6, 3}, rng);
  Tensor p = random_tensor({2, 3}, rng);
  std::vector<double> signs{1.0, -1.0};
  Tensor out = laplacian_pe_features(b, x, 2, p, signs);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double pe = b.u(i, 1) * p(0, j) - b.u(i, 2) * p(1, j);
      EXPECT_NEAR(out(i, j), x(i, j) + pe, 1e-14);
    }
  EXPECT_EQ(laplacian_pe_features(b, x, 0, Tensor::zeros({0, 3}), {}).impl(), x.impl());
}

TEST(LapPe, FullRankPadsAndBounds) {
  std::mt19937_64 rng(52);
  Graph g{3, {{0, 1}, {1, 2}}};
  SpectralBasis b = eigendecompose(build_laplacian(g, LaplacianKind::kNormalized));
  Tensor x = Tensor::zeros({3, 1});
  Tensor p = Tensor::matrix(3, 1, {0, 0, 5});
  Tensor out = laplacian_pe_features(b, x, 3, p, {1, 1, 1});
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(laplacian_pe_features(b, x, 4, Tensor::zeros({4, 1}), {1, 1, 1, 1}), DomainError);
}
