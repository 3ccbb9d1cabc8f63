#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "feta/coeff_gnn.h"
#include "feta/errors.h"
#include "feta/gradcheck.h"
#include "feta/graph.h"
#include "feta/ops.h"

using namespace feta;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Tensor t = Tensor::zeros(std::move(s));
  for (auto& v : t.data()) v = nd(rng);
  return t;
}

Tensor random_stochastic(std::size_t n, std::mt19937_64& rng) { return softmax_rows(random_tensor({n, n}, rng)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(AttentionLaplacian, IdentityMapGivesZero) {
  Tensor l = attention_to_laplacian(Tensor::eye(4));
  for (double v : l.data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(AttentionLaplacian, UniformMapMatchesWeightedCompleteGraph) {
  const std::size_t n = 5;
  Tensor c = Tensor::full({n, n}, 1.0 / n);
  // Direct construction: weights 1/n everywhere, diagonal 1/n + 1.
  Tensor a = Tensor::full({n, n}, 1.0 / n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  const double deg = 2.0;
  Tensor expected = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) expected(i, j) = (i == j ? 1.0 : 0.0) - a(i, j) / deg;
  EXPECT_LT(max_abs_diff(attention_to_laplacian(c), expected), 1e-15);
}

TEST(AttentionLaplacian, StochasticMapsGiveBoundedSpectrum) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor l = attention_to_laplacian(random_stochastic(2 + trial % 7, rng));
    SpectralBasis b = eigendecompose(l);
    EXPECT_GE(b.lambda.front(), -1e-12);
    EXPECT_LE(b.lambda.back(), 2.0 + 1e-12);
  }
}

TEST(MessagePass, ZeroWeightsAndZeroLaplacian) {
  std::mt19937_64 rng(62);
  CoeffGnnParams p = coeff_gnn_init(3, 2, rng);
  Tensor state = random_tensor({5, 4}, rng);
  Tensor l = attention_to_laplacian(random_stochastic(5, rng));
  CoeffGnnParams zero = p;
  zero.w_p[0] = Tensor::zeros({4, 4});
  Tensor through_zero_w = coeff_message_pass(zero, l, state, 0);
  for (double v : through_zero_w.data()) EXPECT_EQ(v, 0.0);
  Tensor through_zero_l = coeff_message_pass(p, Tensor::zeros({5, 5}), state, 1);
  for (double v : through_zero_l.data()) EXPECT_EQ(v, 0.0);
}

TEST(MessagePass, MatchesPerNodeLoop) {
  std::mt19937_64 rng(63);
  CoeffGnnParams p = coeff_gnn_init(4, 1, rng);
  Tensor state = random_tensor({6, 5}, rng);
  Tensor l = attention_to_laplacian(random_stochastic(6, rng));
  Tensor got = coeff_message_pass(p, l, state, 0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t k = 0; k < 5; ++k) s += l(i, j) * state(j, k) * p.w_p[0](k, c);
      EXPECT_NEAR(got(i, c), std::max(s, 0.0), 1e-12);
    }
  EXPECT_THROW(coeff_message_pass(p, l, random_tensor({6, 3}, rng), 0), DimensionError);
  EXPECT_THROW(coeff_message_pass(p, l, state, 1), DimensionError);
}

TEST(Readout, ConstantStatesAndIdentityMlp) {
  std::mt19937_64 rng(64);
  CoeffGnnParams p = coeff_gnn_init(2, 1, rng);
  Tensor v = random_tensor({1, 3}, rng);
  Tensor state = Tensor::zeros({4, 3});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) state(i, j) = v(0, j);
  Tensor direct = add(matmul(relu(add(matmul(v, p.w1), p.b1)), p.w2), p.b2);
  EXPECT_LT(max_abs_diff(coeff_readout(p, state).alpha, direct), 1e-15);

  CoeffGnnParams ident = p;
  ident.w1 = Tensor::eye(3);
  ident.w2 = Tensor::eye(3);
  ident.b1 = Tensor::zeros({1, 3});
  ident.b2 = Tensor::zeros({1, 3});
  Tensor alpha = coeff_readout(ident, Tensor::eye(3)).alpha;
  for (double a : alpha.data()) EXPECT_NEAR(a, 1.0 / 3.0, 1e-15);
}

TEST(Readout, InvariantToNodePermutation) {
  std::mt19937_64 rng(65);
  CoeffGnnParams p = coeff_gnn_init(3, 2, rng);
  const std::size_t n = 6;
  Tensor c = random_stochastic(n, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor pc = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) pc(i, j) = c(perm[i], perm[j]);
  Tensor a = coefficients_from_attention(p, c).alpha;
  Tensor b = coefficients_from_attention(p, pc).alpha;
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(Readout, InitialCoefficientsAreNearAllPass) {
  std::mt19937_64 rng(66);
  CoeffGnnParams p = coeff_gnn_init(4, 2, rng);
  Tensor alpha = coefficients_from_attention(p, random_stochastic(7, rng)).alpha;
  EXPECT_NEAR(alpha[0], 1.0, 0.1);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_NEAR(alpha[k], 0.0, 0.1);

  // Zero output weights realize the prior exactly.
  p.w2 = Tensor::zeros({5, 5});
  alpha = coefficients_from_attention(p, random_stochastic(7, rng)).alpha;
  EXPECT_EQ(alpha[0], 1.0);
  for (std::size_t k = 1; k < 5; ++k) EXPECT_EQ(alpha[k], 0.0);
}

TEST(Readout, GradientsFlowToAttentionAndParameters) {
  std::mt19937_64 rng(67);
  CoeffGnnParams p = coeff_gnn_init(3, 2, rng);
  p.w2 = random_tensor({4, 4}, rng);
  Tensor logits = random_tensor({5, 5}, rng);
  Tensor w = random_tensor({1, 4}, rng);
  auto f = [&] { return sum(mul(coefficients_from_attention(p, softmax_rows(logits)).alpha, w)); };
  std::vector<Tensor> params = p.tensors();
  params.push_back(logits);
  EXPECT_LT(finite_diff_check(f, params), 1e-5);
}

TEST(Orthogonality, Examples) {
  Tensor orth = Tensor::matrix(3, 2, {1, 0, 0, 1, 0, 0});
  EXPECT_EQ(orthogonality_penalty(orth).item(), 0.0);
  Tensor same = Tensor::matrix(2, 2, {1, 1, 0, 0});
  EXPECT_NEAR(orthogonality_penalty(same).item(), std::sqrt(2.0), 1e-15);
  std::mt19937_64 rng(68);
  EXPECT_EQ(orthogonality_penalty(random_tensor({5, 1}, rng)).item(), 0.0);
}

TEST(Orthogonality, ZeroExactlyForOrthogonalSets) {
  std::mt19937_64 rng(69);
  for (int trial = 0; trial < 10; ++trial) {
    // Gram-Schmidt on random columns.
    Tensor a = random_tensor({5, 3}, rng);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        double dot = 0.0, nn = 0.0;
        for (std::size_t r = 0; r < 5; ++r) {
          dot += a(r, c) * a(r, prev);
          nn += a(r, prev) * a(r, prev);
        }
        for (std::size_t r = 0; r < 5; ++r) a(r, c) -= dot / nn * a(r, prev);
      }
    }
    EXPECT_LT(orthogonality_penalty(a).item(), 1e-12);
    Tensor b = random_tensor({5, 3}, rng);
    EXPECT_GT(orthogonality_penalty(b).item(), 1e-6);
  }
}

TEST(Orthogonality, SingleHeadGradientIsFinite) {
  Tensor a = Tensor::matrix(3, 1, {1, 0, 0}).set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  backward(orthogonality_penalty(a));
  for (double g : a.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Orthogonality, Differentiable) {
  std::mt19937_64 rng(70);
  Tensor a = random_tensor({4, 3}, rng);
  EXPECT_LT(finite_diff_check([&] { return orthogonality_penalty(a); }, {a}), 1e-7);
}
