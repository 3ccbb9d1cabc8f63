#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "feta/cheb_filter.h"
#include "feta/errors.h"
#include "feta/gradcheck.h"
#include "feta/graph.h"
#include "feta/ops.h"

using namespace feta;

namespace {

Graph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  Graph g;
  g.n = n;
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) g.edges.push_back({i, j, 1.0});
  return g;
}

Tensor random_tensor(Shape s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Tensor t = Tensor::zeros(std::move(s));
  for (auto& v : t.data()) v = nd(rng);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

}  // namespace

TEST(ChebEval, BaseCasesAndClosedForms) {
  EXPECT_EQ(cheb_eval(0, 0.7), 1.0);
  EXPECT_EQ(cheb_eval(1, 0.3), 0.3);
  EXPECT_NEAR(cheb_eval(2, 0.5), -0.5, 1e-15);
  EXPECT_NEAR(cheb_eval(5, 0.8), std::cos(5.0 * std::acos(0.8)), 1e-12);
  EXPECT_THROW(cheb_eval(-1, 0.1), DomainError);
}

TEST(ChebEval, MatrixPolynomialMatchesScalarOnSpectrum) {
  std::mt19937_64 rng(21);
  Graph g = random_graph(6, 0.6, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  Tensor lt = rescale_spectrum(l, 2.0);
  SpectralBasis b = eigendecompose(lt);
  Tensor t3 = cheb_eval(3, lt);
  std::vector<double> vals;
  for (double x : b.lambda) vals.push_back(cheb_eval(3, x));
  EXPECT_LT(max_abs_diff(t3, spectral_synthesis(b, vals)), 1e-12);
}

TEST(FrequencyResponse, AllPassIdentityAndSecondOrder) {
  auto grid = response_grid();
  ASSERT_EQ(grid.size(), 256u);
  EXPECT_EQ(grid.front(), -1.0);
  EXPECT_EQ(grid.back(), 1.0);
  for (std::size_t j = 1; j < grid.size(); ++j) EXPECT_GT(grid[j], grid[j - 1]);

  auto r0 = frequency_response({Tensor::from({5}, {1, 0, 0, 0, 0})}, grid);
  for (double m : r0.magnitude) EXPECT_EQ(m, 1.0);
  auto r1 = frequency_response({Tensor::from({3}, {0, 1, 0})}, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_EQ(r1.magnitude[j], grid[j]);
  std::vector<double> half{0.5};
  auto r2 = frequency_response({Tensor::from({3}, {0, 0, 1})}, half);
  EXPECT_NEAR(r2.magnitude[0], -0.5, 1e-15);

  std::vector<double> bad{1.5};
  EXPECT_THROW(frequency_response({Tensor::from({1}, {1})}, bad), DomainError);
}

TEST(ApplyFilter, UnitCoefficients) {
  std::mt19937_64 rng(22);
  Graph g = random_graph(7, 0.5, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({7, 3}, rng);
  EXPECT_EQ(max_abs_diff(apply_filter({Tensor::from({4}, {1, 0, 0, 0})}, lt, x), x), 0.0);
  EXPECT_LT(max_abs_diff(apply_filter({Tensor::from({4}, {0, 1, 0, 0})}, lt, x), matmul(lt, x)), 1e-15);
  EXPECT_THROW(apply_filter({Tensor::from({2}, {1, 0})}, lt, Tensor::zeros({6, 3})), DimensionError);
}

TEST(ApplyFilter, MatchesSpectralDomainOracle) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g = random_graph(10, 0.35, rng);
    auto l = build_laplacian(g, LaplacianKind::kNormalized);
    // Independent oracle: Eigen's eigensolver and the trigonometric form of T_k.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(l.l));
    const double lmax = es.eigenvalues().maxCoeff();
    Tensor lt = rescale_spectrum(l, lmax);
    Tensor alpha = random_tensor({9}, rng);
    Tensor x = random_tensor({10, 4}, rng);
    Eigen::VectorXd response(10);
    for (int i = 0; i < 10; ++i) {
      const double t = std::clamp(2.0 * es.eigenvalues()(i) / lmax - 1.0, -1.0, 1.0);
      double s = 0.0;
      for (int k = 0; k <= 8; ++k) s += alpha[k] * std::cos(k * std::acos(t));
      response(i) = s;
    }
    Eigen::MatrixXd u = es.eigenvectors();
    Eigen::MatrixXd expected = u * response.asDiagonal() * u.transpose() * to_eigen(x);
    Tensor got = apply_filter({alpha}, lt, x);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(got(i, j), expected(i, j), 1e-8);
  }
}

TEST(ApplyFilter, LinearInCoefficients) {
  std::mt19937_64 rng(24);
  Graph g = random_graph(8, 0.5, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({8, 2}, rng);
  Tensor a1 = random_tensor({6}, rng), a2 = random_tensor({6}, rng);
  Tensor lhs = apply_filter({add(a1, a2)}, lt, x);
  Tensor rhs = add(apply_filter({a1}, lt, x), apply_filter({a2}, lt, x));
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-10);
}

TEST(ApplyFilter, DifferentiableInAlphaAndSignal) {
  std::mt19937_64 rng(25);
  Graph g = random_graph(6, 0.6, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({6, 2}, rng);
  Tensor alpha = random_tensor({1, 5}, rng);
  Tensor w = random_tensor({6, 2}, rng);
  auto f = [&] { return sum(mul(apply_filter({alpha}, lt, x), w)); };
  EXPECT_LT(finite_diff_check(f, {alpha, x}), 1e-7);
}

TEST(Arma, ZeroPoleReducesToGain) {
  std::mt19937_64 rng(26);
  Graph g = random_graph(5, 0.6, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({5, 2}, rng);
  ArmaParams p{{0.0, 0.0}, Tensor::from({2}, {0.7, 0.5}), {}, 15};
  EXPECT_LT(max_abs_diff(arma_apply(p, lt, x), scale(x, 1.2)), 1e-14);
}

TEST(Arma, ZeroIterationsIsGain) {
  std::mt19937_64 rng(27);
  Graph g = random_graph(5, 0.6, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({5, 2}, rng);
  ArmaParams p{{0.6}, Tensor::from({1}, {-1.5}), {}, 0};
  EXPECT_LT(max_abs_diff(arma_apply(p, lt, x), scale(x, -1.5)), 1e-14);
}

TEST(Arma, MatchesDirectSolve) {
  std::mt19937_64 rng(28);
  Graph g = random_graph(6, 0.6, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  Tensor lt = rescale_spectrum(l, eigendecompose(l).lambda_max);
  Tensor x = random_tensor({6, 3}, rng);
  ArmaParams p{{0.4}, Tensor::from({1}, {1.0}), {}, 50};
  Tensor got = arma_apply(p, lt, x);
  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(6, 6) - 0.4 * to_eigen(lt);
  Eigen::MatrixXd y = sys.partialPivLu().solve(to_eigen(x));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), y(i, j), 1e-8);
}

TEST(Arma, DirectTermAndGuards) {
  std::mt19937_64 rng(29);
  Graph g = random_graph(4, 0.8, rng);
  Tensor lt = rescale_spectrum(build_laplacian(g, LaplacianKind::kNormalized), 2.0);
  Tensor x = random_tensor({4, 2}, rng);
  ArmaParams pass{{0.3, -0.3}, Tensor::from({2}, {0.0, 0.0}), Tensor::scalar(1.0), 15};
  EXPECT_EQ(max_abs_diff(arma_apply(pass, lt, x), x), 0.0);
  ArmaParams bad{{1.0}, Tensor::from({1}, {1.0}), {}, 5};
  EXPECT_THROW(arma_apply(bad, lt, x), DomainError);
  ArmaParams mismatch{{0.1, 0.2}, Tensor::from({1}, {1.0}), {}, 5};
  EXPECT_THROW(arma_apply(mismatch, lt, x), DimensionError);
}

TEST(Arma, ResponseMatchesSpectralAction) {
  std::mt19937_64 rng(27);
  Graph g = random_graph(8, 0.5, rng);
  auto l = build_laplacian(g, LaplacianKind::kNormalized);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(l.l));
  const double lmax = es.eigenvalues().maxCoeff();
  Tensor lt = rescale_spectrum(l, lmax);
  ArmaParams p;
  p.a = arma_default_poles(4);
  p.b = random_tensor({4}, rng);
  p.direct = Tensor::scalar(0.3);
  p.iterations = 6;
  std::vector<double> spectrum;
  for (int i = 0; i < 8; ++i) spectrum.push_back(std::clamp(2.0 * es.eigenvalues()(i) / lmax - 1.0, -1.0, 1.0));
  FrequencyResponse r = arma_frequency_response(p, spectrum);
  Eigen::VectorXd response = Eigen::Map<Eigen::VectorXd>(r.magnitude.data(), 8);
  Tensor x = random_tensor({8, 3}, rng);
  Eigen::MatrixXd u = es.eigenvectors();
  Eigen::MatrixXd expected = u * response.asDiagonal() * u.transpose() * to_eigen(x);
  Tensor got = arma_apply(p, lt, x);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), expected(i, j), 1e-9);

  // All-pass: alpha = e0.
  p.b = Tensor::zeros({4});
  p.direct = Tensor::scalar(1.0);
  for (double v : arma_frequency_response(p, response_grid(16)).magnitude) EXPECT_EQ(v, 1.0);
}

TEST(Arma, DefaultPolesInsideUnitInterval) {
  auto poles = arma_default_poles(4);
  ASSERT_EQ(poles.size(), 4u);
  EXPECT_NEAR(poles.front(), -0.9, 1e-15);
  EXPECT_NEAR(poles.back(), 0.9, 1e-15);
  EXPECT_EQ(arma_default_poles(1)[0], 0.0);
}

TEST(ChebyshevFit, SupErrorShrinksWithOrder) {
  auto grid = response_grid(256);
  auto target = [](double x) { return std::exp(-(x + 1.0)); };
  double previous = 1e300;
  for (std::size_t k = 2; k <= 10; ++k) {
    auto coef = fit_chebyshev(target, k, grid);
    auto r = frequency_response({Tensor::from({k + 1}, coef)}, grid);
    double sup = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) sup = std::max(sup, std::abs(r.magnitude[j] - target(grid[j])));
    EXPECT_LT(sup, previous) << "K=" << k;
    previous = sup;
  }
  EXPECT_LT(previous, 1e-3);
}
