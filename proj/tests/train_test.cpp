#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "feta/ops.h"
#include "feta/synthetic.h"
#include "feta/train.h"

using namespace feta;

namespace {

FetaConfig synthetic_config(FilterKind filter) {
  FetaConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 16;
  cfg.heads = 1;
  cfg.order = 4;
  cfg.filter = filter;
  cfg.in_dim = 2;
  cfg.out_dim = 2;
  return cfg;
}

DatasetSplit small_split(std::size_t train, std::size_t valid, std::uint64_t seed) {
  SyntheticPreset p = synthetic_preset("Synthetic_1");
  p.train = train;
  p.valid = valid;
  p.test = valid;
  return build_synthetic_dataset(p, seed);
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor w = Tensor::matrix(1, 3, {1.0, -2.0, 0.5}).set_requires_grad(true);
  Adam adam({w}, 0.1);
  {
    Tape tape;
    TapeScope scope(tape);
    backward(sum(mul(w, Tensor::matrix(1, 3, {3.0, -0.01, 0.0}))));
  }
  adam.step();
  // Bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(w[0], 0.9, 1e-9);
  EXPECT_NEAR(w[1], -1.9, 1e-6);
  EXPECT_EQ(w[2], 0.5);
  EXPECT_FALSE(w.has_grad() && w.grad()[0] != 0.0);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor w = Tensor::matrix(1, 2, {4.0, -3.0}).set_requires_grad(true);
  Tensor target = Tensor::matrix(1, 2, {1.0, 2.0});
  Adam adam({w}, 0.05);
  for (int it = 0; it < 2000; ++it) {
    Tape tape;
    TapeScope scope(tape);
    Tensor diff = sub(w, target);
    backward(sum(mul(diff, diff)));
    adam.step();
  }
  EXPECT_NEAR(w[0], 1.0, 1e-3);
  EXPECT_NEAR(w[1], 2.0, 1e-3);
}

TEST(Train, OverfitsOneTenNodeGraph) {
  SyntheticPreset p = synthetic_preset("Synthetic_1");
  p.sbm.nodes_per_block = 5;
  p.train = 1;
  p.valid = 0;
  p.test = 0;
  DatasetSplit data = build_synthetic_dataset(p, 3);
  ASSERT_EQ(data.train[0].n, 10u);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  TrainOptions opt;
  opt.max_epochs = 200;
  opt.stop_patience = opt.plateau_patience = opt.max_epochs;
  opt.seed = 5;
  TrainResult r = train(cfg, init_params(cfg, 5), data, opt);
  double best_loss = std::numeric_limits<double>::infinity();
  for (const auto& e : r.history) best_loss = std::min(best_loss, e.train_loss);
  EXPECT_LT(best_loss, 1e-2);
  EXPECT_EQ(r.history.back().train_metric, 1.0);
}

TEST(Train, SameSeedSameHistory) {
  DatasetSplit data = small_split(40, 10, 4);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  TrainOptions opt;
  opt.max_epochs = 4;
  opt.batch_size = 8;
  opt.seed = 9;
  TrainResult a = train(cfg, init_params(cfg, 1), data, opt);
  TrainResult b = train(cfg, init_params(cfg, 1), data, opt);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
    EXPECT_EQ(a.history[e].valid_metric, b.history[e].valid_metric);
  }
  for (const auto& [name, t] : a.best.tensors)
    for (std::size_t k = 0; k < t.numel(); ++k) ASSERT_EQ(t[k], b.best.at(name)[k]) << name;

  opt.seed = 10;
  TrainResult c = train(cfg, init_params(cfg, 1), data, opt);
  EXPECT_NE(a.history.back().train_loss, c.history.back().train_loss);
}

TEST(Train, ReturnsBestValidationEpoch) {
  DatasetSplit data = small_split(40, 10, 6);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  TrainOptions opt;
  opt.max_epochs = 6;
  opt.batch_size = 8;
  opt.lr = 1e-2;
  TrainResult r = train(cfg, init_params(cfg, 2), data, opt);
  double best = -1.0;
  for (const auto& e : r.history) best = std::max(best, e.valid_metric);
  EXPECT_EQ(r.best_valid, best);
  EXPECT_EQ(r.history[r.best_epoch].valid_metric, best);
  EXPECT_EQ(evaluate(cfg, r.best, data.valid).metric, best);
}

TEST(Train, PlateauHalvesThenStops) {
  DatasetSplit data = small_split(8, 4, 7);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  TrainOptions opt;
  opt.max_epochs = 100;
  opt.lr = 1e-12;  // effectively frozen: validation never improves after epoch 0
  opt.plateau_patience = 2;
  opt.stop_patience = 7;
  TrainResult r = train(cfg, init_params(cfg, 3), data, opt);
  ASSERT_EQ(r.history.size(), 8u);
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_EQ(r.history[2].lr, 1e-12);
  EXPECT_EQ(r.history[3].lr, 5e-13);
  EXPECT_EQ(r.history[5].lr, 2.5e-13);
}

TEST(Train, NonFiniteLossAbortsWithSnapshot) {
  DatasetSplit data = small_split(4, 2, 8);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  FetaParams p = init_params(cfg, 4);
  p.at("out.b")[0] = std::numeric_limits<double>::quiet_NaN();
  TrainOptions opt;
  opt.max_epochs = 1;
  const bool saved = finite_checks_enabled();
  set_finite_checks(false);  // let the NaN reach the loss
  try {
    train(cfg, p, data, opt);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_TRUE(std::isnan(e.snapshot().at("out.b")[0]));
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos);
  }
  set_finite_checks(saved);
}

TEST(Evaluate, RandomInitIsNearChance) {
  DatasetSplit data = small_split(0, 100, 9);
  FetaConfig cfg = synthetic_config(FilterKind::kChebyshev);
  EvalResult r = evaluate(cfg, init_params(cfg, 6), data.valid);
  EXPECT_NEAR(r.metric, 0.5, 0.1);
  ASSERT_EQ(r.alphas.size(), 100u);
  EXPECT_EQ(r.alphas[0].size(), 1u);
  EXPECT_EQ(r.alphas[0][0].shape(), (Shape{5, 1}));
}
