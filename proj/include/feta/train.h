#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "feta/errors.h"
#include "feta/graph.h"
#include "feta/model.h"

namespace feta {

struct TrainOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t plateau_patience = 5;  // epochs without improvement before halving lr
  std::size_t stop_patience = 15;    // epochs without improvement before stopping
  double lr_factor = 0.5;
  double time_budget_s = 0.0;  // 0 disables the wall-clock cap
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_metric = 0.0;
  double valid_metric = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  FetaParams best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_valid = 0.0;
  bool out_of_time = false;
};

struct EvalResult {
  double metric = 0.0;  // accuracy, or MAE for regression
  double loss = 0.0;
  // alphas[graph][layer] is the (K+1) x h coefficient matrix used on that graph.
  std::vector<std::vector<Tensor>> alphas;
};

// Thrown when the training loss becomes NaN or infinite; carries the
// parameters at the moment of failure.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, FetaParams snapshot)
      : NumericalError(what), snapshot_(std::move(snapshot)) {}
  const FetaParams& snapshot() const { return snapshot_; }

 private:
  FetaParams snapshot_;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the accumulated gradients, then clears them.
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

bool higher_is_better(TaskKind task);

// Adam with learning-rate halving on validation plateaus and early stopping;
// returns the parameters of the best validation epoch. Deterministic in
// (cfg, init, data, options) unless the time budget cuts a run short.
TrainResult train(const FetaConfig& cfg, const FetaParams& init, const DatasetSplit& data, const TrainOptions& opt,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

EvalResult evaluate(const FetaConfig& cfg, const FetaParams& params, const std::vector<Graph>& graphs);

}  // namespace feta
