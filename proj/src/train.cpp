#include "feta/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "feta/ops.h"

namespace feta {

namespace {

std::size_t argmax_row(const Tensor& t, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < t.cols(); ++j)
    if (t(i, j) > t(i, best)) best = j;
  return best;
}

// Sum of per-item scores and the number of items, so batches can be merged.
struct Tally {
  double score = 0.0;
  std::size_t count = 0;
};

Tally score_graph(const FetaConfig& cfg, const Tensor& logits, const Graph& g) {
  Tally t;
  if (cfg.task == TaskKind::kGraphRegress) {
    for (std::size_t k = 0; k < logits.numel(); ++k) t.score += std::abs(logits[k] - g.targets[k]);
    t.count = logits.numel();
  } else if (cfg.task == TaskKind::kGraphClass) {
    t.score = static_cast<int>(argmax_row(logits, 0)) == g.labels.at(0) ? 1.0 : 0.0;
    t.count = 1;
  } else {
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      if (!g.mask.empty() && !g.mask[i]) continue;
      t.score += static_cast<int>(argmax_row(logits, i)) == g.labels[i] ? 1.0 : 0.0;
      ++t.count;
    }
  }
  return t;
}

double ratio(const Tally& t) { return t.count ? t.score / static_cast<double>(t.count) : 0.0; }

std::vector<GraphContext> prepare_all(const FetaConfig& cfg, const std::vector<Graph>& graphs) {
  std::vector<GraphContext> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(prepare_graph(cfg, g));
  return out;
}

}  // namespace

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const auto& g = p.impl()->grad;
    auto w = p.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr_ * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + eps_);
    }
    p.zero_grad();
  }
}

bool higher_is_better(TaskKind task) { return task != TaskKind::kGraphRegress; }

TrainResult train(const FetaConfig& cfg, const FetaParams& init, const DatasetSplit& data, const TrainOptions& opt,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw DomainError("train: empty training split");
  if (opt.batch_size == 0) throw ConfigError("train: batch size must be positive");
  const auto start = std::chrono::steady_clock::now();

  FetaParams params = init.clone();
  for (auto& [name, t] : params.tensors) t.set_requires_grad(true);
  Adam adam(params.list(), opt.lr, opt.beta1, opt.beta2, opt.adam_eps);

  std::vector<GraphContext> train_ctx = prepare_all(cfg, data.train);
  std::mt19937_64 rng(opt.seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  const bool higher = higher_is_better(cfg.task);
  TrainResult result;
  result.best = params.clone();
  result.best_valid = higher ? -1.0 : std::numeric_limits<double>::infinity();
  std::size_t since_best = 0, since_decay = 0;

  for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    if (cfg.pe_mode == PeMode::kLapStatic) {
      for (auto& ctx : train_ctx)
        for (auto& s : ctx.pe_signs) s = coin(rng) ? 1.0 : -1.0;
    }
    double loss_sum = 0.0;
    Tally train_tally;
    for (std::size_t b = 0; b < order.size(); b += opt.batch_size) {
      const std::size_t end = std::min(order.size(), b + opt.batch_size);
      const double inv = 1.0 / static_cast<double>(end - b);
      for (std::size_t k = b; k < end; ++k) {
        const std::size_t gi = order[k];
        Tape tape;
        TapeScope scope(tape);
        ModelOutput out = model_forward(cfg, params, train_ctx[gi]);
        Tensor loss = model_loss(cfg, out.logits, data.train[gi], out.alphas);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw TrainingAborted("non-finite training loss " + std::to_string(value) + " at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(b / opt.batch_size) +
                                    ", graph " + std::to_string(gi),
                                params.clone());
        }
        loss_sum += value;
        Tally t = score_graph(cfg, out.logits, data.train[gi]);
        train_tally.score += t.score;
        train_tally.count += t.count;
        backward(scale(loss, inv));
      }
      adam.step();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_metric = ratio(train_tally);
    rec.lr = adam.lr();
    rec.valid_metric = data.valid.empty() ? rec.train_metric : evaluate(cfg, params, data.valid).metric;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const bool improved = higher ? rec.valid_metric > result.best_valid : rec.valid_metric < result.best_valid;
    if (improved) {
      result.best_valid = rec.valid_metric;
      result.best_epoch = epoch;
      result.best = params.clone();
      since_best = 0;
      since_decay = 0;
    } else {
      ++since_best;
      ++since_decay;
      if (since_best >= opt.stop_patience) break;
      if (since_decay >= opt.plateau_patience) {
        adam.set_lr(adam.lr() * opt.lr_factor);
        since_decay = 0;
      }
    }
    if (opt.time_budget_s > 0.0) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > opt.time_budget_s) {
        result.out_of_time = true;
        break;
      }
    }
  }
  return result;
}

EvalResult evaluate(const FetaConfig& cfg, const FetaParams& params, const std::vector<Graph>& graphs) {
  EvalResult r;
  Tally tally;
  double loss_sum = 0.0;
  for (const auto& g : graphs) {
    GraphContext ctx = prepare_graph(cfg, g);
    ModelOutput out = model_forward(cfg, params, ctx);
    loss_sum += model_loss(cfg, out.logits, g, out.alphas).item();
    Tally t = score_graph(cfg, out.logits, g);
    tally.score += t.score;
    tally.count += t.count;
    r.alphas.push_back(out.alphas);
  }
  r.metric = ratio(tally);
  r.loss = graphs.empty() ? 0.0 : loss_sum / static_cast<double>(graphs.size());
  return r;
}

}  // namespace feta
