#include "feta/pipeline.h"

#include <algorithm>

#include "feta/errors.h"
#include "feta/io.h"
#include "feta/synthetic.h"

namespace feta {

DatasetSplit resolve_dataset(const RunConfig& cfg) {
  if (!cfg.dataset.empty() && !cfg.preset.empty())
    throw ConfigError("set either dataset or preset, not both");
  if (!cfg.dataset.empty()) return load_dataset(cfg.dataset);
  if (!cfg.preset.empty()) return build_synthetic_dataset(cfg.preset, cfg.data_seed);
  throw ConfigError("no data: set dataset (a feta-ds/1 directory) or preset");
}

FetaConfig infer_dimensions(FetaConfig model, const DatasetSplit& data) {
  if (data.train.empty()) throw ConfigError("the training split is empty");
  const Graph& first = data.train.front();
  if (model.in_dim == 0) {
    if (!first.x.defined()) throw ConfigError("graphs carry no node features");
    model.in_dim = first.x.cols();
  }
  if (model.out_dim == 0) {
    if (model.task == TaskKind::kGraphRegress) {
      model.out_dim = first.targets.size();
    } else {
      int top = -1;
      for (const Graph& g : data.train)
        for (int label : g.labels) top = std::max(top, label);
      if (top < 0) throw ConfigError("no training labels to infer out_dim from");
      model.out_dim = static_cast<std::size_t>(top) + 1;
    }
  }
  return model;
}

RunOutcome run_training(const RunConfig& cfg, const DatasetSplit& data,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  RunOutcome run;
  run.model = infer_dimensions(cfg.model, data);
  run.model.validate();
  TrainOptions opt = cfg.train;
  opt.seed = cfg.seed;
  run.result = train(run.model, init_params(run.model, cfg.seed), data, opt, on_epoch);
  run.valid = evaluate(run.model, run.result.best, data.valid);
  run.test = evaluate(run.model, run.result.best, data.test);
  return run;
}

std::string metrics_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,train_metric,valid_metric,lr\n";
  for (const EpochRecord& e : history)
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.train_metric) + "," +
           format_double(e.valid_metric) + "," + format_double(e.lr) + "\n";
  return out;
}

std::string final_metrics_csv(const RunOutcome& run) {
  std::string out = "split,metric,loss\n";
  out += "valid," + format_double(run.valid.metric) + "," + format_double(run.valid.loss) + "\n";
  out += "test," + format_double(run.test.metric) + "," + format_double(run.test.loss) + "\n";
  return out;
}

}  // namespace feta
