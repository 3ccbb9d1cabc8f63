#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "feta/config.h"
#include "feta/graph.h"
#include "feta/train.h"

namespace feta {

// The run's dataset: loaded from cfg.dataset, or built from cfg.preset and
// cfg.data_seed. ConfigError when neither is set.
DatasetSplit resolve_dataset(const RunConfig& cfg);

// Fills in_dim and out_dim when they are 0: feature width, and classes (one
// more than the largest training label) or regression target width.
FetaConfig infer_dimensions(FetaConfig model, const DatasetSplit& data);

struct RunOutcome {
  FetaConfig model;  // with inferred dimensions
  TrainResult result;
  EvalResult valid;
  EvalResult test;
};

RunOutcome run_training(const RunConfig& cfg, const DatasetSplit& data,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

// epoch,train_loss,train_metric,valid_metric,lr
std::string metrics_csv(const std::vector<EpochRecord>& history);
// split,metric,loss with rows valid and test
std::string final_metrics_csv(const RunOutcome& run);

}  // namespace feta
