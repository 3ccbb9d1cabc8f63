#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "feta/analyze.h"
#include "feta/config.h"
#include "feta/errors.h"
#include "feta/io.h"
#include "feta/pipeline.h"
#include "feta/synthetic.h"
#include "feta/theorems.h"

namespace fs = std::filesystem;
using namespace feta;

namespace {

constexpr int kOk = 0;
constexpr int kVerificationFailed = 1;
constexpr int kUsageError = 2;
constexpr int kNumericalAbort = 3;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config, "key = value config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "override the seed");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_flag("--dry-run", args.dry_run, "print the resolved configuration and exit");
}

RunConfig load_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

const std::vector<Graph>& pick_split(const DatasetSplit& data, const std::string& split, std::size_t* first_id) {
  if (split == "train") {
    *first_id = 0;
    return data.train;
  }
  if (split == "valid") {
    *first_id = data.train.size();
    return data.valid;
  }
  if (split == "test") {
    *first_id = data.train.size() + data.valid.size();
    return data.test;
  }
  throw ConfigError("unknown split '" + split + "' (expected train, valid or test)");
}

int cmd_generate_data(const CommonArgs& args, const std::string& preset_arg) {
  RunConfig cfg = load_or_default(args.config);
  if (!preset_arg.empty()) cfg.preset = preset_arg;
  if (args.seed) cfg.data_seed = *args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  if (cfg.preset.empty()) throw ConfigError("generate-data needs --preset or a config with preset");
  const SyntheticPreset preset = synthetic_preset(cfg.preset);
  if (args.dry_run) {
    std::cout << format_run_config(cfg);
    return kOk;
  }
  save_dataset(build_synthetic_dataset(preset, cfg.data_seed), cfg.data_seed, cfg.out);
  write_text_file(fs::path(cfg.out) / "config.txt", format_run_config(cfg));
  std::cout << "wrote " << preset.train + preset.valid + preset.test << " graphs to " << cfg.out << "\n";
  return kOk;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  cfg.train.seed = cfg.seed;
  FetaConfig shape_check = cfg.model;  // dimensions left at 0 come from the data
  shape_check.in_dim = std::max<std::size_t>(shape_check.in_dim, 1);
  shape_check.out_dim = std::max<std::size_t>(shape_check.out_dim, 1);
  shape_check.validate();
  if (args.dry_run) {
    std::cout << format_run_config(cfg);
    return kOk;
  }
  const DatasetSplit data = resolve_dataset(cfg);
  const fs::path out = cfg.out;
  ensure_dir(out);
  write_text_file(out / "config.txt", format_run_config(cfg));

  std::string metrics = metrics_csv({});
  try {
    const RunOutcome run = run_training(cfg, data, [&](const EpochRecord& e) {
      const std::string row = metrics_csv({e});
      metrics += row.substr(row.find('\n') + 1);
      write_text_file(out / "metrics.csv", metrics);
      std::printf("epoch %zu loss %.6f train %.4f valid %.4f lr %.3g\n", e.epoch, e.train_loss, e.train_metric,
                  e.valid_metric, e.lr);
      std::fflush(stdout);
    });
    write_text_file(out / "metrics.csv", metrics_csv(run.result.history));
    save_checkpoint({run.model, run.result.best}, out / "checkpoint.json");
    write_text_file(out / "final_metrics.csv", final_metrics_csv(run));
    std::printf("best epoch %zu valid %.4f test %.4f\n", run.result.best_epoch, run.valid.metric, run.test.metric);
  } catch (const TrainingAborted& e) {
    save_checkpoint({infer_dimensions(cfg.model, data), e.snapshot()}, out / "aborted_checkpoint.json");
    throw;
  }
  return kOk;
}

int cmd_eval(const CommonArgs& args, std::string checkpoint, const std::string& dataset, const std::string& split) {
  RunConfig cfg = load_or_default(args.config);
  if (args.seed) cfg.data_seed = *args.seed;
  if (!dataset.empty()) {
    cfg.dataset = dataset;
    cfg.preset.clear();
  }
  if (checkpoint.empty()) checkpoint = (fs::path(cfg.out) / "checkpoint.json").string();
  if (args.dry_run) {
    std::cout << "checkpoint = " << checkpoint << "\nsplit = " << split << "\n" << format_run_config(cfg);
    return kOk;
  }
  const Checkpoint ck = load_checkpoint(checkpoint);
  const DatasetSplit data = resolve_dataset(cfg);
  std::size_t first_id = 0;
  const EvalResult r = evaluate(ck.config, ck.params, pick_split(data, split, &first_id));
  const std::string csv =
      "split,metric,loss\n" + split + "," + format_double(r.metric) + "," + format_double(r.loss) + "\n";
  if (!args.out.empty()) {
    ensure_dir(args.out);
    write_text_file(fs::path(args.out) / "eval.csv", csv);
  }
  std::cout << csv;
  return kOk;
}

int cmd_analyze(const CommonArgs& args, const std::string& checkpoint, const std::string& dataset,
                const std::string& split) {
  RunConfig cfg = load_or_default(args.config);
  if (args.seed) cfg.data_seed = *args.seed;
  if (!dataset.empty()) {
    cfg.dataset = dataset;
    cfg.preset.clear();
  }
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (!args.config.empty() && (cfg.model.heads != ck.config.heads || cfg.model.order != ck.config.order))
    throw ConfigError("checkpoint has " + std::to_string(ck.config.heads) + " heads and order " +
                      std::to_string(ck.config.order) + ", config has " + std::to_string(cfg.model.heads) +
                      " heads and order " + std::to_string(cfg.model.order));
  const fs::path out = args.out.empty() ? fs::path(cfg.out) / "analysis" : fs::path(args.out);
  if (args.dry_run) {
    std::cout << "checkpoint = " << checkpoint << "\nsplit = " << split << "\nout = " << out.string() << "\n"
              << format_run_config(cfg);
    return kOk;
  }
  const DatasetSplit data = resolve_dataset(cfg);
  std::size_t first_id = 0;
  const std::vector<Graph>& graphs = pick_split(data, split, &first_id);
  const FilterAnalysis a = analyze_filters(ck.config, ck.params, graphs, first_id);
  write_analysis(a, out);
  RunConfig used = cfg;
  used.model = ck.config;
  write_text_file(out / "config.txt", format_run_config(used));
  std::cout << "analyzed " << graphs.size() << " graphs into " << out.string() << "\n";
  return kOk;
}

int cmd_verify(const CommonArgs& args, std::optional<std::size_t> instances, const std::string& domain,
               bool break_bound) {
  BatteryOptions opt;
  if (!args.config.empty()) opt = parse_battery_options(read_text_file(args.config), args.config);
  if (instances) opt.instances = *instances;
  if (args.seed) opt.seed = *args.seed;
  if (!domain.empty()) opt.domain = parse_bound_domain(domain);
  opt.break_bound = break_bound;
  if (args.dry_run) {
    std::cout << format_battery_options(opt);
    return kOk;
  }
  const BatteryReport rep = run_battery(opt);
  const fs::path out = args.out.empty() ? fs::path("feta-theorems") : fs::path(args.out);
  ensure_dir(out);
  write_text_file(out / "report.json", battery_report_json(rep));
  write_text_file(out / "config.txt", format_battery_options(opt));

  std::printf("sandwich: %zu/%zu instances within bounds (%s domain)\n", rep.sandwich_passed(), rep.sandwich.size(),
              to_string(opt.domain).c_str());
  std::printf("zero-error characterization: %s\n", rep.zero_error_ok() ? "ok" : "VIOLATED");
  std::printf("optimal filter: %s\n", rep.optimality_ok() ? "ok" : "VIOLATED");
  for (const ProbeRow& p : rep.probe)
    std::printf("attention probe %s %s: found %.4g, stochastic floor %.4g, lower bound %.4g\n", p.graph.c_str(),
                p.response.c_str(), p.found, p.floor, p.lower);
  std::printf("lemma gradients: %s\n", rep.lemma_ok() ? "ok" : "VIOLATED");
  std::printf("report: %s\n", (out / "report.json").string().c_str());
  return rep.bounds_ok() ? kOk : kVerificationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FeTA graph-spectral attention toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, analyze_args, verify_args;
  std::string preset, eval_ckpt, eval_data, eval_split = "test", an_ckpt, an_data, an_split = "test", domain;
  std::optional<std::size_t> instances;
  bool break_bound = false;

  auto* gen = app.add_subcommand("generate-data", "write a synthetic dataset in feta-ds/1 format");
  add_common(gen, gen_args, false);
  gen->add_option("--preset", preset, "Synthetic_1, Synthetic_2 or Synthetic_3");

  auto* tr = app.add_subcommand("train", "train a model; writes checkpoint and metrics");
  add_common(tr, train_args, true);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on one split");
  add_common(ev, eval_args, false);
  ev->add_option("--checkpoint", eval_ckpt, "feta-ckpt/1 file (default <out>/checkpoint.json)");
  ev->add_option("--dataset", eval_data, "feta-ds/1 directory");
  ev->add_option("--split", eval_split, "train, valid or test");

  auto* an = app.add_subcommand("analyze-filters", "export filter responses as CSV and SVG");
  add_common(an, analyze_args, false);
  an->add_option("--checkpoint", an_ckpt, "feta-ckpt/1 file")->required();
  an->add_option("--dataset", an_data, "feta-ds/1 directory");
  an->add_option("--split", an_split, "train, valid or test");

  auto* ver = app.add_subcommand("verify-theorems", "run the spectral bound battery");
  add_common(ver, verify_args, false);
  ver->add_option("--instances", instances, "random (graph, F) sandwich instances");
  ver->add_option("--domain", domain, "stochastic or affine");
  ver->add_flag("--inject-broken-bound", break_bound, "test hook: check against a deliberately wrong bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (gen->parsed()) return cmd_generate_data(gen_args, preset);
    if (tr->parsed()) return cmd_train(train_args);
    if (ev->parsed()) return cmd_eval(eval_args, eval_ckpt, eval_data, eval_split);
    if (an->parsed()) return cmd_analyze(analyze_args, an_ckpt, an_data, an_split);
    if (ver->parsed()) return cmd_verify(verify_args, instances, domain, break_bound);
  } catch (const NumericalError& e) {
    std::cerr << "feta: numerical abort: " << e.what() << "\n";
    return kNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "feta: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
