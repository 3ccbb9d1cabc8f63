// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is 0 only when all criteria pass.

#include <CLI11.hpp>
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "feta/analyze.h"
#include "feta/cheb_filter.h"
#include "feta/config.h"
#include "feta/gradcheck.h"
#include "feta/io.h"
#include "feta/pipeline.h"
#include "feta/synthetic.h"
#include "feta/theorems.h"

namespace fs = std::filesystem;
using namespace feta;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string percents(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + fmt("%.1f", 100.0 * x);
  return s;
}

// Test accuracies of one synthetic setting over the given seeds.
struct SyntheticRuns {
  std::string preset;
  std::size_t hidden = 16;
  std::size_t order = 4;
  double budget_s = 900.0;
  std::vector<std::uint64_t> seeds;

  std::vector<double> accuracies(FilterKind filter) const {
    std::vector<double> out;
    for (std::uint64_t seed : seeds) {
      RunConfig cfg;
      cfg.preset = preset;
      cfg.data_seed = seed;
      cfg.seed = seed;
      cfg.model.layers = 1;
      cfg.model.heads = 1;
      cfg.model.hidden = hidden;
      cfg.model.order = order;
      cfg.model.filter = filter;
      cfg.train.time_budget_s = budget_s;
      const auto t0 = std::chrono::steady_clock::now();
      const RunOutcome run = run_training(cfg, resolve_dataset(cfg));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "  %s %s K=%zu d=%zu seed %llu: test %.4f, %zu epochs, %.0fs%s\n", preset.c_str(),
                   to_string(filter).c_str(), order, hidden, static_cast<unsigned long long>(seed), run.test.metric,
                   run.result.history.size(), secs, run.result.out_of_time ? " (budget reached)" : "");
      out.push_back(run.test.metric);
    }
    return out;
  }
};

// Shared between criteria 1 and 3.
std::vector<double> g_base_k4;

Outcome synthetic1_gap(const SyntheticRuns& runs) {
  g_base_k4 = runs.accuracies(FilterKind::kChebyshev);
  const std::vector<double> stat = runs.accuracies(FilterKind::kStaticChebyshev);
  const double b = 100.0 * mean(g_base_k4), s = 100.0 * mean(stat), gap = b - s;
  return {b >= 85.0 && s <= 78.0 && gap >= 10.0,
          "base " + fmt("%.2f%%", b) + " (" + percents(g_base_k4) + "), static " + fmt("%.2f%%", s) + " (" +
              percents(stat) + "), gap " + fmt("%.2f", gap) + " pts; need base >= 85, static <= 78, gap >= 10"};
}

Outcome synthetic2_gap(const SyntheticRuns& runs) {
  const std::vector<double> base = runs.accuracies(FilterKind::kChebyshev);
  const std::vector<double> stat = runs.accuracies(FilterKind::kStaticChebyshev);
  const double gap = 100.0 * (mean(base) - mean(stat));
  return {gap >= 7.0, "base " + fmt("%.2f%%", 100.0 * mean(base)) + " (" + percents(base) + "), static " +
                          fmt("%.2f%%", 100.0 * mean(stat)) + " (" + percents(stat) + "), gap " + fmt("%.2f", gap) +
                          " pts; need >= 7"};
}

Outcome order_trend(SyntheticRuns runs) {
  runs.order = 2;
  const std::vector<double> k2 = runs.accuracies(FilterKind::kChebyshev);
  if (g_base_k4.empty()) {
    runs.order = 4;
    g_base_k4 = runs.accuracies(FilterKind::kChebyshev);
  }
  const double a2 = 100.0 * mean(k2), a4 = 100.0 * mean(g_base_k4);
  return {a4 >= a2 - 1.0, "K=4 " + fmt("%.2f%%", a4) + ", K=2 " + fmt("%.2f%%", a2) + "; need K=4 >= K=2 - 1"};
}

// Connected random graph: a spanning path plus random chords.
Graph random_graph(std::size_t n, std::mt19937_64& rng) {
  Graph g = path_graph(n);
  std::bernoulli_distribution coin(0.35);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j)
      if (coin(rng)) g.edges.push_back({i, j, 1.0});
  return g;
}

Outcome spectral_equivalence() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> size(2, 12), order(0, 8), width(1, 4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = size(rng), k1 = order(rng) + 1, c = width(rng);
    const Graph g = random_graph(n, rng);
    // Normalized Laplacian and its rescaling, built directly with Eigen.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const Edge& e : g.edges) a(e.i, e.j) = a(e.j, e.i) = e.weight;
    const Eigen::VectorXd dinv = a.rowwise().sum().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n) - dinv.asDiagonal() * a * dinv.asDiagonal();
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l).eigenvalues().maxCoeff();
    const Eigen::MatrixXd lt = 2.0 * l / lmax - Eigen::MatrixXd::Identity(n, n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lt);

    std::vector<double> alpha(k1);
    for (double& v : alpha) v = nd(rng);
    Eigen::MatrixXd x(n, c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) x(i, j) = nd(rng);

    Eigen::VectorXd response(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = std::clamp(es.eigenvalues()(i), -1.0, 1.0);
      double s = 0.0;
      for (std::size_t k = 0; k < k1; ++k) s += alpha[k] * std::cos(static_cast<double>(k) * std::acos(mu));
      response(i) = s;
    }
    const Eigen::MatrixXd expected = es.eigenvectors() * response.asDiagonal() * es.eigenvectors().transpose() * x;

    Tensor lt_t = Tensor::zeros({n, n}), x_t = Tensor::zeros({n, c});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) lt_t(i, j) = lt(i, j);
      for (std::size_t j = 0; j < c; ++j) x_t(i, j) = x(i, j);
    }
    const Tensor got = apply_filter({Tensor::from({1, k1}, alpha)}, lt_t, x_t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) worst = std::max(worst, std::abs(got(i, j) - expected(i, j)));
  }
  return {worst < 1e-8, "max |difference| " + fmt("%.3g", worst) + " over 100 triples; need < 1e-8"};
}

Outcome gradient_integrity() {
  std::mt19937_64 rng(77);
  FetaConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.order = 4;
  cfg.in_dim = 2;
  cfg.out_dim = 2;
  double worst = 0.0;
  std::size_t entries = 0, rescored = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 6 + static_cast<std::size_t>(trial) % 3;
    Graph g = random_graph(n, rng);
    std::uniform_int_distribution<int> cls(0, 1);
    g.x = Tensor::zeros({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
      g.labels.push_back(cls(rng));
      g.mask.push_back(i % 2 == 0);
      if (!g.mask.back()) g.x(i, static_cast<std::size_t>(g.labels.back())) = 1.0;
    }
    FetaParams p = init_params(cfg, static_cast<std::uint64_t>(trial));
    const GraphContext ctx = prepare_graph(cfg, g);
    auto f = [&] {
      const ModelOutput out = model_forward(cfg, p, ctx);
      return model_loss(cfg, out.logits, g, out.alphas);
    };
    const KinkAwareCheck c = finite_diff_check_kink_aware(f, p.list(), 1e-3);
    worst = std::max(worst, c.worst);
    entries = c.entries;
    rescored += c.rescored;
  }
  return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " on 10 graphs of 6-8 nodes (" +
                            std::to_string(entries) + " parameters each, " + std::to_string(rescored) +
                            " entries rescored at eps 1e-4); need < 1e-4"};
}

Outcome sandwich(const BatteryReport& rep) {
  std::size_t lower_fail = 0, upper_fail = 0, infeasible = 0;
  double excess = 0.0;
  for (const SandwichRow& r : rep.sandwich) {
    lower_fail += !r.lower_ok;
    upper_fail += !r.upper_ok;
    infeasible += !r.closed_form_feasible;
    excess = std::max(excess, r.e_star - r.upper);
  }
  return {rep.sandwich_passed() == rep.sandwich.size(),
          std::to_string(rep.sandwich_passed()) + "/" + std::to_string(rep.sandwich.size()) +
              " within bounds; lower violated " + std::to_string(lower_fail) + ", upper violated " +
              std::to_string(upper_fail) + " (worst excess " + fmt("%.3g", excess) + "); closed form infeasible on " +
              std::to_string(infeasible) + "; need 100/100"};
}

Outcome zero_error(const BatteryReport& rep) {
  double all_pass = 0.0, margin = std::numeric_limits<double>::infinity();
  std::size_t inadmissible = 0;
  for (const ZeroErrorRow& r : rep.zero_error) {
    if (r.kind == "all-pass") {
      all_pass = std::max(all_pass, r.e_star);
    } else {
      ++inadmissible;
      margin = std::min(margin, r.e_star - r.threshold);
    }
  }
  return {rep.zero_error_ok(), "F=1 max E* " + fmt("%.3g", all_pass) + " (need < 1e-9); " +
                                   std::to_string(inadmissible) + " inadmissible F, smallest E* - threshold " +
                                   fmt("%.3g", margin) + " (need >= 0)"};
}

Outcome optimality(const BatteryReport& rep) {
  double diff = 0.0, gap = std::numeric_limits<double>::infinity();
  for (const OptimalityRow& r : rep.optimality) {
    diff = std::max(diff, std::abs(r.closed_value - r.direct_value));
    gap = std::min(gap, r.min_gap);
  }
  return {rep.optimality_ok(), std::to_string(rep.optimality.size()) + " instances: max |closed - direct| " +
                                   fmt("%.3g", diff) + " (need <= 1e-9), smallest perturbation gain " +
                                   fmt("%.3g", gap) + " (need >= 0)"};
}

Outcome probe(const BatteryReport& rep) {
  std::string detail;
  for (const ProbeRow& r : rep.probe)
    detail += r.graph + " " + r.response + " " + fmt("%.4g", r.found) + " (floor " + fmt("%.4g", r.floor) +
              ", lower " + fmt("%.4g", r.lower) + "); ";
  const bool ok = rep.probe_low_pass_reached() && rep.probe_bounds_ok();
  return {ok, detail + "need a low-pass error < 0.05 and high-pass >= lower bound"};
}

Outcome chebyshev_convergence() {
  auto target = [](double x) { return std::exp(-(x + 1.0)); };
  const std::vector<double> fit_grid = response_grid(256);
  const std::vector<double> check_grid = response_grid(4001);
  auto sup_error = [&](std::size_t order) {
    const std::vector<double> c = fit_chebyshev(target, order, fit_grid);
    const std::vector<double> r =
        frequency_response({Tensor::from({1, c.size()}, c)}, check_grid).magnitude;
    double worst = 0.0;
    for (std::size_t j = 0; j < check_grid.size(); ++j) worst = std::max(worst, std::abs(r[j] - target(check_grid[j])));
    return worst;
  };
  const double e2 = sup_error(2), e10 = sup_error(10);
  return {e10 < e2 && e10 < 1e-3,
          "sup error K=2 " + fmt("%.3g", e2) + ", K=10 " + fmt("%.3g", e10) + "; need decrease and K=10 < 1e-3"};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "feta_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> problems;

  save_dataset(build_synthetic_dataset("Synthetic_1", 7), 7, root / "ds_a");
  save_dataset(build_synthetic_dataset("Synthetic_1", 7), 7, root / "ds_b");
  if (read_text_file(root / "ds_a" / "dataset.jsonl") != read_text_file(root / "ds_b" / "dataset.jsonl") ||
      read_text_file(root / "ds_a" / "manifest.json") != read_text_file(root / "ds_b" / "manifest.json"))
    problems.push_back("dataset bytes differ");

  RunConfig cfg;
  cfg.dataset = (root / "ds_a").string();
  cfg.seed = 3;
  cfg.model.layers = 1;
  cfg.model.heads = 2;
  cfg.model.hidden = 16;
  cfg.model.order = 4;
  cfg.train.max_epochs = 3;
  const DatasetSplit data = resolve_dataset(cfg);
  const RunOutcome a = run_training(cfg, data), b = run_training(cfg, data);
  if (metrics_csv(a.result.history) != metrics_csv(b.result.history)) problems.push_back("metric histories differ");

  const std::vector<Graph> graphs(data.test.begin(), data.test.begin() + 20);
  const FilterAnalysis fa = analyze_filters(a.model, a.result.best, graphs);
  const FilterAnalysis fb = analyze_filters(b.model, b.result.best, graphs);
  if (response_csv(fa) != response_csv(fb) || aggregate_csv(fa) != aggregate_csv(fb) ||
      eigenvector_csv(fa) != eigenvector_csv(fb))
    problems.push_back("analyzer CSVs differ");

  save_checkpoint({a.model, a.result.best}, root / "ckpt.json");
  const Checkpoint back = load_checkpoint(root / "ckpt.json");
  const EvalResult reloaded = evaluate(back.config, back.params, data.test);
  if (reloaded.metric != a.test.metric || reloaded.loss != a.test.loss)
    problems.push_back("reloaded checkpoint changes test metrics");
  fs::remove_all(root);

  std::string detail = "dataset bytes, metric history, analyzer CSVs, checkpoint reload (test acc " +
                       fmt("%.4f", a.test.metric) + ", loss " + fmt("%.17g", a.test.loss) + ")";
  for (const std::string& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FeTA acceptance criteria"};
  std::vector<int> only;
  double budget = 900.0;
  app.add_option("--only", only, "criterion numbers to run (default all)")->delimiter(',');
  app.add_option("--budget", budget, "wall-clock seconds per training run");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  const SyntheticRuns s1{"Synthetic_1", 16, 4, budget, {1, 2, 3}};
  const SyntheticRuns s2{"Synthetic_2", 64, 4, budget, {1, 2, 3}};

  BatteryReport battery;
  if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) battery = run_battery(BatteryOptions{});

  const std::vector<std::pair<int, std::pair<std::string, std::function<Outcome()>>>> criteria = {
      {1, {"Synthetic_1 dynamic-vs-static gap", [&] { return synthetic1_gap(s1); }}},
      {2, {"Synthetic_2 dynamic-vs-static gap", [&] { return synthetic2_gap(s2); }}},
      {3, {"Filter-order trend on Synthetic_1", [&] { return order_trend(s1); }}},
      {4, {"Spectral-oracle equivalence", spectral_equivalence}},
      {5, {"Gradient integrity", gradient_integrity}},
      {6, {"Error sandwich bounds", [&] { return sandwich(battery); }}},
      {7, {"Zero-error characterization", [&] { return zero_error(battery); }}},
      {8, {"Optimal filter for a fixed support", [&] { return optimality(battery); }}},
      {9, {"Attention-map expressiveness probe", [&] { return probe(battery); }}},
      {10, {"Chebyshev convergence", chebyshev_convergence}},
      {11, {"Determinism and round-trip", determinism}},
  };

  int failed = 0;
  for (const auto& [number, entry] : criteria) {
    if (!wanted(number)) continue;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("%s %2d %s: %s\n", o.passed ? "PASS" : "FAIL", number, entry.first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
