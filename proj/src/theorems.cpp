#include "feta/theorems.h"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <random>

#include "feta/errors.h"
#include "feta/ops.h"
#include "feta/synthetic.h"
#include "feta/verifier.h"

namespace feta {

namespace {

struct NamedGraph {
  std::string name;
  Graph g;
};

// P4, K4 and an 8-node two-block SBM drawn from rng.
NamedGraph sandwich_family(std::size_t k, std::mt19937_64& rng) {
  switch (k % 3) {
    case 0:
      return {"P4", path_graph(4)};
    case 1:
      return {"K4", complete_graph(4)};
    default:
      return {"SBM8", generate_sbm({2, 4, 0.9, 0.05}, rng)};
  }
}

NamedGraph zero_error_family(std::size_t k, std::mt19937_64& rng) {
  if (k % 4 == 3) return {"P3+P3", disjoint_union(path_graph(3), path_graph(3))};
  return sandwich_family(k, rng);
}

std::vector<double> uniform(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> f(n);
  for (double& v : f) v = u(rng);
  return f;
}

ErrorReport domain_report(const FilterTarget& t, const BatteryOptions& opt, std::uint64_t pg_seed) {
  ProjectedGradientOptions pg;
  pg.restarts = opt.pg_restarts;
  pg.seed = pg_seed;
  ErrorReport r = min_error_over_stochastic(t, pg);
  if (opt.domain == BoundDomain::kAffine) {
    r.e_star = r.e_star_affine;
    r.converged = true;
  }
  return r;
}

double min_abs_shift(const std::vector<double>& f) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : f) m = std::min(m, std::abs(v - 1.0));
  return m;
}

void run_sandwich(const BatteryOptions& opt, std::mt19937_64& rng, BatteryReport& rep) {
  for (std::size_t k = 0; k < opt.instances; ++k) {
    NamedGraph ng = sandwich_family(k, rng);
    FilterTarget t = make_target(ng.g, uniform(ng.g.n, -2.0, 3.0, rng));
    const ErrorReport r = domain_report(t, opt, opt.seed + k);
    SandwichRow row;
    row.graph = ng.name;
    row.f = t.f;
    row.e_star = r.e_star;
    row.e_star_affine = r.e_star_affine;
    row.lower = r.lower;
    row.upper = opt.break_bound ? 0.5 * r.lower : r.upper;
    row.attention_upper = r.attention_upper;
    row.closed_form_feasible = r.closed_form_feasible;
    row.converged = r.converged;
    row.lower_ok = row.e_star >= row.lower - opt.tolerance;
    row.upper_ok = row.e_star <= row.upper + opt.tolerance;
    row.attention_upper_ok = row.e_star <= row.attention_upper + opt.tolerance;
    rep.sandwich.push_back(std::move(row));
  }
}

void run_zero_error(const BatteryOptions& opt, std::mt19937_64& rng, BatteryReport& rep) {
  for (std::size_t k = 0; k < 4; ++k) {
    NamedGraph ng = zero_error_family(k, rng);
    FilterTarget t = make_target(ng.g, std::vector<double>(ng.g.n, 1.0));
    ZeroErrorRow row{ng.name, "all-pass", t.f, domain_report(t, opt, opt.seed).e_star, 1e-9, false};
    row.passed = row.e_star < row.threshold;
    rep.zero_error.push_back(std::move(row));
  }
  std::uniform_real_distribution<double> margin(0.1, 1.0), excess(1.1, 2.0), coin(0.0, 1.0);
  for (std::size_t k = 0; k < opt.zero_error_instances; ++k) {
    NamedGraph ng = zero_error_family(k, rng);
    const std::size_t n = ng.g.n;
    std::vector<double> f = uniform(n, -1.0, 1.0, rng);
    const double sign = coin(rng) < 0.5 ? -1.0 : 1.0;
    if (k % 2 == 0) {
      f[0] = 1.0 + sign * margin(rng);  // wrong response at the constant eigenvector
    } else {
      f[0] = 1.0;
      std::uniform_int_distribution<std::size_t> pick(1, n - 1);
      f[pick(rng)] = sign * excess(rng);  // response outside [-1, 1]
    }
    FilterTarget t = make_target(ng.g, std::move(f));
    ZeroErrorRow row{ng.name, "inadmissible", t.f, domain_report(t, opt, opt.seed + k).e_star, 0.0, false};
    row.threshold = std::max(1e-4, min_abs_shift(t.f) - 1e-6);
    row.passed = row.e_star >= row.threshold;
    rep.zero_error.push_back(std::move(row));
  }
}

void run_optimality(const BatteryOptions& opt, std::mt19937_64& rng, BatteryReport& rep) {
  std::normal_distribution<double> nd;
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (std::size_t k = 0; k < opt.optimality_instances; ++k) {
    NamedGraph ng = sandwich_family(k, rng);
    const std::size_t n = ng.g.n;
    Tensor c_t;
    if (k % 2 == 0) {
      c_t = Tensor::zeros({n, n});
      for (auto& v : c_t.data()) v = nd(rng);
      c_t = softmax_rows(c_t);
    } else {
      c_t = tied_attention_map(n, 1 + k % 4, opt.seed + k);
    }
    FilterTarget t = make_target(ng.g, std::vector<double>(n, 0.0));
    const OptimalFilter best = optimal_filter_for_support(c_t, t.basis);
    t.f = best.f;
    OptimalityRow row;
    row.graph = ng.name;
    row.closed_value = best.value;
    row.direct_value = conv_support_error(c_t, t);
    row.min_gap = std::numeric_limits<double>::infinity();
    FilterTarget moved = t;
    for (std::size_t p = 0; p < opt.perturbations; ++p) {
      for (std::size_t i = 0; i < n; ++i) moved.f[i] = best.f[i] + jitter(rng);
      row.min_gap = std::min(row.min_gap, conv_support_error(c_t, moved) - row.direct_value);
    }
    row.passed = std::abs(row.closed_value - row.direct_value) <= 1e-9 && row.min_gap >= -1e-12;
    rep.optimality.push_back(std::move(row));
  }
}

void run_probe(const BatteryOptions& opt, BatteryReport& rep) {
  AttentionSearchOptions search;
  search.restarts = opt.search_restarts;
  search.iterations = opt.search_iterations;
  search.seed = opt.seed;
  for (const NamedGraph& ng : {NamedGraph{"P4", path_graph(4)}, NamedGraph{"K4", complete_graph(4)}}) {
    const FilterTarget low = make_target(ng.g, {1.0, 0.5, 0.25, 0.125});
    // The normalized Laplacian itself: response lambda_i.
    FilterTarget high = low;
    high.f = high.basis.lambda;
    using Entry = std::pair<const char*, const FilterTarget*>;
    for (const auto& [name, t] : {Entry{"low-pass", &low}, Entry{"high-pass", &high}}) {
      ProbeRow row;
      row.graph = ng.name;
      row.response = name;
      row.f = t->f;
      row.found = attention_min_error_search(*t, search);
      const ErrorReport floor = min_error_over_stochastic(*t);
      row.floor = floor.e_star;
      row.lower = floor.lower;
      row.reached = row.found < 0.05;
      row.lower_ok = row.found >= row.lower - opt.tolerance;
      rep.probe.push_back(std::move(row));
    }
  }
}

void run_lemma(const BatteryOptions& opt, std::mt19937_64& rng, BatteryReport& rep) {
  for (std::size_t k = 0; k < opt.lemma_instances; ++k) {
    const std::size_t n = 4 + k % 4, d = 1 + k % 4;
    const bool path = k % 2 == 0;
    FilterTarget t = make_target(path ? path_graph(n) : complete_graph(n), uniform(n, -2.0, 3.0, rng));
    const LemmaReport r = check_lemma_gradients(tied_attention_map(n, d, opt.seed + k), t);
    LemmaRow row;
    row.graph = (path ? "P" : "K") + std::to_string(n);
    row.d = d;
    row.gradient_error = r.gradient_error;
    row.min_numeric_hessian = *std::min_element(r.numeric_hessian.begin(), r.numeric_hessian.end());
    row.min_stated_hessian = *std::min_element(r.stated_hessian.begin(), r.stated_hessian.end());
    row.gradient_ok = r.gradient_ok;
    row.hessian_ok = r.hessian_ok;
    rep.lemma.push_back(std::move(row));
  }
}

}  // namespace

BoundDomain parse_bound_domain(const std::string& s) {
  if (s == "stochastic") return BoundDomain::kStochastic;
  if (s == "affine") return BoundDomain::kAffine;
  throw ConfigError("unknown domain '" + s + "' (expected stochastic or affine)");
}

std::string to_string(BoundDomain d) { return d == BoundDomain::kAffine ? "affine" : "stochastic"; }

std::size_t BatteryReport::sandwich_passed() const {
  return static_cast<std::size_t>(
      std::count_if(sandwich.begin(), sandwich.end(), [](const SandwichRow& r) { return r.passed(); }));
}

bool BatteryReport::zero_error_ok() const {
  return std::all_of(zero_error.begin(), zero_error.end(), [](const ZeroErrorRow& r) { return r.passed; });
}

bool BatteryReport::optimality_ok() const {
  return std::all_of(optimality.begin(), optimality.end(), [](const OptimalityRow& r) { return r.passed; });
}

bool BatteryReport::probe_bounds_ok() const {
  return std::all_of(probe.begin(), probe.end(), [](const ProbeRow& r) {
    return (r.response != "high-pass" || r.lower_ok) && r.found >= r.floor - 1e-6;
  });
}

bool BatteryReport::probe_low_pass_reached() const {
  return std::any_of(probe.begin(), probe.end(),
                     [](const ProbeRow& r) { return r.response == "low-pass" && r.reached; });
}

bool BatteryReport::lemma_ok() const {
  return std::all_of(lemma.begin(), lemma.end(), [](const LemmaRow& r) { return r.gradient_ok && r.hessian_ok; });
}

bool BatteryReport::bounds_ok() const {
  return sandwich_passed() == sandwich.size() && zero_error_ok() && optimality_ok() && probe_bounds_ok() &&
         lemma_ok();
}

BatteryReport run_battery(const BatteryOptions& opt) {
  BatteryReport rep;
  rep.options = opt;
  // Each section draws from its own stream so resizing one leaves the others unchanged.
  std::mt19937_64 sandwich_rng(opt.seed), zero_rng(opt.seed + 1), opt_rng(opt.seed + 2), lemma_rng(opt.seed + 3);
  run_sandwich(opt, sandwich_rng, rep);
  run_zero_error(opt, zero_rng, rep);
  run_optimality(opt, opt_rng, rep);
  run_probe(opt, rep);
  run_lemma(opt, lemma_rng, rep);
  return rep;
}

std::string battery_report_json(const BatteryReport& rep) {
  using nlohmann::json;
  const BatteryOptions& o = rep.options;
  json doc;
  doc["options"] = {{"instances", o.instances},
                    {"seed", o.seed},
                    {"domain", to_string(o.domain)},
                    {"tolerance", o.tolerance},
                    {"pg_restarts", o.pg_restarts},
                    {"zero_error_instances", o.zero_error_instances},
                    {"optimality_instances", o.optimality_instances},
                    {"perturbations", o.perturbations},
                    {"lemma_instances", o.lemma_instances},
                    {"search_restarts", o.search_restarts},
                    {"search_iterations", o.search_iterations},
                    {"break_bound", o.break_bound}};
  json rows = json::array();
  for (const SandwichRow& r : rep.sandwich)
    rows.push_back({{"graph", r.graph},
                    {"f", r.f},
                    {"e_star", r.e_star},
                    {"e_star_affine", r.e_star_affine},
                    {"lower", r.lower},
                    {"upper", r.upper},
                    {"attention_upper", r.attention_upper},
                    {"closed_form_feasible", r.closed_form_feasible},
                    {"converged", r.converged},
                    {"lower_ok", r.lower_ok},
                    {"upper_ok", r.upper_ok},
                    {"attention_upper_ok", r.attention_upper_ok},
                    {"passed", r.passed()}});
  doc["sandwich"] = std::move(rows);
  rows = json::array();
  for (const ZeroErrorRow& r : rep.zero_error)
    rows.push_back({{"graph", r.graph},
                    {"kind", r.kind},
                    {"f", r.f},
                    {"e_star", r.e_star},
                    {"threshold", r.threshold},
                    {"passed", r.passed}});
  doc["zero_error"] = std::move(rows);
  rows = json::array();
  for (const OptimalityRow& r : rep.optimality)
    rows.push_back({{"graph", r.graph},
                    {"closed_value", r.closed_value},
                    {"direct_value", r.direct_value},
                    {"min_gap", r.min_gap},
                    {"passed", r.passed}});
  doc["optimality"] = std::move(rows);
  rows = json::array();
  for (const ProbeRow& r : rep.probe)
    rows.push_back({{"graph", r.graph},
                    {"response", r.response},
                    {"f", r.f},
                    {"found", r.found},
                    {"floor", r.floor},
                    {"lower", r.lower},
                    {"reached", r.reached},
                    {"lower_ok", r.lower_ok}});
  doc["probe"] = std::move(rows);
  rows = json::array();
  for (const LemmaRow& r : rep.lemma)
    rows.push_back({{"graph", r.graph},
                    {"d", r.d},
                    {"gradient_error", r.gradient_error},
                    {"min_numeric_hessian", r.min_numeric_hessian},
                    {"min_stated_hessian", r.min_stated_hessian},
                    {"gradient_ok", r.gradient_ok},
                    {"hessian_ok", r.hessian_ok}});
  doc["lemma"] = std::move(rows);
  doc["summary"] = {{"sandwich_passed", rep.sandwich_passed()},
                    {"sandwich_total", rep.sandwich.size()},
                    {"zero_error_ok", rep.zero_error_ok()},
                    {"optimality_ok", rep.optimality_ok()},
                    {"probe_bounds_ok", rep.probe_bounds_ok()},
                    {"probe_low_pass_reached", rep.probe_low_pass_reached()},
                    {"lemma_ok", rep.lemma_ok()},
                    {"bounds_ok", rep.bounds_ok()}};
  return doc.dump(2) + "\n";
}

}  // namespace feta
