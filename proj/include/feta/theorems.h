#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace feta {

enum class BoundDomain {
  kStochastic,  // row sums 1 and entries >= 0, the set attention maps live in
  kAffine,      // row sums 1 only; E* is the closed form
};

BoundDomain parse_bound_domain(const std::string& s);
std::string to_string(BoundDomain d);

struct BatteryOptions {
  std::size_t instances = 100;  // sandwich rows
  std::uint64_t seed = 0;
  BoundDomain domain = BoundDomain::kStochastic;
  double tolerance = 1e-7;
  int pg_restarts = 20;
  std::size_t zero_error_instances = 20;
  std::size_t optimality_instances = 50;
  std::size_t perturbations = 500;
  std::size_t lemma_instances = 20;
  int search_restarts = 20;
  int search_iterations = 3000;
  // Test hook: check the sandwich against half the lower bound instead of the
  // upper bound, so the battery must report a violation.
  bool break_bound = false;
};

struct SandwichRow {
  std::string graph;
  std::vector<double> f;
  double e_star = 0.0;
  double e_star_affine = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double attention_upper = 0.0;
  bool closed_form_feasible = false;
  bool converged = true;
  bool lower_ok = false;
  bool upper_ok = false;
  bool attention_upper_ok = false;

  bool passed() const { return lower_ok && upper_ok && attention_upper_ok; }
};

struct ZeroErrorRow {
  std::string graph;
  std::string kind;  // "all-pass" or "inadmissible"
  std::vector<double> f;
  double e_star = 0.0;
  double threshold = 0.0;  // E* must stay below (all-pass) or reach (inadmissible) it
  bool passed = false;
};

struct OptimalityRow {
  std::string graph;
  double closed_value = 0.0;  // sqrt(trace(C^T C - D^2))
  double direct_value = 0.0;  // ||C - U diag(f*) U^T||_F
  double min_gap = 0.0;       // smallest (perturbed error - direct error)
  bool passed = false;
};

struct ProbeRow {
  std::string graph;
  std::string response;  // "low-pass" or "high-pass"
  std::vector<double> f;
  double found = 0.0;    // best attention-map error
  double floor = 0.0;    // minimum over row-stochastic non-negative maps
  double lower = 0.0;    // smallest |f_i - 1|
  bool reached = false;  // found < 0.05
  bool lower_ok = false;
};

struct LemmaRow {
  std::string graph;
  std::size_t d = 0;
  double gradient_error = 0.0;
  double min_numeric_hessian = 0.0;
  double min_stated_hessian = 0.0;
  bool gradient_ok = false;
  bool hessian_ok = false;
};

struct BatteryReport {
  BatteryOptions options;
  std::vector<SandwichRow> sandwich;
  std::vector<ZeroErrorRow> zero_error;
  std::vector<OptimalityRow> optimality;
  std::vector<ProbeRow> probe;
  std::vector<LemmaRow> lemma;

  std::size_t sandwich_passed() const;
  bool zero_error_ok() const;
  bool optimality_ok() const;
  // High-pass rows respect the lower bound and every search stays at or
  // above the stochastic floor.
  bool probe_bounds_ok() const;
  // Some low-pass target is reached to 0.05. Reported, not a bound.
  bool probe_low_pass_reached() const;
  bool lemma_ok() const;
  // Every bound holds; decides the exit code.
  bool bounds_ok() const;
};

BatteryReport run_battery(const BatteryOptions& opt);
std::string battery_report_json(const BatteryReport& report);

}  // namespace feta
