#include "feta/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "feta/errors.h"

namespace feta {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <class T>
struct Field {
  std::string key;
  std::function<std::string(const T&)> get;
  std::function<void(T&, const std::string&)> set;
};

template <class T, class M>
Field<T> size_field(const std::string& key, M T::*member) {
  return {key, [member](const T& t) { return std::to_string(t.*member); },
          [member, key](T& t, const std::string& v) { t.*member = static_cast<M>(to_unsigned(key, v)); }};
}

template <class T>
Field<T> double_field(const std::string& key, double T::*member) {
  return {key, [member](const T& t) { return format_double(t.*member); },
          [member, key](T& t, const std::string& v) { t.*member = to_double(key, v); }};
}

const std::vector<Field<FetaConfig>>& model_fields() {
  using C = FetaConfig;
  static const std::vector<Field<C>> fields = {
      size_field("layers", &C::layers),
      size_field("hidden", &C::hidden),
      size_field("heads", &C::heads),
      size_field("order", &C::order),
      {"filter", [](const C& c) { return to_string(c.filter); },
       [](C& c, const std::string& v) { c.filter = parse_filter_kind(v); }},
      {"attention", [](const C& c) { return to_string(c.attention); },
       [](C& c, const std::string& v) { c.attention = parse_attention_kind(v); }},
      {"pe_mode", [](const C& c) { return to_string(c.pe_mode); },
       [](C& c, const std::string& v) { c.pe_mode = parse_pe_mode(v); }},
      double_field("pe_beta", &C::pe_beta),
      double_field("pe_gamma", &C::pe_gamma),
      {"pe_walk_steps", [](const C& c) { return std::to_string(c.pe_walk_steps); },
       [](C& c, const std::string& v) { c.pe_walk_steps = to_int("pe_walk_steps", v); }},
      size_field("pe_k", &C::pe_k),
      double_field("lambda_reg", &C::lambda_reg),
      size_field("gnn_layers", &C::gnn_layers),
      {"arma_iterations", [](const C& c) { return std::to_string(c.arma_iterations); },
       [](C& c, const std::string& v) { c.arma_iterations = to_int("arma_iterations", v); }},
      {"fixed_lambda_max", [](const C& c) { return std::string(c.fixed_lambda_max ? "true" : "false"); },
       [](C& c, const std::string& v) { c.fixed_lambda_max = to_bool("fixed_lambda_max", v); }},
      {"task", [](const C& c) { return to_string(c.task); },
       [](C& c, const std::string& v) { c.task = parse_task_kind(v); }},
      size_field("in_dim", &C::in_dim),
      size_field("out_dim", &C::out_dim),
  };
  return fields;
}

const std::vector<Field<TrainOptions>>& train_fields() {
  using T = TrainOptions;
  static const std::vector<Field<T>> fields = {
      double_field("lr", &T::lr),
      double_field("beta1", &T::beta1),
      double_field("beta2", &T::beta2),
      double_field("adam_eps", &T::adam_eps),
      size_field("batch_size", &T::batch_size),
      size_field("max_epochs", &T::max_epochs),
      size_field("plateau_patience", &T::plateau_patience),
      size_field("stop_patience", &T::stop_patience),
      double_field("lr_factor", &T::lr_factor),
      double_field("time_budget_s", &T::time_budget_s),
  };
  return fields;
}

const std::vector<Field<RunConfig>>& run_fields() {
  using R = RunConfig;
  static const std::vector<Field<R>> fields = {
      {"dataset", [](const R& r) { return r.dataset; }, [](R& r, const std::string& v) { r.dataset = v; }},
      {"preset", [](const R& r) { return r.preset; }, [](R& r, const std::string& v) { r.preset = v; }},
      size_field("data_seed", &R::data_seed),
      size_field("seed", &R::seed),
      {"out", [](const R& r) { return r.out; }, [](R& r, const std::string& v) { r.out = v; }},
  };
  return fields;
}

const std::vector<Field<BatteryOptions>>& battery_fields() {
  using B = BatteryOptions;
  auto int_field = [](const std::string& key, int B::*member) -> Field<B> {
    return {key, [member](const B& b) { return std::to_string(b.*member); },
            [member, key](B& b, const std::string& v) { b.*member = to_int(key, v); }};
  };
  static const std::vector<Field<B>> fields = {
      size_field("instances", &B::instances),
      size_field("seed", &B::seed),
      {"domain", [](const B& b) { return to_string(b.domain); },
       [](B& b, const std::string& v) { b.domain = parse_bound_domain(v); }},
      double_field("tolerance", &B::tolerance),
      int_field("pg_restarts", &B::pg_restarts),
      size_field("zero_error_instances", &B::zero_error_instances),
      size_field("optimality_instances", &B::optimality_instances),
      size_field("perturbations", &B::perturbations),
      size_field("lemma_instances", &B::lemma_instances),
      int_field("search_restarts", &B::search_restarts),
      int_field("search_iterations", &B::search_iterations),
  };
  return fields;
}

// Applies every entry of kv that matches a field and marks it used.
template <class T>
void apply(const std::vector<Field<T>>& fields, const std::map<std::string, std::string>& kv, T& target,
           std::map<std::string, bool>& used, const std::string& origin) {
  for (const auto& f : fields) {
    auto it = kv.find(f.key);
    if (it == kv.end()) continue;
    try {
      f.set(target, it->second);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
    used[f.key] = true;
  }
}

void reject_unknown(const std::map<std::string, std::string>& kv, const std::map<std::string, bool>& used,
                    const std::string& origin) {
  for (const auto& [key, value] : kv)
    if (!used.count(key)) throw ConfigError(origin + ": unknown key '" + key + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, trim(t.substr(eq + 1))).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const auto kv = parse_key_values(text, origin);
  RunConfig cfg;
  std::map<std::string, bool> used;
  apply(model_fields(), kv, cfg.model, used, origin);
  apply(train_fields(), kv, cfg.train, used, origin);
  apply(run_fields(), kv, cfg, used, origin);
  reject_unknown(kv, used, origin);
  cfg.train.seed = cfg.seed;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path), path.string());
}

std::string format_run_config(const RunConfig& cfg) {
  std::string out = "# run\n";
  for (const auto& f : run_fields()) out += f.key + " = " + f.get(cfg) + "\n";
  out += "\n# model\n";
  for (const auto& f : model_fields()) out += f.key + " = " + f.get(cfg.model) + "\n";
  out += "\n# training\n";
  for (const auto& f : train_fields()) out += f.key + " = " + f.get(cfg.train) + "\n";
  return out;
}

FetaConfig parse_model_config(const std::map<std::string, std::string>& kv, const std::string& origin) {
  FetaConfig cfg;
  std::map<std::string, bool> used;
  apply(model_fields(), kv, cfg, used, origin);
  reject_unknown(kv, used, origin);
  return cfg;
}

std::map<std::string, std::string> model_config_entries(const FetaConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& f : model_fields()) out[f.key] = f.get(cfg);
  return out;
}

BatteryOptions parse_battery_options(const std::string& text, const std::string& origin) {
  const auto kv = parse_key_values(text, origin);
  BatteryOptions opt;
  std::map<std::string, bool> used;
  apply(battery_fields(), kv, opt, used, origin);
  reject_unknown(kv, used, origin);
  return opt;
}

std::string format_battery_options(const BatteryOptions& opt) {
  std::string out;
  for (const auto& f : battery_fields()) out += f.key + " = " + f.get(opt) + "\n";
  return out;
}

}  // namespace feta
