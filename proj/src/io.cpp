#include "feta/io.h"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "feta/config.h"
#include "feta/errors.h"

namespace feta {

using nlohmann::json;

namespace {

constexpr const char* kDatasetFile = "dataset.jsonl";
constexpr const char* kManifestFile = "manifest.json";

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw IoError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw IoError(where + ": bad field '" + key + "': " + e.what());
  }
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

}  // namespace

std::string graph_record(const Graph& g, std::size_t id, const std::string& split) {
  json r;
  r["id"] = id;
  r["split"] = split;
  r["n"] = g.n;
  json edges = json::array();
  bool weighted = false;
  for (const Edge& e : g.edges) {
    edges.push_back({e.i, e.j});
    weighted = weighted || e.weight != 1.0;
  }
  r["edges"] = std::move(edges);
  if (weighted) {
    json w = json::array();
    for (const Edge& e : g.edges) w.push_back(e.weight);
    r["weights"] = std::move(w);
  }
  json features = json::array();
  if (g.x.defined() && g.x.numel() > 0)
    for (std::size_t i = 0; i < g.x.rows(); ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < g.x.cols(); ++c) row.push_back(g.x(i, c));
      features.push_back(std::move(row));
    }
  r["features"] = std::move(features);
  r["labels"] = g.labels;
  json mask = json::array();
  for (bool m : g.mask) mask.push_back(m);
  r["mask"] = std::move(mask);
  r["chosen_eig"] = g.chosen_eig;
  if (!g.targets.empty()) r["targets"] = g.targets;
  return r.dump();
}

Graph parse_graph_record(const std::string& line, std::string* split) {
  json r;
  try {
    r = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed graph record: ") + e.what());
  }
  const std::string where = "graph record " + (r.contains("id") ? r["id"].dump() : std::string("?"));
  Graph g;
  g.n = field<std::size_t>(r, "n", where);
  const auto edges = field<std::vector<std::vector<std::size_t>>>(r, "edges", where);
  std::vector<double> weights(edges.size(), 1.0);
  if (r.contains("weights")) weights = field<std::vector<double>>(r, "weights", where);
  if (weights.size() != edges.size()) throw IoError(where + ": weights and edges differ in length");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k].size() != 2) throw IoError(where + ": edge " + std::to_string(k) + " is not a pair");
    g.edges.push_back({edges[k][0], edges[k][1], weights[k]});
  }
  const auto features = field<std::vector<std::vector<double>>>(r, "features", where);
  if (!features.empty()) {
    if (features.size() != g.n) throw IoError(where + ": feature rows differ from n");
    const std::size_t c = features[0].size();
    std::vector<double> flat;
    flat.reserve(g.n * c);
    for (const auto& row : features) {
      if (row.size() != c) throw IoError(where + ": ragged feature rows");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    g.x = Tensor::from({g.n, c}, std::move(flat));
  }
  g.labels = field<std::vector<int>>(r, "labels", where);
  g.mask = field<std::vector<bool>>(r, "mask", where);
  g.chosen_eig = field<int>(r, "chosen_eig", where);
  if (r.contains("targets")) g.targets = field<std::vector<double>>(r, "targets", where);
  if (split) *split = field<std::string>(r, "split", where);
  try {
    g.validate();
  } catch (const std::exception& e) {
    throw IoError(where + ": " + e.what());
  }
  return g;
}

void save_dataset(const DatasetSplit& data, std::uint64_t seed, const std::filesystem::path& dir) {
  ensure_directory(dir);
  std::string lines;
  std::size_t id = 0;
  for (const auto& [split, graphs] : {std::pair{"train", &data.train}, {"valid", &data.valid}, {"test", &data.test}})
    for (const Graph& g : *graphs) lines += graph_record(g, id++, split) + "\n";
  write_text_file(dir / kDatasetFile, lines);

  json m;
  m["format"] = "feta-ds/1";
  m["preset"] = data.name;
  m["seed"] = seed;
  m["counts"] = {{"train", data.train.size()}, {"valid", data.valid.size()}, {"test", data.test.size()}};
  write_text_file(dir / kManifestFile, m.dump(2) + "\n");
}

DatasetSplit load_dataset(const std::filesystem::path& dir, DatasetManifest* manifest) {
  json m;
  try {
    m = json::parse(read_text_file(dir / kManifestFile));
  } catch (const json::exception& e) {
    throw IoError((dir / kManifestFile).string() + ": " + e.what());
  }
  const std::string where = (dir / kManifestFile).string();
  DatasetManifest info;
  info.format = field<std::string>(m, "format", where);
  if (info.format != "feta-ds/1") throw IoError(where + ": unsupported format '" + info.format + "'");
  info.preset = field<std::string>(m, "preset", where);
  info.seed = field<std::uint64_t>(m, "seed", where);
  const json counts = field<json>(m, "counts", where);
  info.train = field<std::size_t>(counts, "train", where);
  info.valid = field<std::size_t>(counts, "valid", where);
  info.test = field<std::size_t>(counts, "test", where);

  DatasetSplit data;
  data.name = info.preset;
  std::ifstream in(dir / kDatasetFile);
  if (!in) throw IoError("cannot read " + (dir / kDatasetFile).string());
  std::string line, split;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Graph g = parse_graph_record(line, &split);
    if (split == "train")
      data.train.push_back(std::move(g));
    else if (split == "valid")
      data.valid.push_back(std::move(g));
    else if (split == "test")
      data.test.push_back(std::move(g));
    else
      throw IoError("unknown split '" + split + "'");
  }
  if (data.train.size() != info.train || data.valid.size() != info.valid || data.test.size() != info.test)
    throw IoError(dir.string() + ": record counts do not match the manifest");
  if (manifest) *manifest = info;
  return data;
}

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw IoError("base64: length not a multiple of 4");
  std::vector<unsigned char> out(3 * (text.size() / 4));
  const int len = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
  if (len < 0) throw IoError("base64: invalid characters");
  // EVP_DecodeBlock keeps the zero bytes that padding stands for.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(len) - pad);
  return out;
}

std::string checkpoint_json(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = "feta-ckpt/1";
  doc["config"] = model_config_entries(ckpt.config);
  json params = json::object();
  for (const auto& [name, t] : ckpt.params.tensors) {
    std::vector<unsigned char> bytes(t.numel() * sizeof(double));
    for (std::size_t k = 0; k < t.numel(); ++k) {
      const std::uint64_t v = to_little_endian(std::bit_cast<std::uint64_t>(t[k]));
      std::memcpy(bytes.data() + k * sizeof v, &v, sizeof v);
    }
    params[name] = {{"shape", t.shape()}, {"data", base64_encode(bytes)}};
  }
  doc["params"] = std::move(params);
  return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(origin + ": " + e.what());
  }
  const std::string format = field<std::string>(doc, "format", origin);
  if (format != "feta-ckpt/1") throw IoError(origin + ": unsupported format '" + format + "'");
  Checkpoint ckpt;
  ckpt.config = parse_model_config(field<std::map<std::string, std::string>>(doc, "config", origin), origin);
  ckpt.config.validate();

  const FetaParams expected = init_params(ckpt.config, 0);
  const json params = field<json>(doc, "params", origin);
  for (const auto& [name, entry] : params.items()) {
    if (!expected.contains(name)) throw ConfigError(origin + ": parameter '" + name + "' does not fit the config");
    const Shape shape = field<Shape>(entry, "shape", origin);
    if (shape != expected.at(name).shape())
      throw ConfigError(origin + ": parameter '" + name + "' has shape " + shape_str(shape) + ", config expects " +
                        shape_str(expected.at(name).shape()));
    const auto bytes = base64_decode(field<std::string>(entry, "data", origin));
    Tensor t = Tensor::zeros(shape);
    if (bytes.size() != t.numel() * sizeof(double))
      throw IoError(origin + ": parameter '" + name + "' has the wrong byte count");
    for (std::size_t k = 0; k < t.numel(); ++k) {
      std::uint64_t v = 0;
      std::memcpy(&v, bytes.data() + k * sizeof v, sizeof v);
      t[k] = std::bit_cast<double>(to_little_endian(v));
    }
    ckpt.params.tensors[name] = t.set_requires_grad(true);
  }
  if (ckpt.params.tensors.size() != expected.tensors.size())
    throw ConfigError(origin + ": checkpoint is missing parameters for its config");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_text_file(path), path.string());
}

}  // namespace feta
