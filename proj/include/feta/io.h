#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "feta/graph.h"
#include "feta/model.h"

namespace feta {

// feta-ds/1: <dir>/dataset.jsonl holds one JSON record per graph, in split
// order train, valid, test; <dir>/manifest.json holds format, preset, seed and
// per-split counts. Doubles are written in shortest round-trip form, so equal
// datasets give equal bytes.
struct DatasetManifest {
  std::string format = "feta-ds/1";
  std::string preset;
  std::uint64_t seed = 0;
  std::size_t train = 0, valid = 0, test = 0;
};

std::string graph_record(const Graph& g, std::size_t id, const std::string& split);
// Parses one record; `split` receives the record's split name.
Graph parse_graph_record(const std::string& line, std::string* split = nullptr);

void save_dataset(const DatasetSplit& data, std::uint64_t seed, const std::filesystem::path& dir);
DatasetSplit load_dataset(const std::filesystem::path& dir, DatasetManifest* manifest = nullptr);

// Standard base64 (RFC 4648, padded).
std::string base64_encode(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

// feta-ckpt/1: one JSON document {format, config, params}; each parameter is
// {shape, data} with data the base64 of its little-endian float64 buffer.
struct Checkpoint {
  FetaConfig config;
  FetaParams params;
};

std::string checkpoint_json(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text, const std::string& origin = "<checkpoint>");
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace feta
