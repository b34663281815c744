#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgda/adapt_eval.hpp"
#include "hgda/corpus.hpp"
#include "hgda/meta.hpp"

namespace hgda {

// One corpus file entry of the domain manifest.
struct CorpusSpec {
  std::string path;
  std::string name;
  std::string domain;
  Split split = Split::train;
  std::string entity_type;             // informational, may be empty
  std::set<std::string> keep_types;    // empty = keep everything
  bool repair = true;
};

// With an empty path no file is read: the table only supplies the
// unknown-token policy, sized to the model's embedding dimension.
struct EmbeddingSpec {
  std::string path;
  std::size_t dim = 0;  // required when path is set
  UnkPolicy unk = UnkPolicy::zeros;
  double sigma = 0.0;
  uint64_t unk_seed = 0;
};

struct DataManifest {
  std::vector<std::string> domains;  // optional explicit order
  std::optional<std::string> target_domain;
  std::optional<EmbeddingSpec> embeddings;
  std::vector<CorpusSpec> corpora;
  std::filesystem::path base_dir;  // paths resolve relative to this
};

DataManifest load_manifest(const std::filesystem::path& path);
DataManifest parse_manifest(const nlohmann::json& j,
                            const std::filesystem::path& base_dir);
nlohmann::json manifest_to_json(const DataManifest& manifest);

struct LoadedData {
  DomainRegistry registry;
  std::vector<Corpus> corpora;
  EmbeddingTable table;
  bool has_table = false;
};

// Parses every corpus, applies keep_types filters, resolves domain ids, and
// loads the embedding table when one is declared. fallback_dim sizes the
// all-zeros table used when the manifest names no embeddings.
LoadedData load_data(const DataManifest& manifest, std::size_t fallback_dim);

// Full experiment configuration: model dims plus training, sampling and
// adaptation settings. All defaults follow the reference hyperparameters.
struct RunConfig {
  EncoderConfig model;
  TrainConfig train;
  SamplerConfig sampler;
  AdaptationConfig adapt;
  std::vector<std::size_t> sizes = {5, 10, 20, 50};
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace hgda
