#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hgda/meta.hpp"

namespace hgda {

inline constexpr const char* kVersionString = "hgda 0.1.0";

// Everything a resumed run needs: parameters, optimizer velocity, loop
// counters, and the vocabularies that pin tensor row order. Tensor payloads
// are stored as raw doubles, so save/load round-trips bit-exactly.
struct CheckpointData {
  ModelParams params;
  EncoderConfig encoder_config;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  std::size_t iteration = 0;
  double best_dev = 0.0;
  std::size_t patience_left = 0;
  bool has_optimizer = false;
  SgdState optimizer;
  nlohmann::json extra;  // informational (config echo etc.)
};

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointData& data);

CheckpointData load_checkpoint(const std::filesystem::path& path);

uint64_t fnv1a_hash(const std::string& text);

}  // namespace hgda
