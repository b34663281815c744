#include "hgda/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace hgda {

namespace {

constexpr char kMagic[8] = {'H', 'G', 'D', 'A', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, uint64_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

uint64_t read_u64(std::istream& in) {
  uint64_t value = 0;
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) raise(ErrorCode::incompatible_checkpoint, "truncated file");
  return value;
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& t) {
  write_u64(out, name.size());
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u64(out, t.rows());
  write_u64(out, t.cols());
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

uint64_t double_bits(double value) {
  uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(bits));
  return bits;
}

double bits_to_double(uint64_t bits) {
  double value = 0.0;
  std::memcpy(&value, &bits, sizeof(value));
  return value;
}

nlohmann::json encoder_config_json(const EncoderConfig& c) {
  return {
      {"emb_dim", c.emb_dim},
      {"hidden", c.hidden},
      {"char_features", c.char_features},
      {"char_dim", c.char_dim},
      {"char_lstm_out", c.char_lstm_out},
      {"char_cnn_out", c.char_cnn_out},
      {"char_kernel", c.char_kernel},
  };
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.emb_dim = j.at("emb_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.char_features = j.at("char_features").get<bool>();
  c.char_dim = j.at("char_dim").get<std::size_t>();
  c.char_lstm_out = j.at("char_lstm_out").get<std::size_t>();
  c.char_cnn_out = j.at("char_cnn_out").get<std::size_t>();
  c.char_kernel = j.at("char_kernel").get<std::size_t>();
  return c;
}

}  // namespace

uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path,
                     const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    raise(ErrorCode::io_error, "cannot open '" + path.string() + "' for write");
  }
  out.write(kMagic, sizeof(kMagic));

  nlohmann::json meta;
  meta["version"] = kVersionString;
  meta["seed"] = data.seed;
  meta["config_hash"] = data.config_hash;
  meta["encoder"] = encoder_config_json(data.encoder_config);
  meta["tags"] = data.params.tags.tags();
  meta["vocab"] = data.params.theta.vocab.tokens();
  std::vector<int> char_bytes;
  for (unsigned char c : data.params.theta.char_vocab.bytes()) {
    char_bytes.push_back(c);
  }
  meta["char_bytes"] = char_bytes;
  meta["domain_names"] = data.params.domain_names;
  meta["iteration"] = data.iteration;
  meta["best_dev_bits"] = double_bits(data.best_dev);
  meta["patience_left"] = data.patience_left;
  meta["has_optimizer"] = data.has_optimizer;
  meta["extra"] = data.extra;
  const std::string meta_text = meta.dump();
  write_u64(out, meta_text.size());
  out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));

  std::vector<std::pair<std::string, const Matrix*>> tensors;
  visit_model_tensors(data.params, [&](const std::string& name, const Matrix& t) {
    tensors.emplace_back(name, &t);
  });
  if (data.has_optimizer) {
    visit_model_tensors(data.optimizer.velocity,
                        [&](const std::string& name, const Matrix& t) {
                          tensors.emplace_back("opt." + name, &t);
                        });
  }
  write_u64(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    write_tensor(out, name, *tensor);
  }
  if (!out) {
    raise(ErrorCode::io_error, "write failed for '" + path.string() + "'");
  }
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  }
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    raise(ErrorCode::incompatible_checkpoint,
          "'" + path.string() + "' is not a checkpoint file");
  }

  const uint64_t meta_len = read_u64(in);
  std::string meta_text(meta_len, '\0');
  in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
  if (!in) raise(ErrorCode::incompatible_checkpoint, "truncated metadata");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception&) {
    raise(ErrorCode::incompatible_checkpoint, "corrupt metadata block");
  }

  CheckpointData data;
  try {
    if (meta.at("version").get<std::string>() != kVersionString) {
      raise(ErrorCode::incompatible_checkpoint,
            "version mismatch: " + meta.at("version").get<std::string>());
    }
    data.seed = meta.at("seed").get<uint64_t>();
    data.config_hash = meta.at("config_hash").get<uint64_t>();
    data.encoder_config = encoder_config_from_json(meta.at("encoder"));
    data.iteration = meta.at("iteration").get<std::size_t>();
    data.best_dev = bits_to_double(meta.at("best_dev_bits").get<uint64_t>());
    data.patience_left = meta.at("patience_left").get<std::size_t>();
    data.has_optimizer = meta.at("has_optimizer").get<bool>();
    data.extra = meta.value("extra", nlohmann::json::object());

    data.params.tags = TagVocab(meta.at("tags").get<std::vector<std::string>>());
    data.params.domain_names =
        meta.at("domain_names").get<std::vector<std::string>>();
    Vocab vocab(meta.at("vocab").get<std::vector<std::string>>());
    std::vector<unsigned char> char_bytes;
    for (int c : meta.at("char_bytes").get<std::vector<int>>()) {
      char_bytes.push_back(static_cast<unsigned char>(c));
    }
    CharVocab char_vocab(char_bytes);

    // Allocate tensors with the recorded shapes, then fill by name.
    EmbeddingTable empty_table(data.encoder_config.emb_dim, UnkPolicy::zeros);
    SplitRng zero_rng(0);
    data.params.theta =
        init_encoder(data.encoder_config, std::move(vocab),
                     std::move(char_vocab), empty_table, zero_rng);
    data.params.phi = init_crf(data.encoder_config.hidden,
                               data.params.tags.size(), zero_rng);
    data.params.omega = init_classifier(data.encoder_config.hidden,
                                        data.params.domain_names.size(),
                                        zero_rng);
    if (data.has_optimizer) {
      data.optimizer.velocity = zeros_like(data.params);
      data.optimizer.initialized = true;
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::incompatible_checkpoint,
          std::string("metadata field error: ") + e.what());
  }

  std::map<std::string, Matrix*> slots;
  visit_model_tensors(data.params, [&](const std::string& name, Matrix& t) {
    slots.emplace(name, &t);
  });
  if (data.has_optimizer) {
    visit_model_tensors(data.optimizer.velocity,
                        [&](const std::string& name, Matrix& t) {
                          slots.emplace("opt." + name, &t);
                        });
  }

  const uint64_t tensor_count = read_u64(in);
  if (tensor_count != slots.size()) {
    raise(ErrorCode::incompatible_checkpoint,
          "tensor count mismatch: file has " + std::to_string(tensor_count) +
              ", model needs " + std::to_string(slots.size()));
  }
  for (uint64_t i = 0; i < tensor_count; ++i) {
    const uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const uint64_t rows = read_u64(in);
    const uint64_t cols = read_u64(in);
    auto it = slots.find(name);
    if (it == slots.end()) {
      raise(ErrorCode::incompatible_checkpoint, "unexpected tensor '" + name + "'");
    }
    Matrix& t = *it->second;
    if (t.rows() != rows || t.cols() != cols) {
      raise(ErrorCode::incompatible_checkpoint,
            "tensor '" + name + "' shape mismatch");
    }
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) {
      raise(ErrorCode::incompatible_checkpoint,
            "truncated tensor '" + name + "'");
    }
  }
  return data;
}

}  // namespace hgda
