#include "hgda/manifest.hpp"

#include <fstream>

namespace hgda {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::invalid_config,
          "'" + path.string() + "': " + std::string(e.what()));
  }
}

UnkPolicy unk_policy_from_string(const std::string& name) {
  if (name == "zeros") return UnkPolicy::zeros;
  if (name == "random_normal") return UnkPolicy::random_normal;
  raise(ErrorCode::invalid_config, "unknown unk policy '" + name + "'");
}

}  // namespace

DataManifest parse_manifest(const nlohmann::json& j,
                            const std::filesystem::path& base_dir) {
  DataManifest manifest;
  manifest.base_dir = base_dir;
  try {
    if (j.contains("domains")) {
      manifest.domains = j.at("domains").get<std::vector<std::string>>();
    }
    if (j.contains("target_domain") && !j.at("target_domain").is_null()) {
      manifest.target_domain = j.at("target_domain").get<std::string>();
    }
    if (j.contains("embeddings") && !j.at("embeddings").is_null()) {
      const auto& e = j.at("embeddings");
      EmbeddingSpec spec;
      spec.path = e.value("path", "");
      spec.dim = e.value("dim", 0);
      if (!spec.path.empty() && spec.dim == 0) {
        raise(ErrorCode::invalid_config,
              "embeddings entry with a path must declare dim");
      }
      spec.unk = unk_policy_from_string(e.value("unk", "zeros"));
      spec.sigma = e.value("sigma", 0.0);
      spec.unk_seed = e.value("unk_seed", 0);
      manifest.embeddings = spec;
    }
    for (const auto& c : j.value("corpora", nlohmann::json::array())) {
      CorpusSpec spec;
      spec.path = c.at("path").get<std::string>();
      spec.domain = c.at("domain").get<std::string>();
      spec.split = split_from_string(c.value("split", "train"));
      spec.name = c.value("name", spec.path);
      spec.entity_type = c.value("entity_type", "");
      if (c.contains("keep_types")) {
        for (const auto& t : c.at("keep_types")) {
          spec.keep_types.insert(t.get<std::string>());
        }
      }
      spec.repair = c.value("repair", true);
      manifest.corpora.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::invalid_config,
          std::string("manifest field error: ") + e.what());
  }
  return manifest;
}

DataManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_json_file(path), path.parent_path());
}

nlohmann::json manifest_to_json(const DataManifest& manifest) {
  nlohmann::json j;
  if (!manifest.domains.empty()) j["domains"] = manifest.domains;
  if (manifest.target_domain) j["target_domain"] = *manifest.target_domain;
  if (manifest.embeddings) {
    j["embeddings"] = {
        {"unk",
         manifest.embeddings->unk == UnkPolicy::zeros ? "zeros" : "random_normal"},
        {"sigma", manifest.embeddings->sigma},
        {"unk_seed", manifest.embeddings->unk_seed},
    };
    if (!manifest.embeddings->path.empty()) {
      j["embeddings"]["path"] = manifest.embeddings->path;
      j["embeddings"]["dim"] = manifest.embeddings->dim;
    }
  }
  j["corpora"] = nlohmann::json::array();
  for (const auto& c : manifest.corpora) {
    nlohmann::json entry = {
        {"path", c.path},       {"name", c.name},
        {"domain", c.domain},   {"split", to_string(c.split)},
        {"repair", c.repair},
    };
    if (!c.entity_type.empty()) entry["entity_type"] = c.entity_type;
    if (!c.keep_types.empty()) {
      entry["keep_types"] =
          std::vector<std::string>(c.keep_types.begin(), c.keep_types.end());
    }
    j["corpora"].push_back(std::move(entry));
  }
  return j;
}

LoadedData load_data(const DataManifest& manifest, std::size_t fallback_dim) {
  if (manifest.corpora.empty()) {
    raise(ErrorCode::empty_manifest, "manifest lists no corpora");
  }

  LoadedData data;
  for (const auto& name : manifest.domains) {
    if (data.registry.index_of(name) >= 0) {
      raise(ErrorCode::invalid_config, "duplicate domain '" + name + "'");
    }
    data.registry.domains.push_back(name);
  }
  for (const auto& spec : manifest.corpora) {
    if (data.registry.index_of(spec.domain) < 0) {
      data.registry.domains.push_back(spec.domain);
    }
  }
  if (manifest.target_domain) {
    if (data.registry.index_of(*manifest.target_domain) < 0) {
      raise(ErrorCode::invalid_config,
            "target domain '" + *manifest.target_domain +
                "' has no corpora in the manifest");
    }
    data.registry.target_domain = manifest.target_domain;
  }

  for (const auto& spec : manifest.corpora) {
    const auto path = manifest.base_dir / spec.path;
    std::ifstream in(path);
    if (!in) {
      raise(ErrorCode::io_error, "cannot open corpus '" + path.string() + "'");
    }
    Corpus corpus = parse_conll(in, data.registry.index_of(spec.domain),
                                spec.repair);
    corpus.name = spec.name;
    corpus.split = spec.split;
    if (!spec.keep_types.empty()) {
      filter_entity_types(corpus, spec.keep_types);
    }
    data.corpora.push_back(std::move(corpus));
  }

  if (manifest.embeddings && !manifest.embeddings->path.empty()) {
    const auto path = manifest.base_dir / manifest.embeddings->path;
    std::ifstream in(path);
    if (!in) {
      raise(ErrorCode::io_error,
            "cannot open embeddings '" + path.string() + "'");
    }
    data.table = load_embeddings(in, manifest.embeddings->dim,
                                 manifest.embeddings->unk,
                                 manifest.embeddings->sigma,
                                 manifest.embeddings->unk_seed);
    data.has_table = true;
  } else if (manifest.embeddings) {
    // policy-only entry: no vectors, unknown-token handling as declared
    data.table = EmbeddingTable(fallback_dim, manifest.embeddings->unk,
                                manifest.embeddings->sigma,
                                manifest.embeddings->unk_seed);
    data.has_table = false;
  } else {
    data.table = EmbeddingTable(fallback_dim, UnkPolicy::zeros);
    data.has_table = false;
  }
  return data;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig config;
  try {
    if (j.contains("model")) {
      const auto& m = j.at("model");
      config.model.emb_dim = m.value("emb_dim", config.model.emb_dim);
      config.model.hidden = m.value("hidden", config.model.hidden);
      config.model.char_features =
          m.value("char_features", config.model.char_features);
      config.model.char_dim = m.value("char_dim", config.model.char_dim);
      config.model.char_lstm_out =
          m.value("char_lstm_out", config.model.char_lstm_out);
      config.model.char_cnn_out =
          m.value("char_cnn_out", config.model.char_cnn_out);
      config.model.char_kernel =
          m.value("char_kernel", config.model.char_kernel);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& c = config.train;
      c.base_lr = t.value("base_lr", c.base_lr);
      c.base_batch = t.value("base_batch", c.base_batch);
      c.alpha = t.value("alpha", c.alpha);
      c.beta = t.value("beta", c.beta);
      c.lambda = t.value("lambda", c.lambda);
      c.k = t.value("k", c.k);
      c.task_batch = t.value("task_batch", c.task_batch);
      c.adaptation_steps = t.value("adaptation_steps", c.adaptation_steps);
      c.momentum = t.value("momentum", c.momentum);
      c.weight_decay = t.value("weight_decay", c.weight_decay);
      c.grad_clip = t.value("grad_clip", c.grad_clip);
      c.dropout = t.value("dropout", c.dropout);
      c.max_outer_iters = t.value("max_outer_iters", c.max_outer_iters);
      c.patience = t.value("patience", c.patience);
      c.dev_episode_count = t.value("dev_episodes", c.dev_episode_count);
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      config.sampler.mode =
          sample_mode_from_string(s.value("mode", "uniform"));
      if (s.contains("domain_weights")) {
        config.sampler.domain_weights =
            s.at("domain_weights").get<std::vector<double>>();
      }
    }
    if (j.contains("adapt")) {
      const auto& a = j.at("adapt");
      auto& c = config.adapt;
      c.repeats = a.value("repeats", c.repeats);
      c.adapt_lr = a.value("adapt_lr", c.adapt_lr);
      c.adapt_steps = a.value("adapt_steps", c.adapt_steps);
      c.base_lr = a.value("base_lr", config.train.base_lr);
      c.base_batch = a.value("base_batch", config.train.base_batch);
      c.momentum = a.value("momentum", c.momentum);
      c.weight_decay = a.value("weight_decay", c.weight_decay);
      c.grad_clip = a.value("grad_clip", c.grad_clip);
      c.dropout = a.value("dropout", c.dropout);
      c.early_stop_nll = a.value("early_stop_nll", c.early_stop_nll);
      if (a.contains("sizes")) {
        config.sizes = a.at("sizes").get<std::vector<std::size_t>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::invalid_config,
          std::string("config field error: ") + e.what());
  }
  config.sampler.k = config.train.k;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path));
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["model"] = {
      {"emb_dim", config.model.emb_dim},
      {"hidden", config.model.hidden},
      {"char_features", config.model.char_features},
      {"char_dim", config.model.char_dim},
      {"char_lstm_out", config.model.char_lstm_out},
      {"char_cnn_out", config.model.char_cnn_out},
      {"char_kernel", config.model.char_kernel},
  };
  j["train"] = {
      {"base_lr", config.train.base_lr},
      {"base_batch", config.train.base_batch},
      {"alpha", config.train.alpha},
      {"beta", config.train.beta},
      {"lambda", config.train.lambda},
      {"k", config.train.k},
      {"task_batch", config.train.task_batch},
      {"adaptation_steps", config.train.adaptation_steps},
      {"momentum", config.train.momentum},
      {"weight_decay", config.train.weight_decay},
      {"grad_clip", config.train.grad_clip},
      {"dropout", config.train.dropout},
      {"max_outer_iters", config.train.max_outer_iters},
      {"patience", config.train.patience},
      {"dev_episodes", config.train.dev_episode_count},
      {"weight_mode",
       config.train.weight_mode == WeightMode::hardness ? "hardness" : "uniform"},
  };
  j["sampler"] = {
      {"mode", to_string(config.sampler.mode)},
  };
  if (!config.sampler.domain_weights.empty()) {
    j["sampler"]["domain_weights"] = config.sampler.domain_weights;
  }
  j["adapt"] = {
      {"repeats", config.adapt.repeats},
      {"adapt_lr", config.adapt.adapt_lr},
      {"adapt_steps", config.adapt.adapt_steps},
      {"base_lr", config.adapt.base_lr},
      {"base_batch", config.adapt.base_batch},
      {"momentum", config.adapt.momentum},
      {"weight_decay", config.adapt.weight_decay},
      {"grad_clip", config.adapt.grad_clip},
      {"dropout", config.adapt.dropout},
      {"early_stop_nll", config.adapt.early_stop_nll},
      {"sizes", config.sizes},
  };
  return j;
}

}  // namespace hgda
