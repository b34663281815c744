// Command-line driver: corpus statistics, synthetic corpus generation,
// meta-training, few-shot adaptation/evaluation, and episode dumps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "hgda/adapt_eval.hpp"
#include "hgda/checkpoint.hpp"
#include "hgda/manifest.hpp"
#include "hgda/meta.hpp"
#include "hgda/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  uint64_t seed = 0;
  std::size_t workers = 1;
  std::string config_path;
};

hgda::RunConfig resolve_config(const CommonOptions& common) {
  if (common.config_path.empty()) return hgda::RunConfig{};
  return hgda::load_run_config(common.config_path);
}

uint64_t config_hash_of(const hgda::RunConfig& config, const std::string& mode) {
  json j = hgda::run_config_to_json(config);
  j["mode"] = mode;
  return hgda::fnv1a_hash(j.dump());
}

json header_record(uint64_t seed, uint64_t config_hash) {
  return json{{"seed", seed},
              {"config_hash", config_hash},
              {"version", hgda::kVersionString}};
}

std::string csv_double(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

// Source-domain material for training: pools, vocabulary, tag set, and the
// classifier head order.
struct TrainingSetup {
  hgda::TaskPool train_pool;
  hgda::TaskPool dev_pool;
  hgda::Vocab vocab;
  hgda::CharVocab char_vocab;
  hgda::TagVocab tags;
  std::vector<std::string> domain_names;
};

TrainingSetup build_training_setup(const hgda::LoadedData& data) {
  TrainingSetup setup;
  setup.train_pool =
      hgda::build_task_pool(data.corpora, data.registry, hgda::Split::train);
  setup.dev_pool =
      hgda::build_task_pool(data.corpora, data.registry, hgda::Split::dev);
  if (setup.train_pool.domains.size() < 2) {
    hgda::raise(hgda::ErrorCode::invalid_config,
                "meta-training needs at least 2 source domains with train data");
  }
  const int target = data.registry.target_index();
  std::vector<const hgda::Corpus*> source;
  std::set<std::string> types;
  for (const auto& corpus : data.corpora) {
    if (corpus.domain_id == target) continue;
    if (corpus.split == hgda::Split::test) continue;
    source.push_back(&corpus);
    types.insert(corpus.entity_types.begin(), corpus.entity_types.end());
  }
  setup.vocab = hgda::build_vocab(source);
  setup.char_vocab = hgda::CharVocab::from_corpora(source);
  setup.tags = hgda::TagVocab::for_entity_types(types);
  for (const auto& domain : setup.train_pool.domains) {
    setup.domain_names.push_back(domain.name);
  }
  return setup;
}

json record_to_json(const hgda::IterationRecord& record) {
  return json{{"iter", record.iteration},
              {"lr", record.lr},
              {"domains", record.task_domains},
              {"lab", record.task_lab},
              {"cls", record.task_cls},
              {"gamma_theta", record.gammas.gamma_theta},
              {"gamma_phi", record.gammas.gamma_phi},
              {"gamma_omega", record.gammas.gamma_omega},
              {"grad_norm", record.grad_norm},
              {"clipped_grad_norm", record.clipped_grad_norm},
              {"dev_lab", record.dev_lab},
              {"best_dev_lab", record.best_dev_lab},
              {"patience_left", record.patience_left}};
}

int cmd_stats(const std::string& manifest_path, const std::string& csv_path) {
  const hgda::DataManifest manifest = hgda::load_manifest(manifest_path);
  const hgda::LoadedData data = hgda::load_data(manifest, 1);

  struct Row {
    std::string name, domain, split, types;
    hgda::CorpusStats stats;
  };
  std::vector<Row> rows;
  for (const auto& corpus : data.corpora) {
    Row row;
    row.name = corpus.name;
    row.domain = data.registry.domains[corpus.domain_id];
    row.split = hgda::to_string(corpus.split);
    for (const auto& type : corpus.entity_types) {
      if (!row.types.empty()) row.types += "|";
      row.types += type;
    }
    row.stats = hgda::corpus_stats(corpus);
    rows.push_back(std::move(row));
  }

  std::size_t name_w = 6;
  std::size_t domain_w = 6;
  for (const auto& row : rows) {
    name_w = std::max(name_w, row.name.size());
    domain_w = std::max(domain_w, row.domain.size());
  }
  std::cout << std::left << std::setw(static_cast<int>(name_w) + 2) << "corpus"
            << std::setw(static_cast<int>(domain_w) + 2) << "domain"
            << std::setw(7) << "split" << std::right << std::setw(10)
            << "sents" << std::setw(14) << "uniq_tokens" << std::setw(12)
            << "%with_NEs"
            << "  types\n";
  for (const auto& row : rows) {
    std::cout << std::left << std::setw(static_cast<int>(name_w) + 2)
              << row.name << std::setw(static_cast<int>(domain_w) + 2)
              << row.domain << std::setw(7) << row.split << std::right
              << std::setw(10) << row.stats.num_sentences << std::setw(14)
              << row.stats.num_unique_tokens << std::setw(12) << std::fixed
              << std::setprecision(1)
              << 100.0 * row.stats.fraction_with_entities << "  " << row.types
              << "\n";
    std::cout.unsetf(std::ios::fixed);
    std::cout << std::setprecision(6);
  }

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) {
      hgda::raise(hgda::ErrorCode::io_error, "cannot write '" + csv_path + "'");
    }
    csv << "corpus,domain,split,num_sentences,num_unique_tokens,"
           "fraction_with_entities,entity_types\n";
    for (const auto& row : rows) {
      csv << row.name << ',' << row.domain << ',' << row.split << ','
          << row.stats.num_sentences << ',' << row.stats.num_unique_tokens
          << ',' << csv_double(row.stats.fraction_with_entities) << ','
          << row.types << '\n';
    }
  }
  return 0;
}

int cmd_synth(const hgda::SynthConfig& config, const std::string& out_dir) {
  const hgda::SynthResult result = hgda::generate_synthetic(config);
  fs::create_directories(out_dir);

  hgda::DataManifest manifest;
  manifest.base_dir = out_dir;
  manifest.domains = result.registry.domains;
  manifest.target_domain = result.registry.target_domain;
  // Unknown tokens get token-keyed gaussian vectors, so unseen mentions are
  // not trivially separable from vocabulary words at initialization.
  hgda::EmbeddingSpec unk_spec;
  unk_spec.unk = hgda::UnkPolicy::random_normal;
  unk_spec.sigma = 0.25;
  unk_spec.unk_seed = 777;
  manifest.embeddings = unk_spec;
  for (const auto& corpus : result.corpora) {
    const std::string filename = corpus.name + ".conll";
    std::ofstream out(fs::path(out_dir) / filename);
    if (!out) {
      hgda::raise(hgda::ErrorCode::io_error, "cannot write '" + filename + "'");
    }
    hgda::serialize_conll(corpus, out);

    hgda::CorpusSpec spec;
    spec.path = filename;
    spec.name = result.registry.domains[corpus.domain_id];
    spec.domain = spec.name;
    spec.split = corpus.split;
    if (!corpus.entity_types.empty()) {
      spec.entity_type = *corpus.entity_types.begin();
    }
    manifest.corpora.push_back(std::move(spec));
  }

  json manifest_json = hgda::manifest_to_json(manifest);
  manifest_json["seed"] = config.seed;
  manifest_json["version"] = hgda::kVersionString;
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << manifest_json.dump(2) << "\n";
  std::cout << "wrote " << result.corpora.size() << " corpora and manifest.json to "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOptions& common, const std::string& manifest_path,
              const std::string& out_dir, const std::string& mode,
              const std::string& resume_path, hgda::RunConfig config) {
  if (mode == "hgda") {
    config.train.weight_mode = hgda::WeightMode::hardness;
    config.sampler.mode = hgda::SampleMode::uniform;
  } else if (mode == "hgda-nes") {
    config.train.weight_mode = hgda::WeightMode::hardness;
    config.sampler.mode = hgda::SampleMode::ne_constrained;
  } else if (mode == "uniform") {
    config.train.weight_mode = hgda::WeightMode::uniform;
    config.sampler.mode = hgda::SampleMode::uniform;
  } else {
    hgda::raise(hgda::ErrorCode::invalid_config, "unknown mode '" + mode + "'");
  }
  config.train.validate();

  const hgda::DataManifest manifest = hgda::load_manifest(manifest_path);
  const hgda::LoadedData data = hgda::load_data(manifest, config.model.emb_dim);
  TrainingSetup setup = build_training_setup(data);
  const uint64_t config_hash = config_hash_of(config, mode);

  hgda::ModelParams model;
  hgda::ResumeState resume;
  const hgda::ResumeState* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    hgda::CheckpointData ckpt = hgda::load_checkpoint(resume_path);
    if (ckpt.config_hash != config_hash || ckpt.seed != common.seed) {
      hgda::raise(hgda::ErrorCode::incompatible_checkpoint,
                  "resume checkpoint was written under a different seed/config");
    }
    model = std::move(ckpt.params);
    resume.optimizer = std::move(ckpt.optimizer);
    resume.start_iteration = ckpt.iteration;
    resume.best_dev_lab = ckpt.best_dev;
    resume.patience_left = ckpt.patience_left;
    resume_ptr = &resume;
  } else {
    model = hgda::init_model(config.model, setup.vocab, setup.char_vocab,
                             setup.tags, setup.domain_names, data.table,
                             common.seed);
  }

  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "train_log.jsonl",
                    resume_ptr != nullptr ? std::ios::app : std::ios::out);
  if (!log) {
    hgda::raise(hgda::ErrorCode::io_error, "cannot write train_log.jsonl");
  }
  if (resume_ptr == nullptr) {
    log << header_record(common.seed, config_hash).dump() << "\n";
  }

  hgda::TrainContext ctx;
  ctx.train_pool = &setup.train_pool;
  ctx.dev_pool = &setup.dev_pool;
  ctx.table = &data.table;
  ctx.workers = common.workers;

  const hgda::TrainResult result =
      hgda::train(ctx, std::move(model), config.train, config.sampler,
                  common.seed,
                  [&log](const hgda::IterationRecord& record) {
                    log << record_to_json(record).dump() << "\n";
                  },
                  resume_ptr);

  hgda::CheckpointData ckpt;
  ckpt.params = result.params;
  ckpt.encoder_config = config.model;
  ckpt.seed = common.seed;
  ckpt.config_hash = config_hash;
  ckpt.iteration = result.iterations;
  ckpt.best_dev = result.best_dev_lab;
  ckpt.patience_left =
      result.log.empty() ? config.train.patience : result.log.back().patience_left;
  ckpt.has_optimizer = true;
  ckpt.optimizer = result.optimizer;
  if (!ckpt.optimizer.initialized) {
    ckpt.optimizer.velocity = hgda::zeros_like(ckpt.params);
    ckpt.optimizer.initialized = true;
  }
  ckpt.extra = {{"mode", mode}, {"config", hgda::run_config_to_json(config)}};
  hgda::save_checkpoint(fs::path(out_dir) / "checkpoint.bin", ckpt);

  json run_manifest = header_record(common.seed, config_hash);
  run_manifest["mode"] = mode;
  run_manifest["config"] = hgda::run_config_to_json(config);
  run_manifest["manifest_path"] = manifest_path;
  run_manifest["iterations"] = result.iterations;
  run_manifest["early_stopped"] = result.early_stopped;
  run_manifest["best_dev_lab"] = result.best_dev_lab;
  run_manifest["domains"] = setup.domain_names;
  std::ofstream rm(fs::path(out_dir) / "run_manifest.json");
  rm << run_manifest.dump(2) << "\n";

  std::cout << "trained " << result.iterations << " outer iterations"
            << (result.early_stopped ? " (early stop)" : "") << ", best dev lab "
            << result.best_dev_lab << "\n";
  return 0;
}

int cmd_adapt_eval(const CommonOptions& common, const std::string& manifest_path,
                   const std::string& checkpoint_path,
                   const std::string& out_dir, hgda::RunConfig config,
                   const std::vector<std::size_t>& sizes_override) {
  hgda::CheckpointData ckpt = hgda::load_checkpoint(checkpoint_path);

  const hgda::DataManifest manifest = hgda::load_manifest(manifest_path);
  const hgda::LoadedData data =
      hgda::load_data(manifest, ckpt.encoder_config.emb_dim);
  if (data.has_table &&
      data.table.dimension() != ckpt.encoder_config.emb_dim) {
    hgda::raise(hgda::ErrorCode::incompatible_checkpoint,
                "embedding dimension differs from the checkpoint");
  }
  const int target = data.registry.target_index();
  if (target < 0) {
    hgda::raise(hgda::ErrorCode::invalid_config,
                "manifest does not declare a target domain");
  }

  // Group the target corpora by name; each named corpus owns its splits.
  std::map<std::string, std::pair<const hgda::Corpus*, const hgda::Corpus*>>
      targets;  // name -> (train, test)
  for (const auto& corpus : data.corpora) {
    if (corpus.domain_id != target) continue;
    auto& entry = targets[corpus.name];
    if (corpus.split == hgda::Split::train) entry.first = &corpus;
    if (corpus.split == hgda::Split::test) entry.second = &corpus;
  }
  if (targets.empty()) {
    hgda::raise(hgda::ErrorCode::invalid_config,
                "no corpora found for the target domain");
  }

  const std::vector<std::size_t> sizes =
      sizes_override.empty() ? config.sizes : sizes_override;
  const uint64_t config_hash = config_hash_of(config, "adapt-eval");
  fs::create_directories(out_dir);

  // size x corpus grid of mean F1 for the summary file
  std::map<std::size_t, std::map<std::string, hgda::EvalMetrics>> summary;

  for (const auto& [name, splits] : targets) {
    if (splits.first == nullptr || splits.second == nullptr) {
      hgda::raise(hgda::ErrorCode::invalid_config,
                  "target corpus '" + name + "' needs train and test splits");
    }
    for (const std::size_t size : sizes) {
      hgda::AdaptationConfig adapt_cfg = config.adapt;
      adapt_cfg.target_size = size;
      const hgda::EvalReport report =
          hgda::run_protocol(ckpt.params, data.table, *splits.first,
                             *splits.second, adapt_cfg, common.seed,
                             common.workers);

      json j = header_record(common.seed, config_hash);
      j["target_corpus"] = name;
      j["target_size"] = size;
      j["repeats"] = report.repeats;
      // identify the checkpoint by provenance, not by filesystem path
      j["checkpoint_seed"] = ckpt.seed;
      j["checkpoint_config_hash"] = ckpt.config_hash;
      j["mean"] = {{"precision", report.mean.precision},
                   {"recall", report.mean.recall},
                   {"f1", report.mean.f1}};
      j["per_repeat"] = json::array();
      for (std::size_t r = 0; r < report.per_repeat.size(); ++r) {
        const auto& repeat = report.per_repeat[r];
        j["per_repeat"].push_back(
            {{"repeat", r},
             {"precision", repeat.metrics.precision},
             {"recall", repeat.metrics.recall},
             {"f1", repeat.metrics.f1},
             {"final_train_nll", repeat.final_train_nll},
             {"episode_indices", repeat.episode_indices}});
      }
      const std::string stem = "report_" + name + "_size" + std::to_string(size);
      std::ofstream jf(fs::path(out_dir) / (stem + ".json"));
      jf << j.dump(2) << "\n";

      std::ofstream csv(fs::path(out_dir) / (stem + ".csv"));
      csv << "# seed=" << common.seed << " config_hash=" << config_hash
          << " version=" << hgda::kVersionString << "\n";
      csv << "repeat,precision,recall,f1\n";
      for (std::size_t r = 0; r < report.per_repeat.size(); ++r) {
        const auto& m = report.per_repeat[r].metrics;
        csv << r << ',' << csv_double(m.precision) << ','
            << csv_double(m.recall) << ',' << csv_double(m.f1) << "\n";
      }
      csv << "mean," << csv_double(report.mean.precision) << ','
          << csv_double(report.mean.recall) << ',' << csv_double(report.mean.f1)
          << "\n";
      summary[size][name] = report.mean;
      std::cout << name << " size " << size << ": mean F1 " << report.mean.f1
                << " over " << report.repeats << " repeats\n";
    }
  }

  // one row per episode size, one column per target corpus
  std::ofstream summary_csv(fs::path(out_dir) / "summary.csv");
  summary_csv << "# seed=" << common.seed << " config_hash=" << config_hash
              << " version=" << hgda::kVersionString << "\n";
  summary_csv << "size";
  for (const auto& [name, splits] : targets) summary_csv << ',' << name << "_f1";
  summary_csv << "\n";
  for (const auto& [size, row] : summary) {
    summary_csv << size;
    for (const auto& [name, splits] : targets) {
      summary_csv << ',' << csv_double(row.at(name).f1);
    }
    summary_csv << "\n";
  }
  return 0;
}

int cmd_sample_tasks(const CommonOptions& common,
                     const std::string& manifest_path, std::size_t m,
                     hgda::RunConfig config, const std::string& mode,
                     const std::string& out_path) {
  if (mode == "hgda-nes") {
    config.sampler.mode = hgda::SampleMode::ne_constrained;
  }
  const hgda::DataManifest manifest = hgda::load_manifest(manifest_path);
  const hgda::LoadedData data = hgda::load_data(manifest, config.model.emb_dim);
  const hgda::TaskPool pool =
      hgda::build_task_pool(data.corpora, data.registry, hgda::Split::train);

  const auto tasks = hgda::sample_batch(pool, config.sampler, m,
                                        hgda::SplitRng(common.seed));
  json j = header_record(common.seed, config_hash_of(config, mode));
  j["k"] = config.sampler.k;
  j["mode"] = hgda::to_string(config.sampler.mode);
  j["tasks"] = json::array();
  for (const auto& task : tasks) {
    json t;
    t["domain"] = data.registry.domains[task.domain_id];
    t["support_indices"] = task.support_indices;
    t["query_indices"] = task.query_indices;
    t["support"] = json::array();
    t["query"] = json::array();
    for (const auto& sentence : task.support) {
      t["support"].push_back({{"tokens", sentence.tokens}, {"tags", sentence.tags}});
    }
    for (const auto& sentence : task.query) {
      t["query"].push_back({{"tokens", sentence.tokens}, {"tags", sentence.tags}});
    }
    j["tasks"].push_back(std::move(t));
  }
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hardness-guided domain adaptation for few-shot sequence labeling"};
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option("--seed", common.seed, "root seed for all randomness");
  app.add_option("--workers", common.workers, "worker threads (never changes results)");
  app.add_option("--config", common.config_path, "JSON config file");

  // stats
  auto* stats = app.add_subcommand("stats", "per-corpus statistics table");
  std::string stats_manifest;
  std::string stats_csv;
  stats->add_option("--manifest", stats_manifest, "domain manifest")->required();
  stats->add_option("--csv", stats_csv, "also write a CSV to this path");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic multi-domain corpus");
  hgda::SynthConfig synth_cfg;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--domains", synth_cfg.num_domains, "domain count (last is target)");
  std::vector<double> densities;
  synth->add_option("--densities", densities, "per-domain entity densities");
  synth->add_option("--train", synth_cfg.train_per_domain, "train sentences per domain");
  synth->add_option("--dev", synth_cfg.dev_per_domain, "dev sentences per domain");
  synth->add_option("--test", synth_cfg.test_per_domain, "test sentences per domain");
  synth->add_option("--trigger-fidelity", synth_cfg.trigger_fidelity,
                    "P(entity preceded by trigger)");
  synth->add_option("--false-trigger-rate", synth_cfg.false_trigger_rate,
                    "P(trigger without entity)");
  synth->add_option("--rare-rate", synth_cfg.rare_token_rate, "singleton token rate");
  synth->add_option("--context-vocab", synth_cfg.context_vocab, "shared context words");
  synth->add_option("--trigger-vocab", synth_cfg.trigger_vocab, "shared trigger words");
  synth->add_option("--entity-vocab", synth_cfg.entity_vocab,
                    "entity surfaces per source domain");
  synth->add_option("--target-entity-vocab", synth_cfg.target_entity_vocab,
                    "entity surfaces in the target domain (0: same as sources)");
  synth->add_option("--min-len", synth_cfg.min_len, "minimum sentence length");
  synth->add_option("--max-len", synth_cfg.max_len, "maximum sentence length");

  // train
  auto* train = app.add_subcommand("train", "meta-train on the source domains");
  std::string train_manifest;
  std::string train_out;
  std::string train_mode = "hgda";
  std::string train_resume;
  std::size_t train_k = 0;
  std::size_t train_iters = 0;
  std::size_t train_batch = 0;
  train->add_option("--manifest", train_manifest, "domain manifest")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--mode", train_mode, "hgda | hgda-nes | uniform");
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--k", train_k, "shots per support/query set");
  train->add_option("--iters", train_iters, "max outer iterations");
  train->add_option("--task-batch", train_batch, "tasks per outer iteration (m)");
  std::size_t train_stop_after = 0;
  train->add_option("--stop-after", train_stop_after,
                    "interrupt after N iterations; resume later with --resume");

  // adapt-eval
  auto* adapt = app.add_subcommand("adapt-eval", "few-shot adaptation protocol");
  std::string adapt_manifest;
  std::string adapt_checkpoint;
  std::string adapt_out;
  std::vector<std::size_t> adapt_sizes;
  std::size_t adapt_repeats = 0;
  adapt->add_option("--manifest", adapt_manifest, "domain manifest")->required();
  adapt->add_option("--checkpoint", adapt_checkpoint, "trained checkpoint")->required();
  adapt->add_option("--out", adapt_out, "output directory")->required();
  adapt->add_option("--sizes", adapt_sizes, "episode sizes, e.g. 5 10 20 50");
  adapt->add_option("--repeats", adapt_repeats, "episodes per size");

  // sample-tasks
  auto* dump = app.add_subcommand("sample-tasks", "debug dump of sampled episodes");
  std::string dump_manifest;
  std::string dump_mode = "hgda";
  std::string dump_out;
  std::size_t dump_m = 4;
  std::size_t dump_k = 0;
  dump->add_option("--manifest", dump_manifest, "domain manifest")->required();
  dump->add_option("--m", dump_m, "number of tasks");
  dump->add_option("--k", dump_k, "shots per set");
  dump->add_option("--mode", dump_mode, "hgda | hgda-nes");
  dump->add_option("--out", dump_out, "write JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (stats->parsed()) {
      return cmd_stats(stats_manifest, stats_csv);
    }
    if (synth->parsed()) {
      if (!densities.empty()) synth_cfg.densities = densities;
      if (synth_cfg.densities.size() != synth_cfg.num_domains) {
        // default skew for non-default domain counts: high target, mixed sources
        synth_cfg.densities.assign(synth_cfg.num_domains, 0.5);
        synth_cfg.densities.front() = 0.9;
        synth_cfg.densities.back() = 0.9;
        if (synth_cfg.num_domains >= 3) {
          synth_cfg.densities[synth_cfg.num_domains - 2] = 0.05;
        }
        if (!densities.empty()) {
          hgda::raise(hgda::ErrorCode::invalid_config,
                      "--densities length must equal --domains");
        }
      }
      synth_cfg.seed = common.seed;
      return cmd_synth(synth_cfg, synth_out);
    }
    if (train->parsed()) {
      hgda::RunConfig config = resolve_config(common);
      if (train_k > 0) {
        config.train.k = train_k;
        config.sampler.k = train_k;
      }
      if (train_iters > 0) config.train.max_outer_iters = train_iters;
      if (train_batch > 0) config.train.task_batch = train_batch;
      config.train.stop_after_iterations = train_stop_after;
      return cmd_train(common, train_manifest, train_out, train_mode,
                       train_resume, std::move(config));
    }
    if (adapt->parsed()) {
      hgda::RunConfig config = resolve_config(common);
      if (adapt_repeats > 0) config.adapt.repeats = adapt_repeats;
      return cmd_adapt_eval(common, adapt_manifest, adapt_checkpoint, adapt_out,
                            std::move(config), adapt_sizes);
    }
    if (dump->parsed()) {
      hgda::RunConfig config = resolve_config(common);
      if (dump_k > 0) {
        config.train.k = dump_k;
        config.sampler.k = dump_k;
      }
      return cmd_sample_tasks(common, dump_manifest, dump_m, std::move(config),
                              dump_mode, dump_out);
    }
  } catch (const hgda::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
