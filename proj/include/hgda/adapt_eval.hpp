#pragma once

#include <cstdint>
#include <vector>

#include "hgda/meta.hpp"

namespace hgda {

struct AdaptationConfig {
  std::size_t target_size = 10;  // |T'|
  std::size_t repeats = 20;
  double adapt_lr = 0.0;          // 0 means scaled_lr(base_lr, |T'|, base_batch)
  std::size_t adapt_steps = 100;  // passes over T'
  double base_lr = 1e-2;
  std::size_t base_batch = 32;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double grad_clip = 5.0;
  double dropout = 0.2;
  double early_stop_nll = 1e-3;

  double resolved_lr(std::size_t episode_size) const {
    return adapt_lr > 0.0 ? adapt_lr
                          : scaled_lr(base_lr, episode_size, base_batch);
  }
};

// Target-phase model: shared encoder plus a domain-specific decoder. The
// domain classifier head is dropped — the target domain is unseen, so a
// one-class domain loss carries no signal.
struct AdaptedModel {
  EncoderParams theta;
  CrfParams phi;
  TagVocab tags;
};

// Fresh decoder for the target tag set, encoder copied from training, then
// joint supervised fine-tuning on T'. steps_out, when given, receives the
// number of update steps actually applied (early stop can cut the budget).
AdaptedModel adapt(const ModelParams& trained, const EmbeddingTable& table,
                   const std::vector<Sentence>& episode,
                   const TagVocab& target_tags, const AdaptationConfig& cfg,
                   uint64_t seed, std::size_t* steps_out = nullptr);

// Mean training nll of the episode under the adapted model, dropout off.
double training_nll(const AdaptedModel& model, const EmbeddingTable& table,
                    const std::vector<Sentence>& episode);

struct EvalMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SpanCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

EvalMetrics metrics_from_counts(const SpanCounts& counts);

// Entity-level micro metrics: spans matched exactly on (start, end, type),
// decoding constrained to valid IOB2.
EvalMetrics evaluate(const AdaptedModel& model, const EmbeddingTable& table,
                     const Corpus& test);

std::vector<std::string> predict_tags(const AdaptedModel& model,
                                      const EmbeddingTable& table,
                                      const Sentence& sentence);

struct RepeatResult {
  EvalMetrics metrics;
  std::vector<std::size_t> episode_indices;
  double final_train_nll = 0.0;
  std::size_t steps_run = 0;
};

struct EvalReport {
  std::size_t target_size = 0;
  std::size_t repeats = 0;
  uint64_t seed = 0;
  std::vector<RepeatResult> per_repeat;
  EvalMetrics mean;
};

// Table-3-style protocol: `repeats` independent episodes of `target_size`
// sentences, each adapted and scored on the fixed test split. Episodes are
// drawn from the train split only; a leakage guard asserts T' and the test
// split stay disjoint on every repeat.
EvalReport run_protocol(const ModelParams& trained, const EmbeddingTable& table,
                        const Corpus& target_train, const Corpus& target_test,
                        const AdaptationConfig& cfg, uint64_t seed,
                        std::size_t workers = 1);

}  // namespace hgda
