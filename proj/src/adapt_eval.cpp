#include "hgda/adapt_eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hgda/parallel.hpp"

namespace hgda {

namespace {

constexpr uint64_t kAdaptStream = 0xada7;

ModelParams shell_model(EncoderParams theta, CrfParams phi, TagVocab tags) {
  ModelParams model;
  model.theta = std::move(theta);
  model.phi = std::move(phi);
  model.omega = ClassifierParams{};  // dropped for the target phase
  model.tags = std::move(tags);
  return model;
}

std::string sentence_key(const Sentence& sentence) {
  std::string key;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    key += sentence.tokens[i];
    key += '\x1f';
    key += sentence.tags[i];
    key += '\x1e';
  }
  return key;
}

}  // namespace

AdaptedModel adapt(const ModelParams& trained, const EmbeddingTable& table,
                   const std::vector<Sentence>& episode,
                   const TagVocab& target_tags, const AdaptationConfig& cfg,
                   uint64_t seed, std::size_t* steps_out) {
  if (episode.empty()) {
    raise(ErrorCode::insufficient_sentences, "empty adaptation episode");
  }
  SplitRng rng(seed, kAdaptStream);
  SplitRng init_rng = rng.split(0);
  SplitRng step_rng = rng.split(1);

  ModelParams work = shell_model(
      trained.theta, init_crf(trained.hidden(), target_tags.size(), init_rng),
      target_tags);

  const double lr = cfg.resolved_lr(episode.size());
  ModelGrads velocity = zeros_like(work);
  GradRequest want;
  want.theta = true;
  want.phi = true;

  std::size_t steps = 0;
  for (; steps < cfg.adapt_steps; ++steps) {
    ModelGrads grads = zeros_like(work);
    const TaskEval eval =
        task_forward_backward(work, table, episode, /*domain_index=*/-1,
                              /*lambda=*/0.0, cfg.dropout, step_rng, want, &grads);
    if (!std::isfinite(eval.lab)) {
      raise(ErrorCode::non_finite_loss,
            "adaptation step " + std::to_string(steps));
    }
    if (eval.lab < cfg.early_stop_nll) break;

    const double norm = std::sqrt(squared_norm(grads));
    if (!std::isfinite(norm)) {
      raise(ErrorCode::non_finite_gradient,
            "adaptation step " + std::to_string(steps));
    }
    if (norm > cfg.grad_clip) scale(grads, cfg.grad_clip / norm);

    std::vector<Matrix*> p_list;
    std::vector<Matrix*> g_list;
    std::vector<Matrix*> v_list;
    visit_model_tensors(work, [&](const std::string&, Matrix& t) {
      p_list.push_back(&t);
    });
    visit_model_tensors(grads, [&](const std::string&, Matrix& t) {
      g_list.push_back(&t);
    });
    visit_model_tensors(velocity, [&](const std::string&, Matrix& t) {
      v_list.push_back(&t);
    });
    for (std::size_t j = 0; j < p_list.size(); ++j) {
      Matrix& p = *p_list[j];
      Matrix& g = *g_list[j];
      Matrix& v = *v_list[j];
      for (std::size_t n = 0; n < p.size(); ++n) {
        const double d = g[n] + cfg.weight_decay * p[n];
        v[n] = cfg.momentum * v[n] + d;
        p[n] -= lr * v[n];
      }
    }
  }

  if (steps_out != nullptr) *steps_out = steps;

  AdaptedModel adapted;
  adapted.theta = std::move(work.theta);
  adapted.phi = std::move(work.phi);
  adapted.tags = std::move(work.tags);
  return adapted;
}

double training_nll(const AdaptedModel& model, const EmbeddingTable& table,
                    const std::vector<Sentence>& episode) {
  ModelParams shell = shell_model(model.theta, model.phi, model.tags);
  SplitRng unused(0);
  const TaskEval eval =
      task_forward_backward(shell, table, episode, /*domain_index=*/-1,
                            /*lambda=*/0.0, /*dropout=*/0.0, unused,
                            GradRequest{}, nullptr);
  return eval.lab;
}

EvalMetrics metrics_from_counts(const SpanCounts& counts) {
  EvalMetrics metrics;
  if (counts.predicted == 0 && counts.gold == 0) {
    metrics.precision = 1.0;
    metrics.recall = 1.0;
    metrics.f1 = 1.0;
    return metrics;
  }
  metrics.precision =
      counts.predicted == 0
          ? 0.0
          : static_cast<double>(counts.matched) / static_cast<double>(counts.predicted);
  metrics.recall =
      counts.gold == 0
          ? 0.0
          : static_cast<double>(counts.matched) / static_cast<double>(counts.gold);
  const double pr = metrics.precision + metrics.recall;
  metrics.f1 = pr > 0.0 ? 2.0 * metrics.precision * metrics.recall / pr : 0.0;
  return metrics;
}

std::vector<std::string> predict_tags(const AdaptedModel& model,
                                      const EmbeddingTable& table,
                                      const Sentence& sentence) {
  SplitRng unused(0);
  const Matrix features =
      encode(model.theta, sentence, table, /*dropout=*/0.0, unused, nullptr);
  const Matrix emissions = project_emissions(features, model.phi);
  const IobMask mask = make_iob_mask(model.tags);
  return model.tags.decode(viterbi(emissions, model.phi, &mask));
}

EvalMetrics evaluate(const AdaptedModel& model, const EmbeddingTable& table,
                     const Corpus& test) {
  SpanCounts counts;
  for (const auto& sentence : test.sentences) {
    for (const auto& tag : sentence.tags) {
      if (model.tags.index_of(tag) < 0) {
        raise(ErrorCode::tag_index_out_of_range,
              "test tag '" + tag + "' not covered by the model tag vocabulary");
      }
    }
    const auto predicted = extract_entities(predict_tags(model, table, sentence));
    const auto gold = extract_entities(sentence.tags);
    counts.predicted += predicted.size();
    counts.gold += gold.size();
    // Both lists are sorted by construction.
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < predicted.size() && j < gold.size()) {
      if (predicted[i] == gold[j]) {
        ++counts.matched;
        ++i;
        ++j;
      } else if (predicted[i] < gold[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return metrics_from_counts(counts);
}

EvalReport run_protocol(const ModelParams& trained, const EmbeddingTable& table,
                        const Corpus& target_train, const Corpus& target_test,
                        const AdaptationConfig& cfg, uint64_t seed,
                        std::size_t workers) {
  if (target_test.sentences.empty()) {
    raise(ErrorCode::empty_corpus, "target test split is empty");
  }
  if (cfg.repeats == 0) {
    raise(ErrorCode::invalid_config, "repeats must be >= 1");
  }

  std::set<std::string> types = target_train.entity_types;
  types.insert(target_test.entity_types.begin(), target_test.entity_types.end());
  const TagVocab target_tags = TagVocab::for_entity_types(types);

  std::unordered_set<std::string> test_keys;
  test_keys.reserve(target_test.sentences.size());
  for (const auto& sentence : target_test.sentences) {
    test_keys.insert(sentence_key(sentence));
  }

  EvalReport report;
  report.target_size = cfg.target_size;
  report.repeats = cfg.repeats;
  report.seed = seed;
  report.per_repeat.resize(cfg.repeats);

  parallel_for(cfg.repeats, workers, [&](std::size_t repeat) {
    const TargetEpisode episode =
        make_target_episode(target_train, cfg.target_size, repeat, seed);
    for (const auto& sentence : episode.sentences) {
      if (test_keys.count(sentence_key(sentence)) > 0) {
        raise(ErrorCode::invalid_config,
              "leakage: repeat " + std::to_string(repeat) +
                  " drew a sentence that appears in the test split");
      }
    }
    std::size_t steps_run = 0;
    const AdaptedModel adapted =
        adapt(trained, table, episode.sentences, target_tags, cfg,
              SplitRng(seed, kAdaptStream).split(repeat).key(), &steps_run);
    RepeatResult result;
    result.metrics = evaluate(adapted, table, target_test);
    result.episode_indices = episode.indices;
    result.final_train_nll = training_nll(adapted, table, episode.sentences);
    result.steps_run = steps_run;
    report.per_repeat[repeat] = std::move(result);
  });

  for (const auto& repeat : report.per_repeat) {
    report.mean.precision += repeat.metrics.precision;
    report.mean.recall += repeat.metrics.recall;
    report.mean.f1 += repeat.metrics.f1;
  }
  const double inv = 1.0 / static_cast<double>(cfg.repeats);
  report.mean.precision *= inv;
  report.mean.recall *= inv;
  report.mean.f1 *= inv;
  return report;
}

}  // namespace hgda
