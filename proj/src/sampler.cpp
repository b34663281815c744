#include "hgda/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace hgda {

namespace {

constexpr uint64_t kEpisodeStream = 0xE915;

// Partial Fisher-Yates; result order is the draw order.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> items,
                                                  std::size_t k, SplitRng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.next_below(items.size() - i));
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return items;
}

}  // namespace

const char* to_string(SampleMode mode) {
  return mode == SampleMode::uniform ? "uniform" : "ne_constrained";
}

SampleMode sample_mode_from_string(const std::string& name) {
  if (name == "uniform") return SampleMode::uniform;
  if (name == "ne_constrained") return SampleMode::ne_constrained;
  raise(ErrorCode::invalid_config, "unknown sample mode '" + name + "'");
}

std::string Task::describe() const {
  std::ostringstream out;
  out << "domain_id=" << domain_id << " mode=" << to_string(mode)
      << " support=[";
  for (std::size_t i = 0; i < support_indices.size(); ++i) {
    if (i > 0) out << ',';
    out << support_indices[i];
  }
  out << "] query=[";
  for (std::size_t i = 0; i < query_indices.size(); ++i) {
    if (i > 0) out << ',';
    out << query_indices[i];
  }
  out << ']';
  return out.str();
}

TaskPool build_task_pool(const std::vector<Corpus>& corpora,
                         const DomainRegistry& registry, Split split) {
  const int target = registry.target_index();
  TaskPool pool;
  for (std::size_t d = 0; d < registry.domains.size(); ++d) {
    if (static_cast<int>(d) == target) continue;
    TaskPool::DomainPool domain;
    domain.domain_id = static_cast<int>(d);
    domain.name = registry.domains[d];
    for (const auto& corpus : corpora) {
      if (corpus.domain_id != static_cast<int>(d) || corpus.split != split) {
        continue;
      }
      domain.sentences.insert(domain.sentences.end(),
                              corpus.sentences.begin(),
                              corpus.sentences.end());
    }
    if (domain.sentences.empty()) continue;
    for (std::size_t i = 0; i < domain.sentences.size(); ++i) {
      if (domain.sentences[i].has_entity()) domain.entity_indices.push_back(i);
    }
    pool.domains.push_back(std::move(domain));
  }
  return pool;
}

Task sample_task(const TaskPool& pool, const SamplerConfig& cfg,
                 SplitRng& rng) {
  if (pool.empty()) {
    raise(ErrorCode::insufficient_sentences, "task pool has no domains");
  }
  if (cfg.k == 0) {
    raise(ErrorCode::invalid_config, "K must be >= 1");
  }

  // Pick the domain.
  std::size_t chosen = 0;
  if (cfg.domain_weights.empty()) {
    chosen = static_cast<std::size_t>(rng.next_below(pool.domains.size()));
  } else {
    if (cfg.domain_weights.size() != pool.domains.size()) {
      raise(ErrorCode::invalid_config,
            "domain_weights length does not match source domain count");
    }
    double total = 0.0;
    for (double w : cfg.domain_weights) {
      if (w < 0.0) raise(ErrorCode::invalid_config, "negative domain weight");
      total += w;
    }
    if (total <= 0.0) {
      raise(ErrorCode::invalid_config, "domain weights sum to zero");
    }
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (std::size_t d = 0; d < pool.domains.size(); ++d) {
      acc += cfg.domain_weights[d];
      if (u < acc) {
        chosen = d;
        break;
      }
      chosen = d;  // u == total rounding falls into the last bucket
    }
  }

  const auto& domain = pool.domains[chosen];
  const std::size_t n = domain.sentences.size();
  if (n < 2 * cfg.k) {
    raise(ErrorCode::insufficient_sentences,
          "domain '" + domain.name + "' holds " + std::to_string(n) +
              " sentences, need " + std::to_string(2 * cfg.k));
  }

  Task task;
  task.domain_id = domain.domain_id;
  task.mode = cfg.mode;

  if (cfg.mode == SampleMode::ne_constrained) {
    if (domain.entity_indices.size() < cfg.k) {
      raise(ErrorCode::no_entity_sentences,
            "domain '" + domain.name + "' holds only " +
                std::to_string(domain.entity_indices.size()) +
                " entity-bearing sentences, need " + std::to_string(cfg.k));
    }
    task.support_indices =
        draw_without_replacement(domain.entity_indices, cfg.k, rng);
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    task.support_indices = draw_without_replacement(std::move(all), cfg.k, rng);
  }

  std::vector<bool> taken(n, false);
  for (std::size_t idx : task.support_indices) taken[idx] = true;
  std::vector<std::size_t> remaining;
  remaining.reserve(n - cfg.k);
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) remaining.push_back(i);
  }
  task.query_indices = draw_without_replacement(std::move(remaining), cfg.k, rng);

  task.support.reserve(cfg.k);
  task.query.reserve(cfg.k);
  for (std::size_t idx : task.support_indices) {
    task.support.push_back(domain.sentences[idx]);
  }
  for (std::size_t idx : task.query_indices) {
    task.query.push_back(domain.sentences[idx]);
  }
  return task;
}

std::vector<Task> sample_batch(const TaskPool& pool, const SamplerConfig& cfg,
                               std::size_t m, const SplitRng& rng) {
  if (m == 0) {
    raise(ErrorCode::invalid_batch_size, "batch size must be >= 1");
  }
  std::vector<Task> tasks;
  tasks.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    SplitRng task_rng = rng.split(i);
    tasks.push_back(sample_task(pool, cfg, task_rng));
  }
  return tasks;
}

TargetEpisode make_target_episode(const Corpus& target_train, std::size_t size,
                                  std::size_t repeat_index, uint64_t seed) {
  const std::size_t n = target_train.sentences.size();
  if (n < size) {
    raise(ErrorCode::insufficient_sentences,
          "target train split holds " + std::to_string(n) +
              " sentences, need " + std::to_string(size));
  }
  SplitRng rng = SplitRng(seed, kEpisodeStream).split(repeat_index);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  TargetEpisode episode;
  episode.indices = draw_without_replacement(std::move(all), size, rng);
  episode.sentences.reserve(size);
  for (std::size_t idx : episode.indices) {
    episode.sentences.push_back(target_train.sentences[idx]);
  }
  return episode;
}

}  // namespace hgda
