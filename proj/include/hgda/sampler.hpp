#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgda/corpus.hpp"
#include "hgda/rng.hpp"

namespace hgda {

enum class SampleMode { uniform, ne_constrained };

const char* to_string(SampleMode mode);
SampleMode sample_mode_from_string(const std::string& name);

// One episodic K-shot task: disjoint support and query drawn from a single
// source domain.
struct Task {
  int domain_id = 0;  // registry index
  std::vector<Sentence> support;
  std::vector<Sentence> query;
  SampleMode mode = SampleMode::uniform;
  std::vector<std::size_t> support_indices;  // rows into the domain pool
  std::vector<std::size_t> query_indices;

  std::string describe() const;
};

struct SamplerConfig {
  std::size_t k = 5;
  SampleMode mode = SampleMode::uniform;
  std::vector<double> domain_weights;  // empty => uniform over source domains
  uint64_t seed = 0;
};

// Per-domain sentence pools over the source domains. Multiple corpora that
// share a domain are concatenated in corpus order.
struct TaskPool {
  struct DomainPool {
    int domain_id = 0;  // registry index
    std::string name;
    std::vector<Sentence> sentences;
    std::vector<std::size_t> entity_indices;  // rows with >= 1 entity
  };
  std::vector<DomainPool> domains;

  bool empty() const noexcept { return domains.empty(); }
};

// Pools for `split`, excluding the registry's target domain.
TaskPool build_task_pool(const std::vector<Corpus>& corpora,
                         const DomainRegistry& registry, Split split);

Task sample_task(const TaskPool& pool, const SamplerConfig& cfg, SplitRng& rng);

// Task i draws from rng.split(i), so concurrent construction reproduces the
// sequential batch exactly.
std::vector<Task> sample_batch(const TaskPool& pool, const SamplerConfig& cfg,
                               std::size_t m, const SplitRng& rng);

struct TargetEpisode {
  std::vector<Sentence> sentences;      // T'
  std::vector<std::size_t> indices;     // rows into the target train split
};

// T' drawn without replacement from the target train split, keyed by
// (seed, repeat_index). The held-out evaluation set is the corpus's test
// split and never varies across repeats.
TargetEpisode make_target_episode(const Corpus& target_train, std::size_t size,
                                  std::size_t repeat_index, uint64_t seed);

}  // namespace hgda
