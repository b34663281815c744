#pragma once

#include <cstdint>
#include <vector>

#include "hgda/corpus.hpp"

namespace hgda {

// Multi-domain synthetic corpus generator. Domains share a context and
// trigger vocabulary but own disjoint entity lexicons, so entity surface
// forms never transfer across domains while the contextual trigger pattern
// does. Entity density is controllable per domain; the last domain is the
// registry's target.
struct SynthConfig {
  std::size_t num_domains = 4;
  std::vector<double> densities = {0.9, 0.4, 0.05, 0.9};
  std::size_t train_per_domain = 300;
  std::size_t dev_per_domain = 60;
  std::size_t test_per_domain = 60;
  std::size_t min_len = 8;
  std::size_t max_len = 14;
  std::size_t context_vocab = 150;
  std::size_t entity_vocab = 60;
  // The target lexicon is much larger than the source ones, so a few-shot
  // episode cannot cover the test mentions and adaptation has to lean on
  // transferred context features.
  std::size_t target_entity_vocab = 600;  // 0: same as entity_vocab
  std::size_t trigger_vocab = 25;
  double trigger_fidelity = 0.85;     // P(entity is preceded by a trigger)
  double false_trigger_rate = 0.10;   // P(a trigger appears with no entity)
  double rare_token_rate = 0.03;      // singleton tokens, unseen at test time
  double multi_token_entity_rate = 0.4;
  uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  DomainRegistry registry;
  std::vector<Corpus> corpora;  // train, dev, test per domain
};

SynthResult generate_synthetic(const SynthConfig& config);

std::string synth_domain_name(std::size_t index, std::size_t num_domains);
std::string synth_entity_type(std::size_t index, std::size_t num_domains);

}  // namespace hgda
