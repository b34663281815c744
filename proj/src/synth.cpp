#include "hgda/synth.hpp"

#include <algorithm>

#include "hgda/rng.hpp"

namespace hgda {

namespace {

constexpr uint64_t kSynthStream = 0x5e17;

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  while (s.size() < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_domains < 2) {
    raise(ErrorCode::invalid_config, "need at least 2 domains");
  }
  if (densities.size() != num_domains) {
    raise(ErrorCode::invalid_config,
          "densities length must equal the domain count");
  }
  for (double d : densities) {
    if (d < 0.0 || d > 1.0) {
      raise(ErrorCode::invalid_config, "densities must lie in [0, 1]");
    }
  }
  if (min_len < 3 || max_len < min_len) {
    raise(ErrorCode::invalid_config, "need 3 <= min_len <= max_len");
  }
  if (context_vocab == 0 || entity_vocab == 0 || trigger_vocab == 0) {
    raise(ErrorCode::invalid_config, "vocabulary sizes must be positive");
  }
}

std::string synth_domain_name(std::size_t index, std::size_t num_domains) {
  if (index + 1 == num_domains) return "target";
  if (index < 26) return std::string("src") + static_cast<char>('A' + index);
  return "src" + std::to_string(index);
}

std::string synth_entity_type(std::size_t index, std::size_t num_domains) {
  if (index + 1 == num_domains) return "TypeT";
  if (index < 26) return std::string("Type") + static_cast<char>('A' + index);
  return "Type" + std::to_string(index);
}

SynthResult generate_synthetic(const SynthConfig& config) {
  config.validate();

  SynthResult result;
  for (std::size_t d = 0; d < config.num_domains; ++d) {
    result.registry.domains.push_back(
        synth_domain_name(d, config.num_domains));
  }
  result.registry.target_domain = result.registry.domains.back();

  const Split splits[] = {Split::train, Split::dev, Split::test};
  const std::size_t counts[] = {config.train_per_domain,
                                config.dev_per_domain,
                                config.test_per_domain};

  for (std::size_t d = 0; d < config.num_domains; ++d) {
    const std::string type = synth_entity_type(d, config.num_domains);
    const double density = config.densities[d];
    const bool is_target = d + 1 == config.num_domains;
    const std::size_t lexicon =
        is_target && config.target_entity_vocab > 0 ? config.target_entity_vocab
                                                    : config.entity_vocab;
    for (std::size_t s = 0; s < 3; ++s) {
      if (counts[s] == 0) continue;
      SplitRng rng = SplitRng(config.seed, kSynthStream).split(d).split(s);
      Corpus corpus;
      corpus.name = result.registry.domains[d] + "_" + to_string(splits[s]);
      corpus.domain_id = static_cast<int>(d);
      corpus.split = splits[s];
      std::size_t rare_counter = 0;

      for (std::size_t n = 0; n < counts[s]; ++n) {
        const std::size_t length =
            config.min_len +
            static_cast<std::size_t>(
                rng.next_below(config.max_len - config.min_len + 1));
        Sentence sentence;
        sentence.domain_id = static_cast<int>(d);
        sentence.tokens.resize(length);
        sentence.tags.assign(length, "O");
        for (std::size_t t = 0; t < length; ++t) {
          if (rng.next_double() < config.rare_token_rate) {
            sentence.tokens[t] = "rare_" + corpus.name + "_" +
                                 std::to_string(rare_counter++);
          } else {
            sentence.tokens[t] =
                "c" + padded(rng.next_below(config.context_vocab), 2);
          }
        }

        if (rng.next_double() < density) {
          const std::size_t span_len =
              1 + (rng.next_double() < config.multi_token_entity_rate ? 1 : 0);
          if (length >= span_len + 1) {
            // Slot 0 stays free so a trigger can precede the span.
            const std::size_t pos =
                1 + static_cast<std::size_t>(rng.next_below(length - span_len));
            for (std::size_t j = 0; j < span_len; ++j) {
              sentence.tokens[pos + j] =
                  result.registry.domains[d] + "_e" +
                  padded(rng.next_below(lexicon), 2);
              sentence.tags[pos + j] = (j == 0 ? "B-" : "I-") + type;
            }
            if (rng.next_double() < config.trigger_fidelity) {
              sentence.tokens[pos - 1] =
                  "trg" + std::to_string(rng.next_below(config.trigger_vocab));
            }
          }
        }

        if (rng.next_double() < config.false_trigger_rate) {
          const std::size_t q =
              static_cast<std::size_t>(rng.next_below(length));
          const bool before_entity = q + 1 < length && sentence.tags[q + 1] != "O";
          if (sentence.tags[q] == "O" && !before_entity) {
            sentence.tokens[q] =
                "trg" + std::to_string(rng.next_below(config.trigger_vocab));
          }
        }

        if (sentence.has_entity()) corpus.entity_types.insert(type);
        corpus.sentences.push_back(std::move(sentence));
      }
      result.corpora.push_back(std::move(corpus));
    }
  }
  return result;
}

}  // namespace hgda
