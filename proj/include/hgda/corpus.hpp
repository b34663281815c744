#pragma once

#include <compare>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgda/errors.hpp"

namespace hgda {

enum class Split { train, dev, test };

const char* to_string(Split split);
Split split_from_string(const std::string& name);

// One pre-tokenized sentence with aligned IOB2 tags.
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  int domain_id = 0;

  bool has_entity() const;
  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::string name;
  int domain_id = 0;
  std::set<std::string> entity_types;
  std::vector<Sentence> sentences;
  Split split = Split::train;
};

struct DomainRegistry {
  std::vector<std::string> domains;
  std::optional<std::string> target_domain;

  int index_of(const std::string& name) const;  // -1 when absent
  int target_index() const;                     // -1 when unset
};

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string type;

  auto operator<=>(const EntitySpan&) const = default;
};

// "O" | "B-<type>" | "I-<type>" with a nonempty type.
bool is_valid_tag(const std::string& tag);

// Enforces strict IOB2. With repair=true the first tag of a bare I-<type>
// run is rewritten to B-<type>; with repair=false such runs raise
// dangling_inside.
void validate_iob2(std::vector<std::string>& tags, bool repair);

// Two-column "token tag" lines, blank-line sentence separator.
Corpus parse_conll(std::istream& stream, int domain_id, bool repair);

// Normalized form: single-space separator, one blank line after every
// sentence. parse_conll(serialize_conll(c)) reproduces c exactly.
void serialize_conll(const Corpus& corpus, std::ostream& out);

struct CorpusStats {
  std::size_t num_sentences = 0;
  std::size_t num_unique_tokens = 0;
  double fraction_with_entities = 0.0;
};

CorpusStats corpus_stats(const Corpus& corpus);

// Maximal B-then-I runs, sorted by start. Input must be valid IOB2.
std::vector<EntitySpan> extract_entities(const std::vector<std::string>& tags);

// Inverse of extract_entities for spans over a sentence of `length` tokens.
std::vector<std::string> tags_from_entities(const std::vector<EntitySpan>& spans,
                                            std::size_t length);

// Rewrites tags whose type is outside `keep` to "O". Whole spans share one
// type, so the result stays valid IOB2.
void filter_entity_types(Corpus& corpus, const std::set<std::string>& keep);

enum class UnkPolicy { zeros, random_normal };

// Pretrained token -> vector table. Lookup tries the exact token, then an
// ASCII-lowercased fallback, then the unknown-token policy.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dimension, UnkPolicy policy, double sigma = 0.0,
                 uint64_t unk_seed = 0)
      : dimension_(dimension), policy_(policy), sigma_(sigma),
        unk_seed_(unk_seed) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  UnkPolicy unk_policy() const noexcept { return policy_; }

  // Keeps the first occurrence of a duplicate token.
  void insert(const std::string& token, std::vector<double> vec);

  bool contains(const std::string& token) const {
    return vectors_.count(token) > 0;
  }

  // Never fails; unknown tokens resolve per the policy. The random_normal
  // policy derives its draw from a hash of the token, so lookup is pure.
  std::vector<double> lookup(const std::string& token) const;

  // nullptr when the token (or its lowercase form) is not stored.
  const std::vector<double>* find(const std::string& token) const;

 private:
  std::size_t dimension_ = 0;
  UnkPolicy policy_ = UnkPolicy::zeros;
  double sigma_ = 0.0;
  uint64_t unk_seed_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// One "token v1 .. v_dim" entry per line.
EmbeddingTable load_embeddings(std::istream& stream, std::size_t expected_dim,
                               UnkPolicy policy = UnkPolicy::zeros,
                               double sigma = 0.0, uint64_t unk_seed = 0);

std::string ascii_lower(const std::string& s);

}  // namespace hgda
