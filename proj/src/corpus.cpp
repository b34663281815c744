#include "hgda/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "hgda/rng.hpp"

namespace hgda {

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "dev") return Split::dev;
  if (name == "test") return Split::test;
  raise(ErrorCode::invalid_config, "unknown split '" + name + "'");
}

bool Sentence::has_entity() const {
  return std::any_of(tags.begin(), tags.end(),
                     [](const std::string& t) { return t != "O"; });
}

int DomainRegistry::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (domains[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int DomainRegistry::target_index() const {
  return target_domain ? index_of(*target_domain) : -1;
}

bool is_valid_tag(const std::string& tag) {
  if (tag == "O") return true;
  if (tag.size() < 3) return false;
  if (tag[0] != 'B' && tag[0] != 'I') return false;
  return tag[1] == '-';
}

namespace {

std::string tag_type(const std::string& tag) { return tag.substr(2); }

bool continues_run(const std::string& prev, const std::string& cur) {
  // cur is I-<type>; legal after B-<type> or I-<type> of the same type.
  return prev != "O" && tag_type(prev) == tag_type(cur);
}

}  // namespace

void validate_iob2(std::vector<std::string>& tags, bool repair) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!is_valid_tag(tags[i])) {
      raise(ErrorCode::invalid_tag, "tag '" + tags[i] + "' fails BIO grammar");
    }
    if (tags[i][0] != 'I') continue;
    const bool ok = i > 0 && continues_run(tags[i - 1], tags[i]);
    if (ok) continue;
    if (!repair) {
      raise(ErrorCode::dangling_inside,
            "'" + tags[i] + "' at position " + std::to_string(i) +
                " has no preceding B-" + tag_type(tags[i]));
    }
    tags[i][0] = 'B';
  }
}

Corpus parse_conll(std::istream& stream, int domain_id, bool repair) {
  Corpus corpus;
  corpus.domain_id = domain_id;

  Sentence current;
  current.domain_id = domain_id;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    validate_iob2(current.tags, repair);
    for (const auto& tag : current.tags) {
      if (tag != "O") corpus.entity_types.insert(tag_type(tag));
    }
    corpus.sentences.push_back(std::move(current));
    current = Sentence{};
    current.domain_id = domain_id;
  };

  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool blank =
        line.find_first_not_of(" \t") == std::string::npos;
    if (blank) {
      flush();
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t start = line.find_first_not_of(" \t", pos);
      if (start == std::string::npos) break;
      std::size_t end = line.find_first_of(" \t", start);
      if (end == std::string::npos) end = line.size();
      fields.push_back(line.substr(start, end - start));
      pos = end;
    }
    if (fields.size() != 2) {
      raise(ErrorCode::malformed_line,
            "line " + std::to_string(line_no) + ": expected 2 columns, got " +
                std::to_string(fields.size()));
    }
    if (!is_valid_tag(fields[1])) {
      raise(ErrorCode::invalid_tag, "line " + std::to_string(line_no) +
                                        ": tag '" + fields[1] +
                                        "' fails BIO grammar");
    }
    current.tokens.push_back(std::move(fields[0]));
    current.tags.push_back(std::move(fields[1]));
  }
  flush();

  if (corpus.sentences.empty()) {
    raise(ErrorCode::empty_corpus, "stream contains no sentences");
  }
  return corpus;
}

void serialize_conll(const Corpus& corpus, std::ostream& out) {
  for (const auto& sentence : corpus.sentences) {
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      out << sentence.tokens[i] << ' ' << sentence.tags[i] << '\n';
    }
    out << '\n';
  }
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.sentences.empty()) {
    raise(ErrorCode::empty_corpus, "corpus '" + corpus.name + "' is empty");
  }
  CorpusStats stats;
  stats.num_sentences = corpus.sentences.size();
  std::unordered_set<std::string> tokens;
  std::size_t with_entities = 0;
  for (const auto& sentence : corpus.sentences) {
    tokens.insert(sentence.tokens.begin(), sentence.tokens.end());
    if (sentence.has_entity()) ++with_entities;
  }
  stats.num_unique_tokens = tokens.size();
  stats.fraction_with_entities =
      static_cast<double>(with_entities) / static_cast<double>(stats.num_sentences);
  return stats;
}

std::vector<EntitySpan> extract_entities(const std::vector<std::string>& tags) {
  {
    auto copy = tags;
    try {
      validate_iob2(copy, /*repair=*/false);
    } catch (const Error&) {
      raise(ErrorCode::invalid_tag_sequence, "tags are not valid IOB2");
    }
  }
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i][0] != 'B') continue;
    EntitySpan span;
    span.start = i;
    span.type = tag_type(tags[i]);
    std::size_t end = i + 1;
    while (end < tags.size() && tags[end][0] == 'I' &&
           tag_type(tags[end]) == span.type) {
      ++end;
    }
    span.end = end;
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<std::string> tags_from_entities(const std::vector<EntitySpan>& spans,
                                            std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const auto& span : spans) {
    if (span.end > length || span.start >= span.end) {
      raise(ErrorCode::invalid_tag_sequence, "span out of range");
    }
    tags[span.start] = "B-" + span.type;
    for (std::size_t i = span.start + 1; i < span.end; ++i) {
      tags[i] = "I-" + span.type;
    }
  }
  return tags;
}

void filter_entity_types(Corpus& corpus, const std::set<std::string>& keep) {
  for (auto& sentence : corpus.sentences) {
    for (auto& tag : sentence.tags) {
      if (tag != "O" && keep.count(tag_type(tag)) == 0) tag = "O";
    }
  }
  corpus.entity_types.clear();
  for (const auto& sentence : corpus.sentences) {
    for (const auto& tag : sentence.tags) {
      if (tag != "O") corpus.entity_types.insert(tag_type(tag));
    }
  }
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
  if (vec.size() != dimension_) {
    raise(ErrorCode::dimension_mismatch,
          "embedding for '" + token + "' has " + std::to_string(vec.size()) +
              " entries, expected " + std::to_string(dimension_));
  }
  vectors_.emplace(token, std::move(vec));
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
  auto it = vectors_.find(token);
  if (it != vectors_.end()) return &it->second;
  const std::string lower = ascii_lower(token);
  if (lower != token) {
    it = vectors_.find(lower);
    if (it != vectors_.end()) return &it->second;
  }
  return nullptr;
}

std::vector<double> EmbeddingTable::lookup(const std::string& token) const {
  if (const auto* vec = find(token)) return *vec;
  std::vector<double> out(dimension_, 0.0);
  if (policy_ == UnkPolicy::random_normal) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a over the token bytes
    for (unsigned char c : token) {
      h ^= c;
      h *= 1099511628211ull;
    }
    SplitRng rng(unk_seed_, h);
    for (double& v : out) v = sigma_ * rng.next_normal();
  }
  return out;
}

EmbeddingTable load_embeddings(std::istream& stream, std::size_t expected_dim,
                               UnkPolicy policy, double sigma,
                               uint64_t unk_seed) {
  EmbeddingTable table(expected_dim, policy, sigma, unk_seed);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t start = line.find_first_not_of(" \t", pos);
      if (start == std::string::npos) break;
      std::size_t end = line.find_first_of(" \t", start);
      if (end == std::string::npos) end = line.size();
      fields.push_back(line.substr(start, end - start));
      pos = end;
    }
    if (fields.size() != expected_dim + 1) {
      raise(ErrorCode::dimension_mismatch,
            "line " + std::to_string(line_no) + ": expected " +
                std::to_string(expected_dim) + " floats, got " +
                std::to_string(fields.size() - 1));
    }
    std::vector<double> vec(expected_dim);
    for (std::size_t i = 0; i < expected_dim; ++i) {
      const std::string& f = fields[i + 1];
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        raise(ErrorCode::unparsable_float,
              "line " + std::to_string(line_no) + ": '" + f + "'");
      }
      vec[i] = value;
    }
    if (!table.contains(fields[0])) {
      table.insert(fields[0], std::move(vec));
    }
  }
  return table;
}

}  // namespace hgda
