#pragma once

// Shared fixtures for the meta-training and adaptation tests: a micro model
// over a toy vocabulary and a separable two-tag task.

#include <string>
#include <vector>

#include "hgda/meta.hpp"
#include "hgda/model.hpp"
#include "hgda/sampler.hpp"

namespace testutil {

inline hgda::Sentence tagged(std::vector<std::string> tokens,
                             std::vector<std::string> tags, int domain = 0) {
  hgda::Sentence s;
  s.tokens = std::move(tokens);
  s.tags = std::move(tags);
  s.domain_id = domain;
  return s;
}

// Tokens ending in "!" are entities of type X; everything else is O. The
// mapping is learnable from token identity alone.
inline hgda::Sentence separable(std::vector<std::string> tokens, int domain = 0) {
  std::vector<std::string> tags;
  for (const auto& token : tokens) {
    tags.push_back(token.back() == '!' ? "B-X" : "O");
  }
  return tagged(std::move(tokens), std::move(tags), domain);
}

inline hgda::ModelParams micro_model(uint64_t seed, std::size_t emb_dim = 4,
                                     std::size_t hidden = 4,
                                     std::size_t num_domains = 2) {
  hgda::EncoderConfig config;
  config.emb_dim = emb_dim;
  config.hidden = hidden;
  const hgda::Vocab vocab({"aa", "bb!", "cc", "dd!", "ee"});
  const hgda::TagVocab tags({"O", "B-X", "I-X"});
  std::vector<std::string> domains;
  for (std::size_t d = 0; d < num_domains; ++d) {
    domains.push_back("dom" + std::to_string(d));
  }
  const hgda::EmbeddingTable table(emb_dim, hgda::UnkPolicy::zeros);
  return hgda::init_model(config, vocab, hgda::CharVocab{}, tags, domains,
                          table, seed);
}

inline hgda::Task micro_task(int domain = 0) {
  hgda::Task task;
  task.domain_id = domain;
  task.support = {separable({"aa", "bb!", "cc"}, domain),
                  separable({"dd!", "ee"}, domain)};
  task.query = {separable({"cc", "dd!"}, domain),
                separable({"bb!", "aa", "ee"}, domain)};
  task.support_indices = {0, 1};
  task.query_indices = {2, 3};
  return task;
}

inline bool params_identical(const hgda::ModelParams& a,
                             const hgda::ModelParams& b) {
  bool same = true;
  std::vector<const hgda::Matrix*> ta;
  std::vector<const hgda::Matrix*> tb;
  hgda::visit_model_tensors(
      a, [&](const std::string&, const hgda::Matrix& t) { ta.push_back(&t); });
  hgda::visit_model_tensors(
      b, [&](const std::string&, const hgda::Matrix& t) { tb.push_back(&t); });
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    same = same && (*ta[i] == *tb[i]);
  }
  return same;
}

inline bool grads_identical(const hgda::ModelGrads& a, const hgda::ModelGrads& b) {
  bool same = true;
  std::vector<const hgda::Matrix*> ta;
  std::vector<const hgda::Matrix*> tb;
  hgda::visit_model_tensors(
      a, [&](const std::string&, const hgda::Matrix& t) { ta.push_back(&t); });
  hgda::visit_model_tensors(
      b, [&](const std::string&, const hgda::Matrix& t) { tb.push_back(&t); });
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    same = same && (*ta[i] == *tb[i]);
  }
  return same;
}

}  // namespace testutil
