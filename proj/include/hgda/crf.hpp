#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgda/tensor.hpp"

namespace hgda {

// Ordered tag inventory. Order is serialization-sensitive: "O" first, then
// B-/I- pairs of each type in lexicographic type order.
class TagVocab {
 public:
  TagVocab() = default;
  explicit TagVocab(std::vector<std::string> tags);

  static TagVocab for_entity_types(const std::set<std::string>& types);

  std::size_t size() const noexcept { return tags_.size(); }
  const std::string& tag(std::size_t i) const { return tags_[i]; }
  const std::vector<std::string>& tags() const noexcept { return tags_; }

  int index_of(const std::string& tag) const;  // -1 when absent

  std::vector<int> encode(const std::vector<std::string>& tags) const;
  std::vector<std::string> decode(const std::vector<int>& indices) const;

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

struct CrfParams {
  Matrix emission_proj;  // H x T
  Matrix transition;     // T x T, transition.at(a, b) scores a -> b
  Matrix start_scores;   // 1 x T
  Matrix end_scores;     // 1 x T

  std::size_t num_tags() const noexcept { return transition.rows(); }
  std::size_t input_dim() const noexcept { return emission_proj.rows(); }
};

CrfParams init_crf(std::size_t input_dim, std::size_t num_tags,
                   class SplitRng& rng);
CrfParams zeros_like(const CrfParams& params);

// emissions = features x emission_proj  (L x T)
Matrix project_emissions(const Matrix& features, const CrfParams& params);

// d_features = d_emissions x proj^T; accumulates featuresᵀ x d_emissions
// into d_proj.
Matrix project_emissions_backward(const Matrix& features,
                                  const Matrix& d_emissions,
                                  const CrfParams& params, Matrix& d_proj);

// log sum over all tag paths of exp(path score); forward algorithm in
// log-space. Path score = start + sum emissions + sum transitions + end.
double log_partition(const Matrix& emissions, const CrfParams& params);

double gold_path_score(const Matrix& emissions,
                       const std::vector<int>& gold_tags,
                       const CrfParams& params);

struct NllCache {
  Matrix emissions;        // L x T
  std::vector<int> gold;
  Matrix alpha;            // forward log-messages, L x T
  double log_z = 0.0;
  bool valid = false;
};

// Sentence negative log-likelihood: log_partition - gold path score.
double nll(const Matrix& emissions, const std::vector<int>& gold_tags,
           const CrfParams& params, NllCache* cache = nullptr);

struct CrfBackward {
  Matrix d_emissions;   // marginals minus gold one-hot, L x T
  Matrix d_transition;  // T x T
  Matrix d_start;       // 1 x T
  Matrix d_end;         // 1 x T
};

CrfBackward nll_backward(const NllCache& cache, const CrfParams& params);

// IOB2 decoding constraint: transitions into I-<type> are only legal from
// B-<type> or I-<type>, and no path may start at I-<type>.
struct IobMask {
  Matrix transition;  // additive, 0 or -1e30
  Matrix start;       // 1 x T, additive
};

IobMask make_iob_mask(const TagVocab& tags);

// Argmax path; ties broken toward the lowest tag index. Pass a mask to
// constrain decoding to valid IOB2 outputs.
std::vector<int> viterbi(const Matrix& emissions, const CrfParams& params,
                         const IobMask* mask = nullptr);

}  // namespace hgda
