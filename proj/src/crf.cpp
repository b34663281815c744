#include "hgda/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hgda/rng.hpp"

namespace hgda {

namespace {

constexpr double kMaskValue = -1e30;

double log_sum_exp(const double* values, std::size_t n) {
  double max_v = values[0];
  for (std::size_t i = 1; i < n; ++i) max_v = std::max(max_v, values[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(values[i] - max_v);
  return max_v + std::log(acc);
}

void check_emissions(const Matrix& emissions, const CrfParams& params) {
  if (emissions.rows() == 0) {
    raise(ErrorCode::dimension_mismatch, "empty emission matrix");
  }
  if (emissions.cols() != params.num_tags()) {
    raise(ErrorCode::dimension_mismatch,
          "emission columns do not match tag count");
  }
  if (!emissions.all_finite()) {
    raise(ErrorCode::non_finite_score, "emission matrix contains non-finite");
  }
}

void check_gold(const std::vector<int>& gold, std::size_t length,
                std::size_t num_tags) {
  if (gold.size() != length) {
    raise(ErrorCode::dimension_mismatch, "gold length mismatch");
  }
  for (int g : gold) {
    if (g < 0 || static_cast<std::size_t>(g) >= num_tags) {
      raise(ErrorCode::tag_index_out_of_range,
            "gold tag index " + std::to_string(g));
    }
  }
}

Matrix forward_messages(const Matrix& emissions, const CrfParams& params) {
  const std::size_t length = emissions.rows();
  const std::size_t num_tags = params.num_tags();
  Matrix alpha(length, num_tags);
  for (std::size_t y = 0; y < num_tags; ++y) {
    alpha.at(0, y) = params.start_scores[y] + emissions.at(0, y);
  }
  std::vector<double> terms(num_tags);
  for (std::size_t t = 1; t < length; ++t) {
    for (std::size_t y = 0; y < num_tags; ++y) {
      for (std::size_t p = 0; p < num_tags; ++p) {
        terms[p] = alpha.at(t - 1, p) + params.transition.at(p, y);
      }
      alpha.at(t, y) = emissions.at(t, y) + log_sum_exp(terms.data(), num_tags);
    }
  }
  return alpha;
}

}  // namespace

TagVocab::TagVocab(std::vector<std::string> tags) : tags_(std::move(tags)) {
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (index_.count(tags_[i])) {
      raise(ErrorCode::invalid_config, "duplicate tag '" + tags_[i] + "'");
    }
    index_.emplace(tags_[i], static_cast<int>(i));
  }
  if (index_.count("O") == 0) {
    raise(ErrorCode::invalid_config, "tag vocabulary must contain 'O'");
  }
}

TagVocab TagVocab::for_entity_types(const std::set<std::string>& types) {
  std::vector<std::string> tags{"O"};
  for (const auto& type : types) {  // std::set iterates in sorted order
    tags.push_back("B-" + type);
    tags.push_back("I-" + type);
  }
  return TagVocab(std::move(tags));
}

int TagVocab::index_of(const std::string& tag) const {
  auto it = index_.find(tag);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> TagVocab::encode(const std::vector<std::string>& tags) const {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const auto& tag : tags) {
    const int idx = index_of(tag);
    if (idx < 0) {
      raise(ErrorCode::tag_index_out_of_range,
            "tag '" + tag + "' not in vocabulary");
    }
    out.push_back(idx);
  }
  return out;
}

std::vector<std::string> TagVocab::decode(const std::vector<int>& indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= tags_.size()) {
      raise(ErrorCode::tag_index_out_of_range, std::to_string(idx));
    }
    out.push_back(tags_[idx]);
  }
  return out;
}

CrfParams init_crf(std::size_t input_dim, std::size_t num_tags, SplitRng& rng) {
  CrfParams params;
  params.emission_proj = Matrix(input_dim, num_tags);
  params.transition = Matrix(num_tags, num_tags);
  params.start_scores = Matrix::row(num_tags);
  params.end_scores = Matrix::row(num_tags);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (std::size_t k = 0; k < params.emission_proj.size(); ++k) {
    params.emission_proj[k] = rng.next_uniform(-bound, bound);
  }
  const double tbound = 1.0 / std::sqrt(static_cast<double>(num_tags));
  for (std::size_t k = 0; k < params.transition.size(); ++k) {
    params.transition[k] = rng.next_uniform(-tbound, tbound);
  }
  for (std::size_t k = 0; k < num_tags; ++k) {
    params.start_scores[k] = rng.next_uniform(-tbound, tbound);
    params.end_scores[k] = rng.next_uniform(-tbound, tbound);
  }
  return params;
}

CrfParams zeros_like(const CrfParams& params) {
  CrfParams out;
  out.emission_proj = Matrix(params.emission_proj.rows(), params.emission_proj.cols());
  out.transition = Matrix(params.transition.rows(), params.transition.cols());
  out.start_scores = Matrix::row(params.start_scores.cols());
  out.end_scores = Matrix::row(params.end_scores.cols());
  return out;
}

Matrix project_emissions(const Matrix& features, const CrfParams& params) {
  if (features.cols() != params.input_dim()) {
    raise(ErrorCode::dimension_mismatch, "feature width != projection rows");
  }
  const std::size_t length = features.rows();
  const std::size_t num_tags = params.emission_proj.cols();
  Matrix emissions(length, num_tags);
  for (std::size_t t = 0; t < length; ++t) {
    const double* f = features.row_ptr(t);
    double* e = emissions.row_ptr(t);
    for (std::size_t h = 0; h < features.cols(); ++h) {
      const double fh = f[h];
      const double* w = params.emission_proj.row_ptr(h);
      for (std::size_t y = 0; y < num_tags; ++y) e[y] += fh * w[y];
    }
  }
  return emissions;
}

Matrix project_emissions_backward(const Matrix& features,
                                  const Matrix& d_emissions,
                                  const CrfParams& params, Matrix& d_proj) {
  Matrix d_features(features.rows(), features.cols());
  for (std::size_t t = 0; t < features.rows(); ++t) {
    const double* f = features.row_ptr(t);
    const double* de = d_emissions.row_ptr(t);
    double* df = d_features.row_ptr(t);
    for (std::size_t h = 0; h < features.cols(); ++h) {
      const double* w = params.emission_proj.row_ptr(h);
      double* dw = d_proj.row_ptr(h);
      double acc = 0.0;
      for (std::size_t y = 0; y < d_emissions.cols(); ++y) {
        acc += de[y] * w[y];
        dw[y] += f[h] * de[y];
      }
      df[h] = acc;
    }
  }
  return d_features;
}

double log_partition(const Matrix& emissions, const CrfParams& params) {
  check_emissions(emissions, params);
  const Matrix alpha = forward_messages(emissions, params);
  const std::size_t length = emissions.rows();
  const std::size_t num_tags = params.num_tags();
  std::vector<double> terms(num_tags);
  for (std::size_t y = 0; y < num_tags; ++y) {
    terms[y] = alpha.at(length - 1, y) + params.end_scores[y];
  }
  return log_sum_exp(terms.data(), num_tags);
}

double gold_path_score(const Matrix& emissions, const std::vector<int>& gold,
                       const CrfParams& params) {
  check_emissions(emissions, params);
  check_gold(gold, emissions.rows(), params.num_tags());
  double score = params.start_scores[gold[0]] + emissions.at(0, gold[0]);
  for (std::size_t t = 1; t < gold.size(); ++t) {
    score += params.transition.at(gold[t - 1], gold[t]) + emissions.at(t, gold[t]);
  }
  score += params.end_scores[gold.back()];
  return score;
}

double nll(const Matrix& emissions, const std::vector<int>& gold,
           const CrfParams& params, NllCache* cache) {
  check_emissions(emissions, params);
  check_gold(gold, emissions.rows(), params.num_tags());

  const Matrix alpha = forward_messages(emissions, params);
  const std::size_t length = emissions.rows();
  const std::size_t num_tags = params.num_tags();
  std::vector<double> terms(num_tags);
  for (std::size_t y = 0; y < num_tags; ++y) {
    terms[y] = alpha.at(length - 1, y) + params.end_scores[y];
  }
  const double log_z = log_sum_exp(terms.data(), num_tags);
  const double gold_score = gold_path_score(emissions, gold, params);

  if (cache != nullptr) {
    cache->emissions = emissions;
    cache->gold = gold;
    cache->alpha = alpha;
    cache->log_z = log_z;
    cache->valid = true;
  }
  return log_z - gold_score;
}

CrfBackward nll_backward(const NllCache& cache, const CrfParams& params) {
  if (!cache.valid || cache.emissions.rows() == 0 ||
      cache.emissions.cols() != params.num_tags() ||
      cache.alpha.rows() != cache.emissions.rows()) {
    raise(ErrorCode::stale_cache, "nll cache does not match parameters");
  }
  const std::size_t length = cache.emissions.rows();
  const std::size_t num_tags = params.num_tags();
  const Matrix& alpha = cache.alpha;

  // Backward log-messages.
  Matrix beta(length, num_tags);
  for (std::size_t y = 0; y < num_tags; ++y) {
    beta.at(length - 1, y) = params.end_scores[y];
  }
  std::vector<double> terms(num_tags);
  for (std::size_t t = length - 1; t-- > 0;) {
    for (std::size_t y = 0; y < num_tags; ++y) {
      for (std::size_t n = 0; n < num_tags; ++n) {
        terms[n] = params.transition.at(y, n) + cache.emissions.at(t + 1, n) +
                   beta.at(t + 1, n);
      }
      beta.at(t, y) = log_sum_exp(terms.data(), num_tags);
    }
  }

  CrfBackward grads;
  grads.d_emissions = Matrix(length, num_tags);
  grads.d_transition = Matrix(num_tags, num_tags);
  grads.d_start = Matrix::row(num_tags);
  grads.d_end = Matrix::row(num_tags);

  // Unary marginals minus the gold one-hot.
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t y = 0; y < num_tags; ++y) {
      grads.d_emissions.at(t, y) =
          std::exp(alpha.at(t, y) + beta.at(t, y) - cache.log_z);
    }
    grads.d_emissions.at(t, cache.gold[t]) -= 1.0;
  }
  for (std::size_t y = 0; y < num_tags; ++y) {
    grads.d_start[y] = std::exp(alpha.at(0, y) + beta.at(0, y) - cache.log_z);
    grads.d_end[y] =
        std::exp(alpha.at(length - 1, y) + beta.at(length - 1, y) - cache.log_z);
  }
  grads.d_start[cache.gold.front()] -= 1.0;
  grads.d_end[cache.gold.back()] -= 1.0;

  // Pairwise marginals minus gold transition counts.
  for (std::size_t t = 0; t + 1 < length; ++t) {
    for (std::size_t a = 0; a < num_tags; ++a) {
      for (std::size_t b = 0; b < num_tags; ++b) {
        grads.d_transition.at(a, b) +=
            std::exp(alpha.at(t, a) + params.transition.at(a, b) +
                     cache.emissions.at(t + 1, b) + beta.at(t + 1, b) -
                     cache.log_z);
      }
    }
    grads.d_transition.at(cache.gold[t], cache.gold[t + 1]) -= 1.0;
  }
  return grads;
}

IobMask make_iob_mask(const TagVocab& tags) {
  const std::size_t num_tags = tags.size();
  IobMask mask;
  mask.transition = Matrix(num_tags, num_tags);
  mask.start = Matrix::row(num_tags);
  for (std::size_t b = 0; b < num_tags; ++b) {
    const std::string& to = tags.tag(b);
    if (to.size() < 2 || to[0] != 'I') continue;
    const std::string type = to.substr(2);
    mask.start[b] = kMaskValue;
    for (std::size_t a = 0; a < num_tags; ++a) {
      const std::string& from = tags.tag(a);
      const bool legal =
          from.size() >= 2 && (from[0] == 'B' || from[0] == 'I') &&
          from.substr(2) == type;
      if (!legal) mask.transition.at(a, b) = kMaskValue;
    }
  }
  return mask;
}

std::vector<int> viterbi(const Matrix& emissions, const CrfParams& params,
                         const IobMask* mask) {
  check_emissions(emissions, params);
  const std::size_t length = emissions.rows();
  const std::size_t num_tags = params.num_tags();

  Matrix best(length, num_tags);
  std::vector<std::vector<int>> backptr(length, std::vector<int>(num_tags, 0));

  for (std::size_t y = 0; y < num_tags; ++y) {
    best.at(0, y) = params.start_scores[y] + emissions.at(0, y) +
                    (mask != nullptr ? mask->start[y] : 0.0);
  }
  for (std::size_t t = 1; t < length; ++t) {
    for (std::size_t y = 0; y < num_tags; ++y) {
      double best_score = -std::numeric_limits<double>::infinity();
      int best_prev = 0;
      for (std::size_t p = 0; p < num_tags; ++p) {
        const double score =
            best.at(t - 1, p) + params.transition.at(p, y) +
            (mask != nullptr ? mask->transition.at(p, y) : 0.0);
        if (score > best_score) {  // strict: ties keep the lowest index
          best_score = score;
          best_prev = static_cast<int>(p);
        }
      }
      best.at(t, y) = best_score + emissions.at(t, y);
      backptr[t][y] = best_prev;
    }
  }

  double best_final = -std::numeric_limits<double>::infinity();
  int best_tag = 0;
  for (std::size_t y = 0; y < num_tags; ++y) {
    const double score = best.at(length - 1, y) + params.end_scores[y];
    if (score > best_final) {
      best_final = score;
      best_tag = static_cast<int>(y);
    }
  }

  std::vector<int> path(length);
  path[length - 1] = best_tag;
  for (std::size_t t = length - 1; t > 0; --t) {
    path[t - 1] = backptr[t][path[t]];
  }
  return path;
}

}  // namespace hgda
