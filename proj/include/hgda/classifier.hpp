#pragma once

#include <vector>

#include "hgda/rng.hpp"
#include "hgda/tensor.hpp"

namespace hgda {

// Fully connected softmax head over pooled sentence features; predicts the
// source domain of a task's sentences.
struct ClassifierParams {
  Matrix weight;  // H x D
  Matrix bias;    // 1 x D

  std::size_t input_dim() const noexcept { return weight.rows(); }
  std::size_t num_domains() const noexcept { return weight.cols(); }
};

ClassifierParams init_classifier(std::size_t input_dim,
                                 std::size_t num_domains, SplitRng& rng);
ClassifierParams zeros_like(const ClassifierParams& params);

struct ClsCache {
  Matrix pooled;  // S x H, one row per sentence
  Matrix probs;   // S x D
  int true_domain = -1;
  bool valid = false;
};

// Mean cross-entropy over the task's sentences of softmax(Wᵀv + b) against
// the shared true domain.
double cls_loss(const ClassifierParams& params, const Matrix& pooled,
                int true_domain, ClsCache* cache = nullptr);

struct ClsBackward {
  Matrix d_weight;  // H x D
  Matrix d_bias;    // 1 x D
  Matrix d_pooled;  // S x H
};

ClsBackward cls_backward(const ClsCache& cache, const ClassifierParams& params);

}  // namespace hgda
