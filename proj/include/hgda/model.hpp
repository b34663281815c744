#pragma once

#include <span>
#include <string>
#include <vector>

#include "hgda/classifier.hpp"
#include "hgda/corpus.hpp"
#include "hgda/crf.hpp"
#include "hgda/encoder.hpp"

namespace hgda {

// Full parameter set: sentence encoder (theta), CRF tag decoder (phi) and
// domain classifier head (omega), plus the vocabularies that fix tensor row
// order.
struct ModelParams {
  EncoderParams theta;
  CrfParams phi;
  ClassifierParams omega;
  TagVocab tags;
  std::vector<std::string> domain_names;  // classifier column order

  std::size_t hidden() const noexcept { return theta.hidden(); }
};

ModelParams init_model(const EncoderConfig& config, Vocab vocab,
                       CharVocab char_vocab, TagVocab tags,
                       std::vector<std::string> domain_names,
                       const EmbeddingTable& table, uint64_t seed);

// Gradient (or optimizer-state) holder with the same tensor shapes as the
// parameters they mirror.
struct ModelGrads {
  EncoderParams theta;
  CrfParams phi;
  ClassifierParams omega;
};

ModelGrads zeros_like(const ModelParams& params);

// --- uniform tensor traversal -------------------------------------------
// Visitation order is fixed; the checkpoint format and the optimizer state
// both rely on it.

template <class EP, class F>
void visit_tensors(EP& p, F&& f, const std::string& prefix) {
  f(prefix + ".embedding", p.embedding);
  f(prefix + ".fwd.w_in", p.fwd.w_in);
  f(prefix + ".fwd.w_rec", p.fwd.w_rec);
  f(prefix + ".fwd.bias", p.fwd.bias);
  f(prefix + ".bwd.w_in", p.bwd.w_in);
  f(prefix + ".bwd.w_rec", p.bwd.w_rec);
  f(prefix + ".bwd.bias", p.bwd.bias);
  if (p.char_features) {
    f(prefix + ".chars.embedding", p.chars.embedding);
    f(prefix + ".chars.lstm.w_in", p.chars.lstm.w_in);
    f(prefix + ".chars.lstm.w_rec", p.chars.lstm.w_rec);
    f(prefix + ".chars.lstm.bias", p.chars.lstm.bias);
    f(prefix + ".chars.cnn_filters", p.chars.cnn_filters);
    f(prefix + ".chars.cnn_bias", p.chars.cnn_bias);
  }
}

template <class CP, class F>
void visit_crf_tensors(CP& p, F&& f, const std::string& prefix) {
  f(prefix + ".emission_proj", p.emission_proj);
  f(prefix + ".transition", p.transition);
  f(prefix + ".start_scores", p.start_scores);
  f(prefix + ".end_scores", p.end_scores);
}

template <class WP, class F>
void visit_cls_tensors(WP& p, F&& f, const std::string& prefix) {
  f(prefix + ".weight", p.weight);
  f(prefix + ".bias", p.bias);
}

template <class M, class F>
void visit_model_tensors(M& m, F&& f) {
  visit_tensors(m.theta, f, "theta");
  visit_crf_tensors(m.phi, f, "phi");
  visit_cls_tensors(m.omega, f, "omega");
}

// Pairwise traversal over two equally shaped containers.
template <class A, class B, class F>
void visit_model_tensor_pairs(A& a, B& b, F&& f) {
  std::vector<Matrix*> lhs;
  std::vector<const Matrix*> rhs;
  visit_model_tensors(a, [&](const std::string&, Matrix& t) { lhs.push_back(&t); });
  visit_model_tensors(b, [&](const std::string&, const Matrix& t) { rhs.push_back(&t); });
  if (lhs.size() != rhs.size()) {
    raise(ErrorCode::dimension_mismatch, "tensor container mismatch");
  }
  for (std::size_t i = 0; i < lhs.size(); ++i) f(*lhs[i], *rhs[i]);
}

void add_scaled(EncoderParams& dst, const EncoderParams& src, double s);
void add_scaled(CrfParams& dst, const CrfParams& src, double s);
void add_scaled(ClassifierParams& dst, const ClassifierParams& src, double s);
void add_scaled(ModelParams& params, const ModelGrads& grads, double s);
void add_scaled(ModelGrads& dst, const ModelGrads& src, double s);
double squared_norm(const ModelGrads& grads);
void scale(ModelGrads& grads, double s);
bool all_finite(const ModelGrads& grads);

// --- task-level losses and gradients --------------------------------------

struct GradRequest {
  bool theta = false;
  bool phi = false;
  bool omega = false;
};

struct TaskEval {
  double lab = 0.0;  // mean CRF negative log-likelihood over the sentences
  double cls = 0.0;  // mean domain cross-entropy (0 when skipped)
};

// Forward pass over a set of sentences, with optional gradients:
//   theta <- d/dtheta (lab + lambda * cls)
//   phi   <- d/dphi lab
//   omega <- d/domega cls
// domain_index < 0 skips the classifier branch entirely (target-phase
// fine-tuning, where the domain head is dropped).
TaskEval task_forward_backward(const ModelParams& model,
                               const EmbeddingTable& table,
                               std::span<const Sentence> sentences,
                               int domain_index, double lambda, double dropout,
                               SplitRng& rng, const GradRequest& want,
                               ModelGrads* grads);

}  // namespace hgda
