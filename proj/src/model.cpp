#include "hgda/model.hpp"

#include <cmath>

namespace hgda {

ModelParams init_model(const EncoderConfig& config, Vocab vocab,
                       CharVocab char_vocab, TagVocab tags,
                       std::vector<std::string> domain_names,
                       const EmbeddingTable& table, uint64_t seed) {
  ModelParams model;
  SplitRng rng(seed, /*stream=*/0x1a17);
  model.theta = init_encoder(config, std::move(vocab), std::move(char_vocab),
                             table, rng);
  model.phi = init_crf(config.hidden, tags.size(), rng);
  model.omega = init_classifier(config.hidden, domain_names.size(), rng);
  model.tags = std::move(tags);
  model.domain_names = std::move(domain_names);
  return model;
}

ModelGrads zeros_like(const ModelParams& params) {
  ModelGrads grads;
  grads.theta = zeros_like(params.theta);
  grads.phi = zeros_like(params.phi);
  grads.omega = zeros_like(params.omega);
  return grads;
}

void add_scaled(EncoderParams& dst, const EncoderParams& src, double s) {
  std::vector<Matrix*> lhs;
  std::vector<const Matrix*> rhs;
  visit_tensors(dst, [&lhs](const std::string&, Matrix& t) { lhs.push_back(&t); },
                "theta");
  visit_tensors(src,
                [&rhs](const std::string&, const Matrix& t) { rhs.push_back(&t); },
                "theta");
  for (std::size_t i = 0; i < lhs.size(); ++i) add_scaled(*lhs[i], *rhs[i], s);
}

void add_scaled(CrfParams& dst, const CrfParams& src, double s) {
  add_scaled(dst.emission_proj, src.emission_proj, s);
  add_scaled(dst.transition, src.transition, s);
  add_scaled(dst.start_scores, src.start_scores, s);
  add_scaled(dst.end_scores, src.end_scores, s);
}

void add_scaled(ClassifierParams& dst, const ClassifierParams& src, double s) {
  add_scaled(dst.weight, src.weight, s);
  add_scaled(dst.bias, src.bias, s);
}

void add_scaled(ModelParams& params, const ModelGrads& grads, double s) {
  visit_model_tensor_pairs(params, grads,
                           [s](Matrix& p, const Matrix& g) { add_scaled(p, g, s); });
}

void add_scaled(ModelGrads& dst, const ModelGrads& src, double s) {
  visit_model_tensor_pairs(dst, src,
                           [s](Matrix& d, const Matrix& g) { add_scaled(d, g, s); });
}

double squared_norm(const ModelGrads& grads) {
  double acc = 0.0;
  visit_model_tensors(grads, [&acc](const std::string&, const Matrix& t) {
    acc += squared_norm(t);
  });
  return acc;
}

void scale(ModelGrads& grads, double s) {
  visit_model_tensors(grads,
                      [s](const std::string&, Matrix& t) { scale(t, s); });
}

bool all_finite(const ModelGrads& grads) {
  bool ok = true;
  visit_model_tensors(grads, [&ok](const std::string&, const Matrix& t) {
    ok = ok && t.all_finite();
  });
  return ok;
}

TaskEval task_forward_backward(const ModelParams& model,
                               const EmbeddingTable& table,
                               std::span<const Sentence> sentences,
                               int domain_index, double lambda, double dropout,
                               SplitRng& rng, const GradRequest& want,
                               ModelGrads* grads) {
  const std::size_t count = sentences.size();
  if (count == 0) {
    raise(ErrorCode::dimension_mismatch, "task has no sentences");
  }
  const bool with_cls = domain_index >= 0;
  const bool any_grad = want.theta || want.phi || want.omega;
  if (any_grad && grads == nullptr) {
    raise(ErrorCode::invalid_config, "gradient request without a sink");
  }
  const double inv_count = 1.0 / static_cast<double>(count);

  struct SentenceWork {
    Matrix features;
    EncodeCache encode_cache;
    NllCache nll_cache;
  };
  std::vector<SentenceWork> work(count);
  Matrix pooled(with_cls ? count : 0, model.hidden());

  TaskEval eval;
  for (std::size_t s = 0; s < count; ++s) {
    auto& w = work[s];
    w.features = encode(model.theta, sentences[s], table, dropout, rng,
                        want.theta ? &w.encode_cache : nullptr);
    const Matrix emissions = project_emissions(w.features, model.phi);
    const auto gold = model.tags.encode(sentences[s].tags);
    const bool need_nll_grad = want.phi || want.theta;
    eval.lab += nll(emissions, gold, model.phi,
                    need_nll_grad ? &w.nll_cache : nullptr) *
                inv_count;
    if (with_cls) {
      const Matrix v = pool(w.features);
      std::copy(v.data(), v.data() + v.size(), pooled.row_ptr(s));
    }
  }

  ClsCache cls_cache;
  if (with_cls) {
    eval.cls = cls_loss(model.omega, pooled, domain_index,
                        (want.omega || want.theta) ? &cls_cache : nullptr);
  }

  if (!any_grad) return eval;

  ClsBackward cls_grads;
  if (with_cls && (want.omega || want.theta)) {
    cls_grads = cls_backward(cls_cache, model.omega);
    if (want.omega) {
      add_scaled(grads->omega.weight, cls_grads.d_weight, 1.0);
      add_scaled(grads->omega.bias, cls_grads.d_bias, 1.0);
    }
  }

  for (std::size_t s = 0; s < count; ++s) {
    auto& w = work[s];
    Matrix d_features(w.features.rows(), w.features.cols());
    if (want.phi || want.theta) {
      CrfBackward crf_grads = nll_backward(w.nll_cache, model.phi);
      scale(crf_grads.d_emissions, inv_count);
      if (want.phi) {
        add_scaled(grads->phi.transition, crf_grads.d_transition, inv_count);
        add_scaled(grads->phi.start_scores, crf_grads.d_start, inv_count);
        add_scaled(grads->phi.end_scores, crf_grads.d_end, inv_count);
        d_features = project_emissions_backward(
            w.features, crf_grads.d_emissions, model.phi,
            grads->phi.emission_proj);
      } else {
        Matrix unused(model.phi.emission_proj.rows(),
                      model.phi.emission_proj.cols());
        d_features = project_emissions_backward(
            w.features, crf_grads.d_emissions, model.phi, unused);
      }
    }
    if (want.theta) {
      if (with_cls && lambda != 0.0) {
        Matrix d_pooled_row = Matrix::row(model.hidden());
        const double* src = cls_grads.d_pooled.row_ptr(s);
        for (std::size_t j = 0; j < d_pooled_row.cols(); ++j) {
          d_pooled_row[j] = src[j];
        }
        const Matrix d_from_cls =
            pool_backward(d_pooled_row, w.features.rows());
        add_scaled(d_features, d_from_cls, lambda);
      }
      const EncoderParams d_theta =
          encode_backward(model.theta, w.encode_cache, d_features);
      add_scaled(grads->theta, d_theta, 1.0);
    }
  }
  return eval;
}

}  // namespace hgda
