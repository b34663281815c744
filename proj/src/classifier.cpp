#include "hgda/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "hgda/errors.hpp"

namespace hgda {

ClassifierParams init_classifier(std::size_t input_dim,
                                 std::size_t num_domains, SplitRng& rng) {
  ClassifierParams params;
  params.weight = Matrix(input_dim, num_domains);
  params.bias = Matrix::row(num_domains);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (std::size_t k = 0; k < params.weight.size(); ++k) {
    params.weight[k] = rng.next_uniform(-bound, bound);
  }
  for (std::size_t k = 0; k < params.bias.size(); ++k) {
    params.bias[k] = rng.next_uniform(-bound, bound);
  }
  return params;
}

ClassifierParams zeros_like(const ClassifierParams& params) {
  ClassifierParams z;
  z.weight = Matrix(params.weight.rows(), params.weight.cols());
  z.bias = Matrix::row(params.bias.cols());
  return z;
}

double cls_loss(const ClassifierParams& params, const Matrix& pooled,
                int true_domain, ClsCache* cache) {
  const std::size_t num_sentences = pooled.rows();
  const std::size_t input_dim = params.input_dim();
  const std::size_t num_domains = params.num_domains();
  if (num_sentences == 0 || pooled.cols() != input_dim) {
    raise(ErrorCode::dimension_mismatch, "pooled feature shape");
  }
  if (true_domain < 0 ||
      static_cast<std::size_t>(true_domain) >= num_domains) {
    raise(ErrorCode::domain_index_out_of_range, std::to_string(true_domain));
  }

  Matrix probs(num_sentences, num_domains);
  double total = 0.0;
  std::vector<double> logits(num_domains);
  for (std::size_t s = 0; s < num_sentences; ++s) {
    const double* v = pooled.row_ptr(s);
    for (std::size_t d = 0; d < num_domains; ++d) {
      double acc = params.bias[d];
      for (std::size_t h = 0; h < input_dim; ++h) {
        acc += v[h] * params.weight.at(h, d);
      }
      logits[d] = acc;
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t d = 0; d < num_domains; ++d) {
      z += std::exp(logits[d] - max_logit);
    }
    const double log_z = max_logit + std::log(z);
    for (std::size_t d = 0; d < num_domains; ++d) {
      probs.at(s, d) = std::exp(logits[d] - log_z);
    }
    total += log_z - logits[static_cast<std::size_t>(true_domain)];
  }
  const double loss = total / static_cast<double>(num_sentences);

  if (cache != nullptr) {
    cache->pooled = pooled;
    cache->probs = std::move(probs);
    cache->true_domain = true_domain;
    cache->valid = true;
  }
  return loss;
}

ClsBackward cls_backward(const ClsCache& cache, const ClassifierParams& params) {
  if (!cache.valid || cache.probs.cols() != params.num_domains() ||
      cache.pooled.cols() != params.input_dim()) {
    raise(ErrorCode::stale_cache, "cls cache does not match parameters");
  }
  const std::size_t num_sentences = cache.pooled.rows();
  const std::size_t input_dim = params.input_dim();
  const std::size_t num_domains = params.num_domains();
  const double inv = 1.0 / static_cast<double>(num_sentences);

  ClsBackward grads;
  grads.d_weight = Matrix(input_dim, num_domains);
  grads.d_bias = Matrix::row(num_domains);
  grads.d_pooled = Matrix(num_sentences, input_dim);

  std::vector<double> d_logits(num_domains);
  for (std::size_t s = 0; s < num_sentences; ++s) {
    for (std::size_t d = 0; d < num_domains; ++d) {
      d_logits[d] = cache.probs.at(s, d) * inv;
    }
    d_logits[static_cast<std::size_t>(cache.true_domain)] -= inv;

    const double* v = cache.pooled.row_ptr(s);
    double* dv = grads.d_pooled.row_ptr(s);
    for (std::size_t h = 0; h < input_dim; ++h) {
      const double* w = params.weight.row_ptr(h);
      double* dw = grads.d_weight.row_ptr(h);
      double acc = 0.0;
      for (std::size_t d = 0; d < num_domains; ++d) {
        dw[d] += v[h] * d_logits[d];
        acc += w[d] * d_logits[d];
      }
      dv[h] = acc;
    }
    for (std::size_t d = 0; d < num_domains; ++d) {
      grads.d_bias[d] += d_logits[d];
    }
  }
  return grads;
}

}  // namespace hgda
