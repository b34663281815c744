#include "hgda/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace hgda {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_uniform(Matrix& m, double bound, SplitRng& rng) {
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = rng.next_uniform(-bound, bound);
  }
}

LstmDirParams init_lstm(std::size_t input_dim, std::size_t hidden,
                        SplitRng& rng) {
  LstmDirParams p;
  p.w_in = Matrix(4 * hidden, input_dim);
  p.w_rec = Matrix(4 * hidden, hidden);
  p.bias = Matrix::row(4 * hidden);
  init_uniform(p.w_in, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  const double rb = 1.0 / std::sqrt(static_cast<double>(hidden));
  init_uniform(p.w_rec, rb, rng);
  init_uniform(p.bias, rb, rng);
  return p;
}

LstmDirParams zeros_lstm(const LstmDirParams& p) {
  LstmDirParams z;
  z.w_in = Matrix(p.w_in.rows(), p.w_in.cols());
  z.w_rec = Matrix(p.w_rec.rows(), p.w_rec.cols());
  z.bias = Matrix::row(p.bias.cols());
  return z;
}

// Runs the cell over `length` rows of `inputs`. With reverse=true the
// recurrence walks positions length-1 .. 0; hidden states are always stored
// at their sentence position.
void lstm_forward(const LstmDirParams& p, const Matrix& inputs,
                  std::size_t length, bool reverse, LstmStepCache& cache) {
  const std::size_t hidden = p.hidden();
  const std::size_t input_dim = p.input_dim();
  cache.gates = Matrix(length, 4 * hidden);
  cache.cell = Matrix(length, hidden);
  cache.tanh_c = Matrix(length, hidden);
  cache.hidden = Matrix(length, hidden);

  std::vector<double> h_prev(hidden, 0.0);
  std::vector<double> c_prev(hidden, 0.0);
  std::vector<double> pre(4 * hidden);

  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = reverse ? length - 1 - s : s;
    const double* x = inputs.row_ptr(t);
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
      double acc = p.bias[r];
      const double* wi = p.w_in.row_ptr(r);
      for (std::size_t j = 0; j < input_dim; ++j) acc += wi[j] * x[j];
      const double* wr = p.w_rec.row_ptr(r);
      for (std::size_t j = 0; j < hidden; ++j) acc += wr[j] * h_prev[j];
      pre[r] = acc;
    }
    double* gates = cache.gates.row_ptr(t);
    double* cell = cache.cell.row_ptr(t);
    double* tanh_c = cache.tanh_c.row_ptr(t);
    double* h = cache.hidden.row_ptr(t);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double gi = sigmoid(pre[j]);
      const double gf = sigmoid(pre[hidden + j]);
      const double gg = std::tanh(pre[2 * hidden + j]);
      const double go = sigmoid(pre[3 * hidden + j]);
      gates[j] = gi;
      gates[hidden + j] = gf;
      gates[2 * hidden + j] = gg;
      gates[3 * hidden + j] = go;
      cell[j] = gf * c_prev[j] + gi * gg;
      tanh_c[j] = std::tanh(cell[j]);
      h[j] = go * tanh_c[j];
    }
    std::copy(h, h + hidden, h_prev.begin());
    std::copy(cell, cell + hidden, c_prev.begin());
  }
}

// d_hidden holds upstream gradients per sentence position. Accumulates
// parameter gradients into `grads` and input gradients into `d_inputs`.
void lstm_backward(const LstmDirParams& p, const Matrix& inputs,
                   std::size_t length, bool reverse,
                   const LstmStepCache& cache, const Matrix& d_hidden,
                   LstmDirParams& grads, Matrix& d_inputs) {
  const std::size_t hidden = p.hidden();
  const std::size_t input_dim = p.input_dim();

  std::vector<double> dh_next(hidden, 0.0);
  std::vector<double> dc_next(hidden, 0.0);
  std::vector<double> dpre(4 * hidden);

  for (std::size_t s = length; s-- > 0;) {
    const std::size_t t = reverse ? length - 1 - s : s;
    const std::size_t t_prev_step =
        reverse ? t + 1 : (t == 0 ? length : t - 1);  // length => no previous
    const bool has_prev = s > 0;

    const double* gates = cache.gates.row_ptr(t);
    const double* tanh_c = cache.tanh_c.row_ptr(t);
    const double* up = d_hidden.row_ptr(t);

    for (std::size_t j = 0; j < hidden; ++j) {
      const double gi = gates[j];
      const double gf = gates[hidden + j];
      const double gg = gates[2 * hidden + j];
      const double go = gates[3 * hidden + j];
      const double c_prev =
          has_prev ? cache.cell.at(t_prev_step, j) : 0.0;

      const double dh = up[j] + dh_next[j];
      const double d_out = dh * tanh_c[j];
      const double dc = dh * go * (1.0 - tanh_c[j] * tanh_c[j]) + dc_next[j];
      const double d_in = dc * gg;
      const double d_forget = dc * c_prev;
      const double d_g = dc * gi;

      dpre[j] = d_in * gi * (1.0 - gi);
      dpre[hidden + j] = d_forget * gf * (1.0 - gf);
      dpre[2 * hidden + j] = d_g * (1.0 - gg * gg);
      dpre[3 * hidden + j] = d_out * go * (1.0 - go);
      dc_next[j] = dc * gf;
    }

    const double* x = inputs.row_ptr(t);
    double* dx = d_inputs.row_ptr(t);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
      const double dp = dpre[r];
      if (dp == 0.0) continue;
      double* dwi = grads.w_in.row_ptr(r);
      const double* wi = p.w_in.row_ptr(r);
      for (std::size_t j = 0; j < input_dim; ++j) {
        dwi[j] += dp * x[j];
        dx[j] += dp * wi[j];
      }
      double* dwr = grads.w_rec.row_ptr(r);
      const double* wr = p.w_rec.row_ptr(r);
      if (has_prev) {
        const double* h_prev = cache.hidden.row_ptr(t_prev_step);
        for (std::size_t j = 0; j < hidden; ++j) {
          dwr[j] += dp * h_prev[j];
          dh_next[j] += dp * wr[j];
        }
      }
      grads.bias[r] += dp;
    }
  }
}

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
}

int Vocab::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

Vocab build_vocab(const std::vector<const Corpus*>& corpora) {
  std::set<std::string> tokens;
  for (const Corpus* corpus : corpora) {
    for (const auto& sentence : corpus->sentences) {
      tokens.insert(sentence.tokens.begin(), sentence.tokens.end());
    }
  }
  return Vocab(std::vector<std::string>(tokens.begin(), tokens.end()));
}

CharVocab::CharVocab(std::vector<unsigned char> bytes)
    : bytes_(std::move(bytes)) {
  map_.fill(0);
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    map_[bytes_[i]] = static_cast<int>(i + 1);
  }
}

CharVocab CharVocab::from_corpora(const std::vector<const Corpus*>& corpora) {
  std::set<unsigned char> seen;
  for (const Corpus* corpus : corpora) {
    for (const auto& sentence : corpus->sentences) {
      for (const auto& token : sentence.tokens) {
        for (unsigned char c : token) seen.insert(c);
      }
    }
  }
  return CharVocab(std::vector<unsigned char>(seen.begin(), seen.end()));
}

EncoderParams init_encoder(const EncoderConfig& config, Vocab vocab,
                           CharVocab char_vocab, const EmbeddingTable& table,
                           SplitRng& rng) {
  if (config.hidden % 2 != 0) {
    raise(ErrorCode::invalid_config, "hidden size must be even");
  }
  EncoderParams params;
  params.vocab = std::move(vocab);
  params.embedding = Matrix(params.vocab.size(), config.emb_dim);
  const double eb = 1.0 / std::sqrt(static_cast<double>(config.emb_dim));
  for (std::size_t v = 0; v < params.vocab.size(); ++v) {
    const auto* pretrained = table.find(params.vocab.token(v));
    double* row = params.embedding.row_ptr(v);
    if (pretrained != nullptr) {
      if (pretrained->size() != config.emb_dim) {
        raise(ErrorCode::dimension_mismatch,
              "pretrained dimension != embedding dimension");
      }
      std::copy(pretrained->begin(), pretrained->end(), row);
    } else {
      for (std::size_t j = 0; j < config.emb_dim; ++j) {
        row[j] = rng.next_uniform(-eb, eb);
      }
    }
  }

  std::size_t input_dim = config.emb_dim;
  if (config.char_features) {
    input_dim += config.char_lstm_out + config.char_cnn_out;
  }
  params.fwd = init_lstm(input_dim, config.hidden / 2, rng);
  params.bwd = init_lstm(input_dim, config.hidden / 2, rng);

  params.char_features = config.char_features;
  if (config.char_features) {
    params.char_vocab = std::move(char_vocab);
    params.chars.embedding = Matrix(params.char_vocab.size(), config.char_dim);
    init_uniform(params.chars.embedding,
                 1.0 / std::sqrt(static_cast<double>(config.char_dim)), rng);
    params.chars.lstm = init_lstm(config.char_dim, config.char_lstm_out, rng);
    params.chars.kernel = config.char_kernel;
    params.chars.cnn_filters =
        Matrix(config.char_cnn_out, config.char_kernel * config.char_dim);
    params.chars.cnn_bias = Matrix::row(config.char_cnn_out);
    const double cb =
        1.0 / std::sqrt(static_cast<double>(config.char_kernel * config.char_dim));
    init_uniform(params.chars.cnn_filters, cb, rng);
    init_uniform(params.chars.cnn_bias, cb, rng);
  }
  return params;
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams z;
  z.vocab = params.vocab;
  z.embedding = Matrix(params.embedding.rows(), params.embedding.cols());
  z.fwd = zeros_lstm(params.fwd);
  z.bwd = zeros_lstm(params.bwd);
  z.char_features = params.char_features;
  if (params.char_features) {
    z.char_vocab = params.char_vocab;
    z.chars.embedding =
        Matrix(params.chars.embedding.rows(), params.chars.embedding.cols());
    z.chars.lstm = zeros_lstm(params.chars.lstm);
    z.chars.cnn_filters =
        Matrix(params.chars.cnn_filters.rows(), params.chars.cnn_filters.cols());
    z.chars.cnn_bias = Matrix::row(params.chars.cnn_bias.cols());
    z.chars.kernel = params.chars.kernel;
  }
  return z;
}

namespace {

// Char pipeline for one token: byte embeddings -> (LSTM last state, max-pooled
// convolution). Returns the concatenated feature vector.
std::vector<double> char_features_forward(const CharParams& p,
                                          const CharVocab& vocab,
                                          const std::string& token,
                                          CharTokenCache& cache) {
  const std::size_t char_dim = p.embedding.cols();
  const std::size_t lstm_out = p.lstm.hidden();
  const std::size_t cnn_out = p.cnn_filters.rows();
  const std::size_t kernel = p.kernel;

  const std::size_t real_len = std::max<std::size_t>(token.size(), 1);
  const std::size_t padded = std::max(real_len, kernel);
  cache.char_ids.assign(padded, -1);
  cache.inputs = Matrix(padded, char_dim);
  for (std::size_t i = 0; i < real_len; ++i) {
    const unsigned char c = i < token.size() ? token[i] : ' ';
    const int row = vocab.index(c);
    cache.char_ids[i] = row;
    std::copy(p.embedding.row_ptr(row), p.embedding.row_ptr(row) + char_dim,
              cache.inputs.row_ptr(i));
  }

  lstm_forward(p.lstm, cache.inputs, real_len, /*reverse=*/false, cache.lstm);

  std::vector<double> out(lstm_out + cnn_out, 0.0);
  const double* last = cache.lstm.hidden.row_ptr(real_len - 1);
  std::copy(last, last + lstm_out, out.begin());

  cache.cnn_argmax.assign(cnn_out, 0);
  const std::size_t windows = padded - kernel + 1;
  for (std::size_t f = 0; f < cnn_out; ++f) {
    const double* w = p.cnn_filters.row_ptr(f);
    double best = -std::numeric_limits<double>::infinity();
    int best_t = 0;
    for (std::size_t t = 0; t < windows; ++t) {
      double acc = p.cnn_bias[f];
      for (std::size_t j = 0; j < kernel; ++j) {
        const double* x = cache.inputs.row_ptr(t + j);
        const double* wj = w + j * char_dim;
        for (std::size_t c = 0; c < char_dim; ++c) acc += wj[c] * x[c];
      }
      if (acc > best) {
        best = acc;
        best_t = static_cast<int>(t);
      }
    }
    cache.cnn_argmax[f] = best_t;
    out[lstm_out + f] = best;
  }
  return out;
}

void char_features_backward(const CharParams& p, const CharTokenCache& cache,
                            const double* d_out, CharParams& grads) {
  const std::size_t char_dim = p.embedding.cols();
  const std::size_t lstm_out = p.lstm.hidden();
  const std::size_t cnn_out = p.cnn_filters.rows();
  const std::size_t kernel = p.kernel;
  const std::size_t real_len = cache.lstm.hidden.rows();

  Matrix d_inputs(cache.inputs.rows(), char_dim);

  // LSTM: upstream gradient lands on the final hidden state only.
  Matrix d_hidden(real_len, lstm_out);
  for (std::size_t j = 0; j < lstm_out; ++j) {
    d_hidden.at(real_len - 1, j) = d_out[j];
  }
  lstm_backward(p.lstm, cache.inputs, real_len, /*reverse=*/false, cache.lstm,
                d_hidden, grads.lstm, d_inputs);

  // CNN: route each filter's gradient through its argmax window.
  for (std::size_t f = 0; f < cnn_out; ++f) {
    const double g = d_out[lstm_out + f];
    if (g == 0.0) continue;
    grads.cnn_bias[f] += g;
    const auto t0 = static_cast<std::size_t>(cache.cnn_argmax[f]);
    const double* w = p.cnn_filters.row_ptr(f);
    double* dw = grads.cnn_filters.row_ptr(f);
    for (std::size_t j = 0; j < kernel; ++j) {
      const double* x = cache.inputs.row_ptr(t0 + j);
      double* dx = d_inputs.row_ptr(t0 + j);
      for (std::size_t c = 0; c < char_dim; ++c) {
        dw[j * char_dim + c] += g * x[c];
        dx[c] += g * w[j * char_dim + c];
      }
    }
  }

  for (std::size_t i = 0; i < cache.char_ids.size(); ++i) {
    const int row = cache.char_ids[i];
    if (row < 0) continue;
    double* dst = grads.embedding.row_ptr(row);
    const double* src = d_inputs.row_ptr(i);
    for (std::size_t c = 0; c < char_dim; ++c) dst[c] += src[c];
  }
}

}  // namespace

Matrix encode(const EncoderParams& params, const Sentence& sentence,
              const EmbeddingTable& table, double dropout, SplitRng& rng,
              EncodeCache* cache) {
  const std::size_t length = sentence.tokens.size();
  if (length == 0) {
    raise(ErrorCode::dimension_mismatch, "cannot encode an empty sentence");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    raise(ErrorCode::invalid_config, "dropout must lie in [0, 1)");
  }
  const std::size_t emb_dim = params.emb_dim();
  const std::size_t input_dim = params.input_dim();

  EncodeCache local;
  EncodeCache& c = cache != nullptr ? *cache : local;
  c = EncodeCache{};
  c.token_rows.resize(length);
  c.inputs = Matrix(length, input_dim);
  if (params.char_features) c.chars.resize(length);

  for (std::size_t t = 0; t < length; ++t) {
    const std::string& token = sentence.tokens[t];
    const int row = params.vocab.find(token);
    c.token_rows[t] = row;
    double* x = c.inputs.row_ptr(t);
    if (row >= 0) {
      const double* src = params.embedding.row_ptr(static_cast<std::size_t>(row));
      std::copy(src, src + emb_dim, x);
    } else {
      if (table.dimension() != emb_dim) {
        raise(ErrorCode::dimension_mismatch,
              "OOV token '" + token + "' but table dimension " +
                  std::to_string(table.dimension()) + " != " +
                  std::to_string(emb_dim));
      }
      const auto vec = table.lookup(token);
      std::copy(vec.begin(), vec.end(), x);
    }
    if (params.char_features) {
      const auto feats = char_features_forward(params.chars, params.char_vocab,
                                               token, c.chars[t]);
      std::copy(feats.begin(), feats.end(), x + emb_dim);
    }
  }

  if (dropout > 0.0) {
    c.dropped = true;
    c.drop_scale = Matrix(length, input_dim);
    const double inv_keep = 1.0 / (1.0 - dropout);
    for (std::size_t k = 0; k < c.drop_scale.size(); ++k) {
      c.drop_scale[k] = rng.next_double() < dropout ? 0.0 : inv_keep;
      c.inputs[k] *= c.drop_scale[k];
    }
  }

  const std::size_t half = params.fwd.hidden();
  lstm_forward(params.fwd, c.inputs, length, /*reverse=*/false, c.fwd);
  lstm_forward(params.bwd, c.inputs, length, /*reverse=*/true, c.bwd);

  Matrix features(length, 2 * half);
  for (std::size_t t = 0; t < length; ++t) {
    const double* hf = c.fwd.hidden.row_ptr(t);
    const double* hb = c.bwd.hidden.row_ptr(t);
    double* out = features.row_ptr(t);
    std::copy(hf, hf + half, out);
    std::copy(hb, hb + half, out + half);
  }
  c.feature_dim = 2 * half;
  c.valid = true;
  return features;
}

EncoderParams encode_backward(const EncoderParams& params,
                              const EncodeCache& cache,
                              const Matrix& upstream) {
  if (!cache.valid || upstream.rows() != cache.inputs.rows() ||
      upstream.cols() != cache.feature_dim ||
      cache.inputs.cols() != params.input_dim()) {
    raise(ErrorCode::stale_cache, "encode cache does not match backward call");
  }
  const std::size_t length = cache.inputs.rows();
  const std::size_t half = params.fwd.hidden();
  const std::size_t emb_dim = params.emb_dim();

  EncoderParams grads = zeros_like(params);

  Matrix d_fwd(length, half);
  Matrix d_bwd(length, half);
  for (std::size_t t = 0; t < length; ++t) {
    const double* up = upstream.row_ptr(t);
    std::copy(up, up + half, d_fwd.row_ptr(t));
    std::copy(up + half, up + 2 * half, d_bwd.row_ptr(t));
  }

  Matrix d_inputs(length, params.input_dim());
  lstm_backward(params.fwd, cache.inputs, length, /*reverse=*/false, cache.fwd,
                d_fwd, grads.fwd, d_inputs);
  lstm_backward(params.bwd, cache.inputs, length, /*reverse=*/true, cache.bwd,
                d_bwd, grads.bwd, d_inputs);

  if (cache.dropped) {
    for (std::size_t k = 0; k < d_inputs.size(); ++k) {
      d_inputs[k] *= cache.drop_scale[k];
    }
  }

  for (std::size_t t = 0; t < length; ++t) {
    const double* dx = d_inputs.row_ptr(t);
    const int row = cache.token_rows[t];
    if (row >= 0) {
      double* dst = grads.embedding.row_ptr(static_cast<std::size_t>(row));
      for (std::size_t j = 0; j < emb_dim; ++j) dst[j] += dx[j];
    }
    if (params.char_features) {
      char_features_backward(params.chars, cache.chars[t], dx + emb_dim,
                             grads.chars);
    }
  }
  return grads;
}

Matrix pool(const Matrix& features) {
  if (features.rows() == 0) {
    raise(ErrorCode::dimension_mismatch, "cannot pool zero rows");
  }
  Matrix out = Matrix::row(features.cols());
  for (std::size_t t = 0; t < features.rows(); ++t) {
    const double* row = features.row_ptr(t);
    for (std::size_t j = 0; j < features.cols(); ++j) out[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(features.rows());
  for (std::size_t j = 0; j < features.cols(); ++j) out[j] *= inv;
  return out;
}

Matrix pool_backward(const Matrix& d_pooled, std::size_t rows) {
  Matrix out(rows, d_pooled.cols());
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t t = 0; t < rows; ++t) {
    double* dst = out.row_ptr(t);
    for (std::size_t j = 0; j < d_pooled.cols(); ++j) {
      dst[j] = d_pooled[j] * inv;
    }
  }
  return out;
}

}  // namespace hgda
