#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgda/corpus.hpp"
#include "hgda/rng.hpp"
#include "hgda/tensor.hpp"

namespace hgda {

// Token inventory backing the trainable embedding matrix. Row order is the
// token order here; tokens outside the vocabulary fall back to the pretrained
// table at encode time and receive no gradient.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_[i]; }
  int find(const std::string& token) const;  // -1 when absent

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Sorted unique tokens drawn from the given sentences.
Vocab build_vocab(const std::vector<const Corpus*>& corpora);

// Byte-level character inventory; index 0 is reserved for unseen bytes.
class CharVocab {
 public:
  CharVocab() = default;
  explicit CharVocab(std::vector<unsigned char> bytes);

  static CharVocab from_corpora(const std::vector<const Corpus*>& corpora);

  std::size_t size() const noexcept { return bytes_.size() + 1; }
  const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }
  int index(unsigned char c) const { return map_[c]; }

 private:
  std::vector<unsigned char> bytes_;
  std::array<int, 256> map_{};  // byte -> row, 0 for unseen
};

struct LstmDirParams {
  Matrix w_in;   // 4H' x In, gate order [i, f, g, o]
  Matrix w_rec;  // 4H' x H'
  Matrix bias;   // 1 x 4H'

  std::size_t hidden() const noexcept { return w_rec.rows() / 4; }
  std::size_t input_dim() const noexcept { return w_in.cols(); }
};

// Character feature heads: one LSTM over bytes and one width-k max-pooled
// convolution, concatenated to the token embedding.
struct CharParams {
  Matrix embedding;     // C x char_dim
  LstmDirParams lstm;   // hidden = char_lstm_out
  Matrix cnn_filters;   // cnn_out x (kernel * char_dim)
  Matrix cnn_bias;      // 1 x cnn_out
  std::size_t kernel = 3;
};

struct EncoderConfig {
  std::size_t emb_dim = 200;
  std::size_t hidden = 256;  // total feature width, split across directions
  bool char_features = false;
  std::size_t char_dim = 16;
  std::size_t char_lstm_out = 50;
  std::size_t char_cnn_out = 50;
  std::size_t char_kernel = 3;
};

struct EncoderParams {
  Vocab vocab;
  Matrix embedding;  // V x E
  LstmDirParams fwd;
  LstmDirParams bwd;
  bool char_features = false;
  CharVocab char_vocab;
  CharParams chars;

  std::size_t emb_dim() const noexcept { return embedding.cols(); }
  std::size_t hidden() const noexcept { return 2 * fwd.hidden(); }
  std::size_t input_dim() const noexcept { return fwd.input_dim(); }
};

EncoderParams init_encoder(const EncoderConfig& config, Vocab vocab,
                           CharVocab char_vocab, const EmbeddingTable& table,
                           SplitRng& rng);
EncoderParams zeros_like(const EncoderParams& params);

struct LstmStepCache {
  Matrix gates;   // L x 4H', post-activation [i, f, g, o]
  Matrix cell;    // L x H'
  Matrix tanh_c;  // L x H'
  Matrix hidden;  // L x H'
};

struct CharTokenCache {
  std::vector<int> char_ids;
  Matrix inputs;  // padded char embeddings, M x char_dim
  LstmStepCache lstm;
  std::vector<int> cnn_argmax;  // per filter
};

struct EncodeCache {
  std::vector<int> token_rows;  // embedding row per token, -1 when OOV
  Matrix inputs;                // post-dropout inputs, L x In
  Matrix drop_scale;            // elementwise mask / keep_prob, L x In
  bool dropped = false;
  LstmStepCache fwd;
  LstmStepCache bwd;
  std::vector<CharTokenCache> chars;
  std::size_t feature_dim = 0;
  bool valid = false;
};

// Per-token feature rows (L x H). Dropout is applied to the input vectors
// only; pass 0 to run in evaluation mode.
Matrix encode(const EncoderParams& params, const Sentence& sentence,
              const EmbeddingTable& table, double dropout, SplitRng& rng,
              EncodeCache* cache = nullptr);

// Gradients with respect to every encoder tensor, including the trainable
// embedding rows used by the sentence.
EncoderParams encode_backward(const EncoderParams& params,
                              const EncodeCache& cache,
                              const Matrix& upstream);

// Mean over feature rows.
Matrix pool(const Matrix& features);

// Spreads d_pooled back across the rows that were averaged.
Matrix pool_backward(const Matrix& d_pooled, std::size_t rows);

}  // namespace hgda
