#pragma once

#include <stdexcept>
#include <string>

namespace hgda {

enum class ErrorCode {
  malformed_line,
  invalid_tag,
  dangling_inside,
  empty_corpus,
  dimension_mismatch,
  unparsable_float,
  invalid_tag_sequence,
  stale_cache,
  non_finite_score,
  tag_index_out_of_range,
  domain_index_out_of_range,
  insufficient_sentences,
  no_entity_sentences,
  invalid_batch_size,
  non_finite_loss,
  non_finite_gradient,
  negative_loss,
  incompatible_checkpoint,
  empty_manifest,
  invalid_config,
  io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace hgda
