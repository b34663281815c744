#include "hgda/errors.hpp"

namespace hgda {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_line: return "MalformedLine";
    case ErrorCode::invalid_tag: return "InvalidTag";
    case ErrorCode::dangling_inside: return "DanglingInside";
    case ErrorCode::empty_corpus: return "EmptyCorpus";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::unparsable_float: return "UnparsableFloat";
    case ErrorCode::invalid_tag_sequence: return "InvalidTagSequence";
    case ErrorCode::stale_cache: return "StaleCache";
    case ErrorCode::non_finite_score: return "NonFiniteScore";
    case ErrorCode::tag_index_out_of_range: return "TagIndexOutOfRange";
    case ErrorCode::domain_index_out_of_range: return "DomainIndexOutOfRange";
    case ErrorCode::insufficient_sentences: return "InsufficientSentences";
    case ErrorCode::no_entity_sentences: return "NoEntitySentences";
    case ErrorCode::invalid_batch_size: return "InvalidBatchSize";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::non_finite_gradient: return "NonFiniteGradient";
    case ErrorCode::negative_loss: return "NegativeLoss";
    case ErrorCode::incompatible_checkpoint: return "IncompatibleCheckpoint";
    case ErrorCode::empty_manifest: return "EmptyManifest";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace hgda
