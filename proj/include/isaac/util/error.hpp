#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isaac {

// Every failure the library reports is an isaac::Error carrying one of these
// codes. The HTTP service and the CLI surface code_name() verbatim.
enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  // core
  kDuplicateDimension,
  kInvalidId,
  kInvalidValue,
  kMissingRecord,
  kEmptyCorpus,
  kUnknownDimension,
  // ingest
  kFormatError,
  kEmptyFile,
  kDegenerateSample,
  kUnflaggedExtra,
  // annotate
  kNotDocumented,
  kBackendUnavailable,
  kMalformedResponse,
  kNoComments,
  // agree / stats
  kNoOverlap,
  kNothingComparable,
  // predict
  kSingularSystem,
  kMissingColumn,
  kTooFewBooks,
  kSizeOutOfRange,
  kWrongModelKind,
  // recommend
  kNoModel,
  kSchemaVersionMismatch,
  kAlreadyRated,
  // app
  kCorruptProject,
  kVersionTooNew,
  kExpectationsLocked,
  kBindError,
};

std::string_view code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace isaac
