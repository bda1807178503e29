#include "isaac/util/error.hpp"

namespace isaac {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kDuplicateDimension: return "DuplicateDimension";
    case ErrorCode::kInvalidId: return "InvalidId";
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kMissingRecord: return "MissingRecord";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownDimension: return "UnknownDimension";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kUnflaggedExtra: return "UnflaggedExtra";
    case ErrorCode::kNotDocumented: return "NotDocumented";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kNoComments: return "NoComments";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kNothingComparable: return "NothingComparable";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kTooFewBooks: return "TooFewBooks";
    case ErrorCode::kSizeOutOfRange: return "SizeOutOfRange";
    case ErrorCode::kWrongModelKind: return "WrongModelKind";
    case ErrorCode::kNoModel: return "NoModel";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kAlreadyRated: return "AlreadyRated";
    case ErrorCode::kCorruptProject: return "CorruptProject";
    case ErrorCode::kVersionTooNew: return "VersionTooNew";
    case ErrorCode::kExpectationsLocked: return "ExpectationsLocked";
    case ErrorCode::kBindError: return "BindError";
  }
  return "Unknown";
}

}  // namespace isaac
