#include "kdisc/error.hpp"

namespace kdisc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparseableTimestamp: return "UnparseableTimestamp";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BadCount: return "BadCount";
    case ErrorKind::DuplicateVariant: return "DuplicateVariant";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::UnknownTemplate: return "UnknownTemplate";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::IdenticalArguments: return "IdenticalArguments";
    case ErrorKind::AlphabetTooSmall: return "AlphabetTooSmall";
    case ErrorKind::LabelNotInScope: return "LabelNotInScope";
    case ErrorKind::DepthLimitExceeded: return "DepthLimitExceeded";
    case ErrorKind::ExplosionGuard: return "ExplosionGuard";
    case ErrorKind::MalformedTree: return "MalformedTree";
    case ErrorKind::UnbalancedTags: return "UnbalancedTags";
    case ErrorKind::MultipleBlocks: return "MultipleBlocks";
    case ErrorKind::TransportFailure: return "TransportFailure";
    case ErrorKind::RepairExhausted: return "RepairExhausted";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), line_(line) {}

}  // namespace kdisc
