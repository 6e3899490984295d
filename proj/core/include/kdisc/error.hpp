#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kdisc {

enum class ErrorKind {
  // event_log
  MissingColumn,
  UnparseableTimestamp,
  EmptyInput,
  BadCount,
  DuplicateVariant,
  InvalidPartition,
  // declare_rules
  EmptyLog,
  UnknownTemplate,
  ArityMismatch,
  MalformedLine,
  IdenticalArguments,
  // discovery
  AlphabetTooSmall,
  LabelNotInScope,
  DepthLimitExceeded,
  // model_io
  ExplosionGuard,
  MalformedTree,
  // llm_bridge
  UnbalancedTags,
  MultipleBlocks,
  TransportFailure,
  RepairExhausted,
  InvalidState,
  // service
  NotFound,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  // 1-based input line, when the error is tied to one.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace kdisc
