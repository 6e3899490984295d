#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "kdisc/cut.hpp"

namespace kdisc {

/// Multiset of traces, stored as variants with positive counts. Immutable once
/// built; the alphabet is derived from the variants.
class EventLog {
 public:
  using VariantMap = std::map<Trace, std::uint64_t>;

  EventLog() = default;
  /// Throws BadCount if any count is zero.
  explicit EventLog(VariantMap variants);

  const VariantMap& variants() const noexcept { return variants_; }
  const LabelSet& alphabet() const noexcept { return alphabet_; }
  std::uint64_t total_traces() const noexcept { return total_traces_; }
  std::uint64_t total_events() const noexcept { return total_events_; }
  std::uint64_t empty_traces() const noexcept;
  std::uint64_t count(const Trace& trace) const noexcept;
  bool empty() const noexcept { return variants_.empty(); }

  bool operator==(const EventLog& other) const { return variants_ == other.variants_; }

 private:
  VariantMap variants_;
  LabelSet alphabet_;
  std::uint64_t total_traces_ = 0;
  std::uint64_t total_events_ = 0;
};

/// Accumulates traces, merging identical ones.
class EventLogBuilder {
 public:
  EventLogBuilder& add(Trace trace, std::uint64_t count = 1);
  EventLog build() &&;

 private:
  EventLog::VariantMap variants_;
};

/// Directly-follows graph with artificial start/end frequencies.
struct Dfg {
  std::map<std::pair<Label, Label>, std::uint64_t> edges;
  std::map<Label, std::uint64_t> start_freq;
  std::map<Label, std::uint64_t> end_freq;
  std::uint64_t empty_traces = 0;
  std::uint64_t total_traces = 0;
  LabelSet alphabet;

  std::uint64_t edge(const Label& from, const Label& to) const;
  std::uint64_t start(const Label& label) const;
  std::uint64_t end(const Label& label) const;
};

struct CsvConfig {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  char delimiter = ',';
};

EventLog parse_csv_log(std::istream& in, const CsvConfig& config = {});
EventLog parse_variants(std::istream& in);
EventLog parse_variants(std::string_view text);
std::string format_variants(const EventLog& log);

/// Parses an ISO-8601 timestamp into microseconds since the Unix epoch.
/// Accepts date-only values, 'T' or space separators, fractional seconds and
/// 'Z' / +HH:MM offsets. Returns false when the text is not a timestamp.
bool parse_iso8601(std::string_view text, std::int64_t& micros);

Dfg build_dfg(const EventLog& log);

EventLog project_log(const EventLog& log, const LabelSet& keep);

/// Splits `log` according to `cut`; throws InvalidPartition unless the cut
/// partitions the log's alphabet.
std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut);

/// Same as split_log, but `alphabet` may be a superset of the log's alphabet
/// (used by the discovery recursion where labels can vanish from a sub-log).
std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut, const LabelSet& alphabet);

}  // namespace kdisc
