#include "kdisc/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <sstream>
#include <tuple>
#include <vector>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename Map, typename Key>
std::uint64_t lookup(const Map& map, const Key& key) {
  const auto it = map.find(key);
  return it == map.end() ? 0 : it->second;
}

// Reads one CSV record (RFC 4180 quoting, fields may span lines).
bool read_record(std::istream& in, char delimiter, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* begin = s.data() + pos;
  auto [ptr, ec] = std::from_chars(begin, begin + len, out);
  return ec == std::errc{} && ptr == begin + len;
}

}  // namespace

EventLog::EventLog(VariantMap variants) : variants_(std::move(variants)) {
  for (const auto& [trace, count] : variants_) {
    if (count == 0) throw Error(ErrorKind::BadCount, "variant count must be positive");
    total_traces_ += count;
    total_events_ += count * trace.size();
    alphabet_.insert(trace.begin(), trace.end());
  }
}

std::uint64_t EventLog::empty_traces() const noexcept { return lookup(variants_, Trace{}); }

std::uint64_t EventLog::count(const Trace& trace) const noexcept { return lookup(variants_, trace); }

EventLogBuilder& EventLogBuilder::add(Trace trace, std::uint64_t count) {
  if (count > 0) variants_[std::move(trace)] += count;
  return *this;
}

EventLog EventLogBuilder::build() && { return EventLog(std::move(variants_)); }

std::uint64_t Dfg::edge(const Label& from, const Label& to) const { return lookup(edges, std::make_pair(from, to)); }
std::uint64_t Dfg::start(const Label& label) const { return lookup(start_freq, label); }
std::uint64_t Dfg::end(const Label& label) const { return lookup(end_freq, label); }

bool parse_iso8601(std::string_view text, std::int64_t& micros) {
  using namespace std::chrono;
  text = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return false;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) return false;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  std::size_t pos = 10;
  std::int64_t fraction_us = 0;
  std::int64_t offset_s = 0;
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != ' ') return false;
    ++pos;
    if (!read_int(text, pos, 2, h) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
        !read_int(text, pos + 3, 2, mi))
      return false;
    pos += 5;
    if (pos < text.size() && text[pos] == ':') {
      if (!read_int(text, pos + 1, 2, sec)) return false;
      pos += 3;
      if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
        ++pos;
        std::int64_t scale = 100000;
        const std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          fraction_us += (text[pos] - '0') * scale;
          scale /= 10;
          ++pos;
        }
        if (pos == start) return false;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return false;
    if (pos < text.size()) {
      if (text[pos] == 'Z') {
        ++pos;
      } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '-' ? -1 : 1;
        int oh = 0, om = 0;
        if (!read_int(text, pos + 1, 2, oh)) return false;
        pos += 3;
        if (pos < text.size() && text[pos] == ':') ++pos;
        if (pos < text.size()) {
          if (!read_int(text, pos, 2, om)) return false;
          pos += 2;
        }
        offset_s = sign * (oh * 3600 + om * 60);
      } else {
        return false;
      }
    }
    if (pos != text.size()) return false;
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t seconds = static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec - offset_s;
  micros = seconds * 1000000 + fraction_us;
  return true;
}

EventLog parse_csv_log(std::istream& in, const CsvConfig& config) {
  std::vector<std::string> header;
  if (!read_record(in, config.delimiter, header) || (header.size() == 1 && trim(header[0]).empty()))
    throw Error(ErrorKind::EmptyInput, "CSV input has no header row");
  // Byte-order mark on the first column.
  if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw Error(ErrorKind::MissingColumn, "column not found: " + name);
  };
  const std::size_t case_col = column(config.case_column);
  const std::size_t act_col = column(config.activity_column);
  const std::size_t ts_col = column(config.timestamp_column);
  const std::size_t needed = std::max({case_col, act_col, ts_col});

  struct Event {
    std::int64_t time;
    std::size_t row;
    std::string activity;
  };
  std::map<std::string, std::vector<Event>> cases;
  std::vector<std::string> fields;
  std::size_t row = 1;
  while (read_record(in, config.delimiter, fields)) {
    ++row;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() <= needed)
      throw Error(ErrorKind::MissingColumn, "row " + std::to_string(row) + " has too few fields", row);
    std::int64_t micros = 0;
    if (!parse_iso8601(fields[ts_col], micros))
      throw Error(ErrorKind::UnparseableTimestamp, "row " + std::to_string(row) + ": '" + fields[ts_col] + "'", row);
    cases[std::string(trim(fields[case_col]))].push_back(
        Event{micros, row, std::string(trim(fields[act_col]))});
  }
  if (cases.empty()) throw Error(ErrorKind::EmptyInput, "CSV input has no events");

  EventLogBuilder builder;
  for (auto& [id, events] : cases) {
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return std::tie(a.time, a.row) < std::tie(b.time, b.row); });
    Trace trace;
    trace.reserve(events.size());
    for (auto& e : events) trace.push_back(std::move(e.activity));
    builder.add(std::move(trace));
  }
  return std::move(builder).build();
}

EventLog parse_variants(std::istream& in) {
  EventLog::VariantMap variants;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto semi = line.find(';');
    if (semi == std::string_view::npos)
      throw Error(ErrorKind::BadCount, "line " + std::to_string(line_no) + ": expected '<count>;<labels>'", line_no);
    const std::string_view count_text = trim(line.substr(0, semi));
    std::uint64_t count = 0;
    auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc{} || ptr != count_text.data() + count_text.size() || count == 0)
      throw Error(ErrorKind::BadCount, "line " + std::to_string(line_no) + ": bad count '" + std::string(count_text) + "'",
                  line_no);
    Trace trace;
    std::string_view rest = trim(line.substr(semi + 1));
    if (!rest.empty()) {
      while (true) {
        const auto comma = rest.find(',');
        const std::string_view label = trim(rest.substr(0, comma));
        if (label.empty() || label.find(';') != std::string_view::npos)
          throw Error(ErrorKind::BadCount, "line " + std::to_string(line_no) + ": empty or invalid label", line_no);
        trace.emplace_back(label);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
    if (!variants.emplace(std::move(trace), count).second)
      throw Error(ErrorKind::DuplicateVariant, "line " + std::to_string(line_no) + ": variant listed twice", line_no);
  }
  return EventLog(std::move(variants));
}

EventLog parse_variants(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_variants(in);
}

std::string format_variants(const EventLog& log) {
  std::vector<std::pair<const Trace*, std::uint64_t>> rows;
  for (const auto& [trace, count] : log.variants()) rows.emplace_back(&trace, count);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string out;
  for (const auto& [trace, count] : rows) {
    out += std::to_string(count);
    out += ';';
    for (std::size_t i = 0; i < trace->size(); ++i) {
      if (i) out += ',';
      out += (*trace)[i];
    }
    out += '\n';
  }
  return out;
}

Dfg build_dfg(const EventLog& log) {
  Dfg dfg;
  dfg.alphabet = log.alphabet();
  dfg.total_traces = log.total_traces();
  for (const auto& [trace, count] : log.variants()) {
    if (trace.empty()) {
      dfg.empty_traces += count;
      continue;
    }
    dfg.start_freq[trace.front()] += count;
    dfg.end_freq[trace.back()] += count;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) dfg.edges[{trace[i], trace[i + 1]}] += count;
  }
  return dfg;
}

EventLog project_log(const EventLog& log, const LabelSet& keep) {
  EventLogBuilder builder;
  for (const auto& [trace, count] : log.variants()) {
    Trace projected;
    for (const auto& label : trace)
      if (keep.count(label)) projected.push_back(label);
    builder.add(std::move(projected), count);
  }
  return std::move(builder).build();
}

std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut) {
  return split_log(log, cut, log.alphabet());
}

std::pair<EventLog, EventLog> split_log(const EventLog& log, const Cut& cut, const LabelSet& alphabet) {
  for (const auto& label : log.alphabet())
    if (!alphabet.count(label)) throw Error(ErrorKind::InvalidPartition, "log label outside alphabet: " + label);
  require_partition(cut, alphabet);
  const auto& left = cut.sigma1;
  const auto& right = cut.sigma2;

  EventLogBuilder first;
  EventLogBuilder second;
  auto project = [](const Trace& trace, std::size_t from, std::size_t to, const LabelSet& keep) {
    Trace out;
    for (std::size_t i = from; i < to; ++i)
      if (keep.count(trace[i])) out.push_back(trace[i]);
    return out;
  };

  for (const auto& [trace, count] : log.variants()) {
    switch (cut.op) {
      case Operator::Xor: {
        std::size_t in_left = 0;
        for (const auto& label : trace) in_left += left.count(label);
        const std::size_t in_right = trace.size() - in_left;
        if (in_right > in_left)
          second.add(project(trace, 0, trace.size(), right), count);
        else
          first.add(project(trace, 0, trace.size(), left), count);
        break;
      }
      case Operator::Sequence: {
        // misplaced(i) = right-events before i + left-events at/after i
        std::size_t misplaced = 0;
        for (const auto& label : trace) misplaced += left.count(label);
        std::size_t best = misplaced;
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < trace.size(); ++i) {
          if (left.count(trace[i]))
            --misplaced;
          else
            ++misplaced;
          if (misplaced < best) {
            best = misplaced;
            best_index = i + 1;
          }
        }
        first.add(project(trace, 0, best_index, left), count);
        second.add(project(trace, best_index, trace.size(), right), count);
        break;
      }
      case Operator::Parallel:
        first.add(project(trace, 0, trace.size(), left), count);
        second.add(project(trace, 0, trace.size(), right), count);
        break;
      case Operator::Loop: {
        if (trace.empty()) {
          first.add({}, count);
          break;
        }
        if (!left.count(trace.front())) first.add({}, count);
        std::size_t start = 0;
        while (start < trace.size()) {
          const bool body = left.count(trace[start]) > 0;
          std::size_t end = start;
          while (end < trace.size() && (left.count(trace[end]) > 0) == body) ++end;
          (body ? first : second).add(Trace(trace.begin() + start, trace.begin() + end), count);
          start = end;
        }
        if (!left.count(trace.back())) first.add({}, count);
        break;
      }
    }
  }
  return {std::move(first).build(), std::move(second).build()};
}

}  // namespace kdisc
