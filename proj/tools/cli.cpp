#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "kdisc/declare.hpp"
#include "kdisc/discovery.hpp"
#include "kdisc/event_log.hpp"
#include "kdisc/service.hpp"
#include "kdisc/session.hpp"
#include "kdisc/workflow_net.hpp"

namespace kdisc::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << content;
}

EventLog load_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read log " + path);
  auto ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") return parse_csv_log(in);
  return parse_variants(in);
}

void print_report(std::ostream& os, const ValidationReport& report) {
  for (const auto& item : report.items) {
    os << (item.severity == Severity::Error ? "error" : "warning") << ": " << item.kind;
    if (!item.line.empty()) os << " in '" << item.line << "'";
    os << ": " << item.message;
    if (item.suggestion && item.message.find(*item.suggestion) == std::string::npos)
      os << " (suggestion: " << *item.suggestion << ")";
    os << '\n';
  }
}

std::string fixed3(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << v;
  return ss.str();
}

std::string format_trace(const Trace& t) {
  std::string s = "<";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + t[i];
  return s + ">";
}

// Strict parse plus validation against the log alphabet. Returns nullopt and
// reports on failure.
std::optional<std::vector<DeclareRule>> load_rules(const std::string& path, const EventLog& log, std::ostream& err,
                                                   int& code) {
  const auto rules = parse_rules(read_file(path));
  const auto report = validate_rules(rules, log.alphabet());
  print_report(err, report);
  if (!report.passed()) {
    code = kValidationFailure;
    return std::nullopt;
  }
  return rules;
}

struct DiscoverOptions {
  std::string log;
  std::string rules;
  double sup = 0.2;
  std::string out;
  std::string format = "tree-text";
  std::size_t workers = 1;
};

int cmd_discover(const DiscoverOptions& o, std::ostream& out, std::ostream& err) {
  const auto format = parse_export_format(o.format);
  if (!format) throw Error(ErrorKind::InvalidArgument, "unknown format '" + o.format + "'");
  const auto log = load_log(o.log);
  std::vector<DeclareRule> rules;
  if (!o.rules.empty()) {
    int code = kOk;
    auto loaded = load_rules(o.rules, log, err, code);
    if (!loaded) return code;
    rules = std::move(*loaded);
  }
  DiscoveryParams params;
  params.sup = o.sup;
  params.workers = o.workers;
  const auto report = run_discovery(log, rules, params);
  const auto model = export_model(report.tree, *format);

  std::ostream& summary = o.out.empty() ? err : out;
  summary << "activities: " << report.alphabet_size << "\nvariants: " << report.variants
          << "\ntraces: " << report.traces << "\ntop-level cut: "
          << (report.top_cut ? to_string(*report.top_cut) : std::string("none")) << '\n';
  for (const auto& v : report.verdicts) {
    summary << format_rule(v.rule) << ": " << v.status;
    if (v.witness) summary << " " << format_trace(*v.witness);
    if (v.status == "holds" && !v.exact) summary << " (bounded)";
    summary << '\n';
  }
  if (o.out.empty())
    out << model;
  else
    write_file(o.out, model);
  return kOk;
}

int cmd_rules_check(const std::string& log_path, const std::string& rules_path, std::ostream& out) {
  const auto log = load_log(log_path);
  const auto rules = parse_rules(read_file(rules_path));
  const auto report = validate_rules(rules, log.alphabet());
  for (const auto& rule : rules)
    out << format_rule(rule) << "\tconfidence " << fixed3(confidence(rule, log)) << "\tactivation "
        << fixed3(activation_confidence(rule, log)) << '\n';
  print_report(out, report);
  out << "validation: " << (report.passed() ? "pass" : "fail") << '\n';
  return report.passed() ? kOk : kValidationFailure;
}

int cmd_rules_mine(const std::string& log_path, double min_conf, const std::string& out_path, std::ostream& out) {
  const auto log = load_log(log_path);
  const auto text = format_rules(mine_rules(log, min_conf));
  const auto body = text.empty() ? text : text + "\n";
  if (out_path.empty())
    out << body;
  else
    write_file(out_path, body);
  return kOk;
}

struct ExtractOptions {
  std::string log;
  std::string description;
  std::string transcript;
  std::string record;
  std::vector<std::string> answers;
  bool interactive = false;
  std::string out;
  std::size_t max_repairs = RefinementSession::kDefaultMaxRepairs;
};

std::string read_answers(std::istream& in) {
  std::string text, line;
  while (std::getline(in, line)) {
    if (line == ".") break;
    text += line + '\n';
  }
  return text;
}

int cmd_extract(const ExtractOptions& o, std::istream& in, std::ostream& out, std::ostream& err,
                ChatTransport* injected) {
  const auto log = load_log(o.log);
  const auto description = read_file(o.description);

  std::unique_ptr<ChatTransport> owned;
  ChatTransport* transport = injected;
  if (!transport) {
    if (!o.transcript.empty()) {
      owned = std::make_unique<ScriptedTransport>(load_transcript(o.transcript));
    } else if (auto config = HttpTransportConfig::from_env()) {
      owned = std::make_unique<HttpChatTransport>(*config);
    } else {
      throw Error(ErrorKind::TransportFailure, "no --transcript given and KDISC_LLM_ENDPOINT is not set");
    }
    transport = owned.get();
  }
  std::optional<RecordingTransport> recorder;
  if (!o.record.empty()) {
    recorder.emplace(*transport);
    transport = &*recorder;
  }

  RefinementSession session("cli", o.log, log.alphabet(), o.max_repairs);
  auto outcome = session.propose_rules(*transport, description);
  std::size_t next_answer = 0;
  while (outcome.asked_questions()) {
    err << "questions:\n";
    for (std::size_t i = 0; i < outcome.questions.size(); ++i) err << "  " << i + 1 << ". " << outcome.questions[i] << '\n';
    std::string answers;
    if (next_answer < o.answers.size()) {
      answers = read_file(o.answers[next_answer++]);
    } else if (o.interactive) {
      err << "answers (end with a line containing only '.'):\n" << std::flush;
      answers = read_answers(in);
    } else {
      err << "the assistant asked questions; pass --answers or --interactive\n";
      return kValidationFailure;
    }
    outcome = session.propose_rules(*transport, answers);
  }
  if (recorder) save_transcript(o.record, recorder->records());
  print_report(err, outcome.report);
  if (outcome.repairs > 0) err << "repair rounds: " << outcome.repairs << '\n';
  std::vector<DeclareRule> rules;
  for (const auto& r : session.rules()) rules.push_back(r.rule);
  const auto text = format_rules(rules);
  if (o.out.empty())
    out << text;
  else
    write_file(o.out, text);
  return kOk;
}

int cmd_serve(const std::string& data_dir, const std::string& bind, const std::string& transcript, std::ostream& out) {
  TransportProvider provider = env_transport_provider();
  if (!transcript.empty()) {
    auto scripted = std::make_shared<ScriptedTransport>(load_transcript(transcript));
    provider = [scripted](const std::string&) -> ChatTransport& { return *scripted; };
  }
  Service service(data_dir, provider);
  out << "serving " << data_dir << " on " << bind << std::endl;
  service.serve(bind);
  return kOk;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn:
    case ErrorKind::UnparseableTimestamp:
    case ErrorKind::EmptyInput:
    case ErrorKind::BadCount:
    case ErrorKind::DuplicateVariant:
    case ErrorKind::UnknownTemplate:
    case ErrorKind::ArityMismatch:
    case ErrorKind::MalformedLine:
    case ErrorKind::IdenticalArguments:
    case ErrorKind::MalformedTree:
    case ErrorKind::Io:
    case ErrorKind::NotFound:
    case ErrorKind::InvalidArgument: return kParseFailure;
    case ErrorKind::TransportFailure: return kTransportFailure;
    case ErrorKind::RepairExhausted: return kRepairExhausted;
    default: return kInternalFailure;
  }
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
        ChatTransport* transport) {
  CLI::App app{"Rule-guided process discovery", "kdisc"};
  app.require_subcommand(1);

  DiscoverOptions discover;
  auto* c_discover = app.add_subcommand("discover", "discover a process model from an event log");
  c_discover->add_option("--log", discover.log, "event log (.csv or variants file)")->required();
  c_discover->add_option("--rules", discover.rules, "declarative rules file");
  c_discover->add_option("--sup", discover.sup, "missing-edge penalty weight")->check(CLI::Range(0.0, 1.0));
  c_discover->add_option("--out", discover.out, "output file (stdout when absent)");
  c_discover->add_option("--format", discover.format, "tree-text, tree-json, dot or pnml")
      ->check(CLI::IsMember({"tree-text", "tree-json", "dot", "pnml"}));
  c_discover->add_option("--workers", discover.workers, "threads for cut scoring")->check(CLI::PositiveNumber);

  auto* c_rules = app.add_subcommand("rules", "check or mine declarative rules");
  c_rules->require_subcommand(1);
  std::string check_log, check_rules;
  auto* c_check = c_rules->add_subcommand("check", "confidence and validation of a rules file");
  c_check->add_option("--log", check_log)->required();
  c_check->add_option("--rules", check_rules)->required();
  std::string mine_log, mine_out;
  double min_conf = 1.0;
  auto* c_mine = c_rules->add_subcommand("mine", "rules holding with at least the given confidence");
  c_mine->add_option("--log", mine_log)->required();
  c_mine->add_option("--min-confidence", min_conf)->check(CLI::Range(0.0, 1.0));
  c_mine->add_option("--out", mine_out);

  ExtractOptions extract;
  auto* c_extract = app.add_subcommand("extract", "derive rules from a process description through an LLM");
  c_extract->add_option("--log", extract.log)->required();
  c_extract->add_option("--description", extract.description, "business context or feedback text")->required();
  c_extract->add_option("--transcript", extract.transcript, "scripted transcript to replay instead of a live model");
  c_extract->add_option("--record", extract.record, "write the exchanged requests and responses here");
  c_extract->add_option("--answers", extract.answers, "answer files for question rounds, in order");
  c_extract->add_flag("--interactive", extract.interactive, "read answers from the console");
  c_extract->add_option("--out", extract.out);
  c_extract->add_option("--max-repairs", extract.max_repairs);

  std::string data_dir = "kdisc-data", bind = "127.0.0.1:8080", serve_transcript;
  auto* c_serve = app.add_subcommand("serve", "HTTP service for refinement sessions");
  c_serve->add_option("--data-dir", data_dir);
  c_serve->add_option("--bind", bind, "host:port");
  c_serve->add_option("--transcript", serve_transcript, "scripted transcript shared by all sessions");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseFailure;
  }

  try {
    if (*c_discover) return cmd_discover(discover, out, err);
    if (*c_check) return cmd_rules_check(check_log, check_rules, out);
    if (*c_mine) {
      if (min_conf <= 0.0) throw Error(ErrorKind::InvalidArgument, "--min-confidence must lie in (0, 1]");
      return cmd_rules_mine(mine_log, min_conf, mine_out, out);
    }
    if (*c_extract) return cmd_extract(extract, in, out, err, transport);
    if (*c_serve) return cmd_serve(data_dir, bind, serve_transcript, out);
  } catch (const RepairExhaustedError& e) {
    err << e.what() << '\n';
    print_report(err, e.report());
    return kRepairExhausted;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalFailure;
  }
  return kInternalFailure;
}

}  // namespace kdisc::cli
