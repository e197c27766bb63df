#include "ionbell/events.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace ionbell::mc {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(AtomicOutcome a) {
  switch (a) {
    case AtomicOutcome::plus: return "+";
    case AtomicOutcome::minus: return "-";
    case AtomicOutcome::shelved0: return "shelved0";
    case AtomicOutcome::shelved1: return "shelved1";
  }
  return "?";
}

AtomicOutcome atomic_outcome_from_string(std::string_view s) {
  if (s == "+") return AtomicOutcome::plus;
  if (s == "-") return AtomicOutcome::minus;
  if (s == "shelved0") return AtomicOutcome::shelved0;
  if (s == "shelved1") return AtomicOutcome::shelved1;
  throw std::invalid_argument("unknown atomic outcome '" + std::string(s) + "'");
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::int32_t phase_to_mrad(double phase_rad) {
  const double two_pi = 2.0 * std::numbers::pi;
  double p = std::fmod(phase_rad, two_pi);
  if (p < 0.0) p += two_pi;
  auto m = static_cast<std::int32_t>(std::floor(p * 1000.0));
  const auto max_mrad = static_cast<std::int32_t>(std::floor(two_pi * 1000.0));
  if (m > max_mrad) m = max_mrad;
  return m;
}

std::string format_event(const EventRecord& e, bool with_truth) {
  std::ostringstream s;
  s << e.run_index << ' ' << (e.passage == Passage::first ? 1 : 2) << ' ' << e.herald_time_ns
    << ' ' << protocol::to_string(e.herald) << ' ' << to_string(e.atomic) << ' '
    << protocol::to_string(e.basis) << ' ' << e.click << ' ' << e.phase_mrad;
  if (with_truth && e.accidental.has_value()) s << ' ' << (*e.accidental ? 1 : 0);
  return s.str();
}

EventRecord parse_event(std::string_view line, std::size_t n) {
  const auto f = split_fields(line);
  if (f.size() != 8 && f.size() != 9) {
    throw ParseError(n, "expected 8 or 9 fields, found " + std::to_string(f.size()));
  }
  EventRecord e;
  e.run_index = parse_integer<std::uint64_t>(f[0], n, "run_index");
  const int passage = parse_integer<int>(f[1], n, "passage");
  if (passage != 1 && passage != 2) throw ParseError(n, "passage must be 1 or 2");
  e.passage = passage == 1 ? Passage::first : Passage::second;
  e.herald_time_ns = parse_integer<std::int64_t>(f[2], n, "herald_time_ns");
  if (e.herald_time_ns < 0) throw ParseError(n, "negative herald_time_ns");
  if (f[3] == "H") {
    e.herald = Herald::H;
  } else if (f[3] == "V") {
    e.herald = Herald::V;
  } else {
    throw ParseError(n, "bad herald '" + std::string(f[3]) + "'");
  }
  try {
    e.atomic = atomic_outcome_from_string(f[4]);
    e.basis = protocol::polarization_basis_from_string(f[5]);
  } catch (const std::invalid_argument& ex) {
    throw ParseError(n, ex.what());
  }
  e.click = parse_integer<int>(f[6], n, "click");
  if (e.click != 0 && e.click != 1) throw ParseError(n, "click must be 0 or 1");
  e.phase_mrad = parse_integer<std::int32_t>(f[7], n, "phase_mrad");
  if (e.phase_mrad < 0 || e.phase_mrad > 6283) throw ParseError(n, "phase_mrad out of [0, 6283]");
  if (f.size() == 9) {
    if (f[8] == "1") {
      e.accidental = true;
    } else if (f[8] == "0") {
      e.accidental = false;
    } else {
      throw ParseError(n, "bad truth label '" + std::string(f[8]) + "'");
    }
  }
  return e;
}

void write_events(std::ostream& out, const std::vector<EventRecord>& events, bool with_truth) {
  out << "# run_index passage herald_time_ns herald atomic basis click phase_mrad"
      << (with_truth ? " truth_accidental" : "") << '\n';
  for (const auto& e : events) out << format_event(e, with_truth) << '\n';
}

StreamStats for_each_event(std::istream& in, bool strict,
                           const std::function<void(const EventRecord&)>& sink) {
  StreamStats stats;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    EventRecord e;
    try {
      e = parse_event(line, n);
    } catch (const ParseError& ex) {
      if (strict) throw;
      ++stats.skipped;
      stats.warnings.emplace_back(ex.what());
      continue;
    }
    ++stats.parsed;
    sink(e);
  }
  return stats;
}

ReadResult read_events(std::istream& in, bool strict) {
  ReadResult result;
  const StreamStats stats =
      for_each_event(in, strict, [&](const EventRecord& e) { result.events.push_back(e); });
  result.skipped = stats.skipped;
  result.warnings = stats.warnings;
  return result;
}

}  // namespace ionbell::mc
