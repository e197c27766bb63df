#pragma once

// Per-coincidence event records and their line-oriented text form.
//
// One record per line, whitespace separated, in this order:
//
//   run_index passage herald_time_ns herald atomic basis click phase_mrad [truth_accidental]
//
// passage is 1 or 2, herald H|V, atomic one of + - shelved0 shelved1, basis
// HV|DA|RL, click 0|1, and the optional truth column is 1 for an accidental
// coincidence, 0 otherwise.
// Lines that are empty or start with '#' are ignored.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ionbell/protocol.hpp"

namespace ionbell::mc {

using protocol::Herald;
using protocol::Passage;
using protocol::PolarizationBasis;

/// Atomic readout: projection onto |+>_S / |->_S after a pi/2 pulse, or
/// shelving-based detection in the S1/2 m = -1/2 (shelved0) / +1/2 (shelved1) basis.
enum class AtomicOutcome { plus, minus, shelved0, shelved1 };

std::string_view to_string(AtomicOutcome a);
AtomicOutcome atomic_outcome_from_string(std::string_view s);

/// True for the shelving (z) readout.
inline bool is_shelving(AtomicOutcome a) {
  return a == AtomicOutcome::shelved0 || a == AtomicOutcome::shelved1;
}
/// 0 for plus / shelved0, 1 for minus / shelved1.
inline int atomic_bit(AtomicOutcome a) {
  return (a == AtomicOutcome::minus || a == AtomicOutcome::shelved1) ? 1 : 0;
}

struct EventRecord {
  std::uint64_t run_index = 0;
  Passage passage = Passage::first;
  std::int64_t herald_time_ns = 0;
  Herald herald = Herald::H;
  AtomicOutcome atomic = AtomicOutcome::plus;
  PolarizationBasis basis = PolarizationBasis::HV;
  int click = 0;
  std::int32_t phase_mrad = 0;  // frame phase in [0, 2 pi), milliradians
  std::optional<bool> accidental;  // ground truth, when known

  // In-memory only: herald-to-partner delay. Not serialized.
  double partner_delay_ns = 0.0;

  double phase_rad() const { return 1e-3 * static_cast<double>(phase_mrad); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string format_event(const EventRecord& e, bool with_truth);
/// Throws ParseError (line number as given) on a malformed record.
EventRecord parse_event(std::string_view line, std::size_t line_number = 0);

void write_events(std::ostream& out, const std::vector<EventRecord>& events, bool with_truth);

struct ReadResult {
  std::vector<EventRecord> events;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;  // one per skipped line
};

struct StreamStats {
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Parses line by line and hands each record to `sink` without buffering the file.
StreamStats for_each_event(std::istream& in, bool strict,
                           const std::function<void(const EventRecord&)>& sink);

/// Strict mode throws ParseError on the first bad line; lenient mode skips
/// it and records a warning that names the line.
ReadResult read_events(std::istream& in, bool strict);

/// Phase in [0, 2 pi) rounded to the serialized resolution.
std::int32_t phase_to_mrad(double phase_rad);

}  // namespace ionbell::mc
