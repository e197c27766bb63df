#pragma once

// Campaign execution: simulation, streaming analysis, and result files.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

#include "ionbell/background.hpp"
#include "ionbell/counts.hpp"
#include "ionbell/simulator.hpp"

namespace ionbell::cli {

/// An estimator did not converge. Exit status 4; `diagnostics` goes to diagnostics.json.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, nlohmann::ordered_json diagnostics)
      : std::runtime_error(what), diagnostics(std::move(diagnostics)) {}
  nlohmann::ordered_json diagnostics;
};

/// Input data cannot be analysed (no events, missing truth flags). Exit status 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Report {
  nlohmann::ordered_json summary;
  nlohmann::ordered_json results;
  std::string summary_text;
  std::map<std::string, std::string> csv;  // file name -> content
  nlohmann::ordered_json diagnostics;
};

/// Accumulates gated events into count tables, one event at a time.
class Analyzer {
 public:
  /// Throws ConfigError unless cfg.kind is a simulated experiment.
  explicit Analyzer(const CampaignConfig& cfg);

  void add(const mc::EventRecord& e);
  void set_sidebands(const mc::SidebandTally& tally) { sidebands_ = tally; }
  void set_skipped_lines(std::size_t n) { skipped_ = n; }
  std::uint64_t n_events() const { return n_events_; }

  /// Runs every estimator. Throws DataError, InvariantError or NonConvergenceError.
  Report finish() const;

 private:
  struct Tables {
    mc::CountsTable all;
    mc::CountsTable accidental;  // truth-flagged accidentals only
  };

  estimation::BackgroundEstimate background_for(const Tables& t, int table_index, std::string& mode) const;
  double sideband_share(int table_index) const;

  CampaignConfig cfg_;
  mc::Experiment experiment_;
  std::vector<Tables> tables_;
  std::vector<mc::EventRecord> buffered_;  // window scan only
  std::optional<mc::SidebandTally> sidebands_;
  std::uint64_t n_events_ = 0;
  std::uint64_t n_with_truth_ = 0;
  std::size_t skipped_ = 0;
};

mc::Experiment experiment_for(CampaignKind kind);
bool is_simulated(CampaignKind kind);

/// Budget and rotation campaigns need no events.
Report budget_report(const CampaignConfig& cfg);
Report rotation_report(const CampaignConfig& cfg);

struct SimulationOutput {
  std::vector<mc::EventRecord> events;  // gated, truth stripped unless cfg.truth
  mc::SidebandTally sidebands;
  nlohmann::ordered_json info;
};
SimulationOutput simulate(const CampaignConfig& cfg);

nlohmann::ordered_json sidebands_to_json(const mc::SidebandTally& t);
mc::SidebandTally sidebands_from_json(const nlohmann::json& j);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes summary.json, summary.txt, results.json and the CSV tables.
void write_report(const std::filesystem::path& dir, const Report& report);

/// Full pipeline for the simulate subcommand. Returns the exit status.
int run_campaign(const CampaignConfig& cfg);

struct AnalyzeOptions {
  bool strict = false;
};
/// Analyses an event file. Reads sidebands.json next to the file when present.
int analyze_file(const CampaignConfig& cfg, const std::filesystem::path& events, const AnalyzeOptions& opt);
/// Stream form used by analyze_file. Throws like Analyzer::finish, and
/// mc::ParseError in strict mode.
Report analyze_stream(const CampaignConfig& cfg, std::istream& in, const AnalyzeOptions& opt,
                      const std::optional<mc::SidebandTally>& sidebands);

}  // namespace ionbell::cli
