#pragma once

// Campaign configuration: a JSON document whose every key is optional.
// An empty object {} selects the published apparatus values.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "ionbell/efficiency.hpp"
#include "ionbell/rotation.hpp"
#include "ionbell/simulator.hpp"

namespace ionbell::cli {

enum class CampaignKind {
  mapping,
  entanglement_transfer,
  teleportation,
  efficiency_budget,
  window_scan,
  rotation_estimate,
};

std::string_view to_string(CampaignKind k);
CampaignKind campaign_kind_from_string(std::string_view s);

/// Malformed document, wrong types, or unknown keys. Exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed but physically or logically invalid values. Exit status 3.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackgroundSource { automatic, truth, none, fraction };

struct AnalysisConfig {
  int bootstrap = 200;
  std::uint64_t bootstrap_seed = 20220311;
  BackgroundSource background = BackgroundSource::automatic;
  double background_fraction = 0.0;  // used with BackgroundSource::fraction
  int ml_max_iterations = 100000;
};

struct DephasingCalibration {
  bool enabled = true;  // false: use sigma_rate_per_s as given
  double slope_per_s = -200.0;
  double fit_start_s = 0.0;
  double fit_end_s = 300e-6;
  /// Coherence contrast of the monitored state. Unset: p (1 - f) from the
  /// source and background models.
  std::optional<double> contrast;
};

struct ScanConfig {
  double width_s = 50e-6;
  double step_s = 50e-6;
};

struct RotationConfig {
  int n_vectors = 37;
  double noise = 0.01;
  estimation::Vec3 axis{1.0, 2.0, 3.0};
  double angle_deg = 40.0;
  std::uint64_t seed = 1;
};

struct CampaignConfig {
  CampaignKind kind = CampaignKind::entanglement_transfer;
  mc::RunConfig run;
  mc::SimulationModels models;
  mc::ExperimentInputs inputs;
  DephasingCalibration dephasing_calibration;
  mc::CampaignTotals totals;
  mc::MappingTotals mapping_totals;
  AnalysisConfig analysis;
  ScanConfig scan;
  RotationConfig rotation;
  std::filesystem::path out_dir = "out";
  bool truth = false;
  bool write_events = true;

  CampaignConfig();
};

/// Accidental fraction implied by the gap between corrected and uncorrected
/// first-passage fidelities (0.824 vs 0.780) for a white background: f = gap / (F_c - 1/4).
double default_accidental_fraction();

/// Throws ConfigError.
CampaignConfig parse_config(const nlohmann::json& doc);
CampaignConfig load_config(const std::filesystem::path& path);

/// Runs every sub-config's own validation plus the derived checks (calibrated
/// dephasing, absorption scale <= 1). Throws InvariantError.
void finalize(CampaignConfig& cfg);

/// The effective configuration as JSON (for provenance in outputs).
nlohmann::ordered_json to_json(const CampaignConfig& cfg);

}  // namespace ionbell::cli
