#pragma once

// Rate and efficiency arithmetic for heralded-absorption coincidences.

#include <cstdint>

namespace ionbell::mc {

/// Published campaign totals used as defaults throughout.
struct CampaignTotals {
  std::uint64_t n_runs = 511'670'886;
  double exposure_s = 350e-6;
  std::uint64_t n_coincidences_first = 89'838;
  std::uint64_t n_coincidences_second = 11'322;
  double pair_rate_per_power = 5.17e4;  // 1 / (s mW)
  double pump_power_mw = 15.0;

  double total_exposure_s() const { return static_cast<double>(n_runs) * exposure_s; }
  double total_pairs() const { return total_exposure_s() * pair_rate_per_power * pump_power_mw; }
};

struct EfficiencyChain {
  double eta_854_a = 0.30;    // source to ion coupling
  double eta_854_b = 0.126;   // partner detection, arm B
  double eta_393 = 0.0164;    // herald detection
  double eta_gate = 0.999;    // nominal coincidence-gate acceptance
  double eta_abs_first;       // absorption (and herald emission) per incoming photon
  double eta_abs_second;

  /// Absorption efficiencies default to the values inferred from CampaignTotals{}.
  EfficiencyChain();

  double detection_product() const { return eta_854_a * eta_854_b * eta_393 * eta_gate; }
  /// Throws std::invalid_argument unless detection efficiencies lie in (0, 1]
  /// and absorption efficiencies in [0, 1].
  void validate() const;
};

struct SuccessProbabilities {
  double per_run_first = 0.0;
  double per_run_second = 0.0;
  double per_pair_first = 0.0;
  double per_pair_second = 0.0;
};

/// The four coincidence quotients. Throws std::domain_error on a zero denominator.
SuccessProbabilities success_probabilities(double n_c_first, double n_c_second, double n_runs,
                                           double n_pairs);

/// eta_success_pair / (eta_854_A eta_854_B eta_393 eta_gate).
double infer_absorption_efficiency(double eta_success_pair, const EfficiencyChain& chain);

struct EfficiencyBudget {
  double total_exposure_s;
  double total_exposure_h;
  double total_pairs;
  SuccessProbabilities success;
  double eta_abs_first;
  double eta_abs_second;
  /// eta_abs * eta_393: success probability of a single heralded absorption.
  double heralded_success_first;
  double heralded_success_second;
};

EfficiencyBudget efficiency_budget(const CampaignTotals& totals, const EfficiencyChain& chain);

/// Photon-to-atom mapping probability per fiber-coupled photon: detected
/// (background-corrected) coincidences divided by heralded photons.
struct MappingTotals {
  std::uint64_t n_runs = 113'000'000;
  double heralded_photons = 9.3e8;
  double coincidences = 7810.0;
};
double mapping_efficiency(const MappingTotals& totals);

}  // namespace ionbell::mc
