#include "ionbell/efficiency.hpp"

#include <stdexcept>

namespace ionbell::mc {

namespace {

bool in_unit_interval(double x) { return x > 0.0 && x <= 1.0; }

}  // namespace

EfficiencyChain::EfficiencyChain() : eta_abs_first(0.0), eta_abs_second(0.0) {
  const CampaignTotals totals;
  const double pairs = totals.total_pairs();
  eta_abs_first = static_cast<double>(totals.n_coincidences_first) / pairs / detection_product();
  eta_abs_second = static_cast<double>(totals.n_coincidences_second) / pairs / detection_product();
}

void EfficiencyChain::validate() const {
  if (!in_unit_interval(eta_854_a) || !in_unit_interval(eta_854_b) || !in_unit_interval(eta_393) ||
      !in_unit_interval(eta_gate)) {
    throw std::invalid_argument("EfficiencyChain: detection efficiencies must lie in (0, 1]");
  }
  if (!(eta_abs_first >= 0.0 && eta_abs_first <= 1.0) ||
      !(eta_abs_second >= 0.0 && eta_abs_second <= 1.0)) {
    throw std::invalid_argument("EfficiencyChain: absorption efficiencies must lie in [0, 1]");
  }
}

SuccessProbabilities success_probabilities(double n_c_first, double n_c_second, double n_runs,
                                           double n_pairs) {
  if (!(n_runs > 0.0) || !(n_pairs > 0.0)) {
    throw std::domain_error("success_probabilities: run and pair counts must be positive");
  }
  if (n_c_first < 0.0 || n_c_second < 0.0) {
    throw std::domain_error("success_probabilities: negative coincidence count");
  }
  return SuccessProbabilities{n_c_first / n_runs, n_c_second / n_runs, n_c_first / n_pairs,
                              n_c_second / n_pairs};
}

double infer_absorption_efficiency(double eta_success_pair, const EfficiencyChain& chain) {
  const double product = chain.detection_product();
  if (!(product > 0.0)) {
    throw std::domain_error("infer_absorption_efficiency: detection product is zero");
  }
  if (!in_unit_interval(chain.eta_854_a) || !in_unit_interval(chain.eta_854_b) ||
      !in_unit_interval(chain.eta_393) || !in_unit_interval(chain.eta_gate)) {
    throw std::domain_error("infer_absorption_efficiency: efficiencies must lie in (0, 1]");
  }
  return eta_success_pair / product;
}

EfficiencyBudget efficiency_budget(const CampaignTotals& totals, const EfficiencyChain& chain) {
  EfficiencyBudget b{};
  b.total_exposure_s = totals.total_exposure_s();
  b.total_exposure_h = b.total_exposure_s / 3600.0;
  b.total_pairs = totals.total_pairs();
  b.success = success_probabilities(static_cast<double>(totals.n_coincidences_first),
                                    static_cast<double>(totals.n_coincidences_second),
                                    static_cast<double>(totals.n_runs), b.total_pairs);
  b.eta_abs_first = infer_absorption_efficiency(b.success.per_pair_first, chain);
  b.eta_abs_second = infer_absorption_efficiency(b.success.per_pair_second, chain);
  b.heralded_success_first = b.eta_abs_first * chain.eta_393;
  b.heralded_success_second = b.eta_abs_second * chain.eta_393;
  return b;
}

double mapping_efficiency(const MappingTotals& totals) {
  if (!(totals.heralded_photons > 0.0)) {
    throw std::domain_error("mapping_efficiency: heralded photon count must be positive");
  }
  return totals.coincidences / totals.heralded_photons;
}

}  // namespace ionbell::mc
