// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "campaign.hpp"
#include "config.hpp"
#include "generators.hpp"
#include "json.hpp"

#include "ionbell/counts.hpp"
#include "ionbell/efficiency.hpp"
#include "ionbell/fringe.hpp"
#include "ionbell/process.hpp"
#include "ionbell/protocol.hpp"
#include "ionbell/simulator.hpp"
#include "ionbell/tomography.hpp"

namespace {

using namespace ionbell;
using cli::CampaignConfig;
using cli::CampaignKind;
using protocol::AtomicProjection;
using protocol::Herald;
using protocol::Passage;
using qmath::BellState;
using qmath::Complex;
using qmath::Matrix;
using qmath::Pauli;
using qmath::Vector;
namespace fs = std::filesystem;

// Tolerances.
constexpr double kIdentityTol = 1e-12;
constexpr double kIdentitySeconds = 1.0;
constexpr double kTeleportStateTol = 1e-10;
constexpr double kChiTol = 1e-6;
constexpr double kLinearTol = 1e-12;
constexpr double kWernerFidelity = 0.9164;
constexpr double kWernerTol = 0.01;
constexpr double kMlSeconds = 60.0;
constexpr double kRawVisibility = 0.9886;
constexpr double kRawVisibilityTol = 0.002;
constexpr double kCorrectedVisibilityTol = 0.005;
constexpr double kScanSlopeRelTol = 0.10;
constexpr double kTransferLo = 0.74, kTransferHi = 0.90;
constexpr double kTeleportLo = 0.65, kTeleportHi = 0.90;
constexpr double kTruthRecoveryTol = 0.02;

struct Line {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const Line& l) {
  std::printf("criterion %d: %s  %s\n", id, l.pass ? "PASS" : "FAIL", l.detail.c_str());
  std::fflush(stdout);
  if (!l.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

const double kS = 1.0 / std::sqrt(2.0);
const Complex kI{0.0, 1.0};

Vector bell_literal(BellState b) {
  Vector v = Vector::Zero(4);
  switch (b) {
    case BellState::phi_plus: v(0) = kS; v(3) = kS; break;
    case BellState::phi_minus: v(0) = kS; v(3) = -kS; break;
    case BellState::psi_plus: v(1) = kS; v(2) = kS; break;
    case BellState::psi_minus: v(1) = kS; v(2) = -kS; break;
  }
  return v;
}

// ---------------------------------------------------------------------------

Line bell_identities() {
  struct Identity {
    Passage passage;
    Herald herald;
    AtomicProjection atomic;
    BellState bell;
    Complex printed;
  };
  const Identity ids[] = {
      {Passage::first, Herald::H, AtomicProjection::plus, BellState::phi_plus, kS},
      {Passage::first, Herald::V, AtomicProjection::minus, BellState::phi_plus, kS},
      {Passage::first, Herald::H, AtomicProjection::minus, BellState::phi_minus, kI * kS},
      {Passage::first, Herald::V, AtomicProjection::plus, BellState::phi_minus, -kI * kS},
      {Passage::second, Herald::H, AtomicProjection::plus, BellState::psi_plus, kS},
      {Passage::second, Herald::V, AtomicProjection::minus, BellState::psi_plus, kS},
      {Passage::second, Herald::H, AtomicProjection::minus, BellState::psi_minus, kI * kS},
      {Passage::second, Herald::V, AtomicProjection::plus, BellState::psi_minus, -kI * kS},
  };
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int sign_flipped = 0;
  for (const Identity& id : ids) {
    const Vector h = protocol::herald_state(id.herald).amplitudes();
    const Vector a = protocol::ground_state(id.atomic).amplitudes();
    Vector ha(4);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) ha(2 * i + j) = h(i) * a(j);
    }
    const Eigen::RowVectorXcd row = ha.adjoint() * protocol::raman_operator(id.passage).matrix();
    const Eigen::RowVectorXcd want = id.printed * bell_literal(id.bell).adjoint();
    double err = (row - want).cwiseAbs().maxCoeff();
    // The printed phases of the psi- pair are opposite to those implied by the
    // stated herald and ground-state conventions; accept that overall sign only.
    if (err > kIdentityTol && id.bell == BellState::psi_minus) {
      err = (row + want).cwiseAbs().maxCoeff();
      ++sign_flipped;
    }
    worst = std::max(worst, err);
  }
  Matrix sum = Matrix::Zero(4, 4);
  for (const auto& o : protocol::all_bell_outcomes()) sum += protocol::bell_povm_element(o).matrix();
  const double completeness = max_abs(sum - Matrix::Identity(4, 4));
  const double t = seconds_since(t0);
  return {worst < kIdentityTol && completeness < kIdentityTol && t < kIdentitySeconds,
          "max identity error " + fmt("%.1e", worst) + ", completeness " + fmt("%.1e", completeness) + ", " +
              std::to_string(sign_flipped) + " psi- phases opposite to printed, " + fmt("%.3f s", t)};
}

Line passage_partition() {
  const Matrix r1 = protocol::raman_operator(Passage::first).matrix();
  const Matrix r2 = protocol::raman_operator(Passage::second).matrix();
  const double err = max_abs(r1.adjoint() * r1 + r2.adjoint() * r2 - Matrix::Identity(4, 4));
  return {err < kIdentityTol, "|R1'R1 + R2'R2 - I| = " + fmt("%.1e", err)};
}

mc::CountsTable exact_teleport_table(BellState bell, const std::vector<qmath::StateVector>& inputs, double n) {
  const int n_bins = 12;
  mc::CountsTable t(3 * static_cast<int>(inputs.size()), 2, n_bins);
  const Matrix resource = bell_literal(BellState::psi_minus) * bell_literal(BellState::psi_minus).adjoint();
  const auto outcomes = protocol::all_bell_outcomes();
  const auto outcome =
      *std::find_if(outcomes.begin(), outcomes.end(), [bell](const auto& o) { return o.bell() == bell; });
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (int bin = 0; bin < n_bins; ++bin) {
      const Matrix rho_d = estimation::rotated_input(inputs[i], mc::bin_centre(bin, n_bins), 1.0);
      Matrix partner = protocol::teleport_partner_state(outcome, resource, rho_d);
      partner /= partner.trace().real();
      for (int b = 0; b < 3; ++b) {
        const auto basis = protocol::kPolarizationBases[b];
        for (int click = 0; click < 2; ++click) {
          const Vector s = protocol::polarization_state(basis, click).amplitudes();
          t.at(3 * static_cast<int>(i) + b, click, bin) = n * (s.adjoint() * partner * s)(0, 0).real();
        }
      }
    }
  }
  return t;
}

Line ideal_teleportation() {
  ionbell::test_support::Gen g(2022);
  const Matrix resource = bell_literal(BellState::psi_minus) * bell_literal(BellState::psi_minus).adjoint();
  double worst_state = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector in = g.ket(2);
    const Matrix rho_in = in * in.adjoint();
    for (const auto& o : protocol::all_bell_outcomes()) {
      Matrix partner = protocol::teleport_partner_state(o, resource, rho_in);
      partner /= partner.trace().real();
      const Matrix p = qmath::pauli(protocol::pauli_correction(o.bell())).matrix();
      const double f = (in.adjoint() * p * partner * p.adjoint() * in)(0, 0).real();
      worst_state = std::max(worst_state, std::abs(1.0 - f));
    }
  }
  const auto inputs = mc::ExperimentInputs::default_teleport_inputs();
  double worst_chi = 0.0;
  std::string chi_detail;
  for (BellState b : qmath::kBellStates) {
    const auto data = estimation::teleport_process_data(exact_teleport_table(b, inputs, 1e5), inputs, false);
    const auto r = estimation::ml_process_reconstruct(data);
    const Pauli expected = protocol::pauli_correction(b);
    worst_chi = std::max(worst_chi, std::abs(1.0 - r.chi.diagonal()[static_cast<int>(expected)]));
    chi_detail += std::string(qmath::to_string(b)) + "->" + std::string(qmath::to_string(expected)) + " ";
  }
  return {worst_state < kTeleportStateTol && worst_chi < kChiTol,
          "state error " + fmt("%.1e", worst_state) + ", chi error " + fmt("%.1e", worst_chi) + " (" + chi_detail +
              ")"};
}

Line tomography_round_trip() {
  ionbell::test_support::Gen g(4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix rho = g.density(4, g.integer(1, 4));
    const auto lin = estimation::linear_state_reconstruct(estimation::exact_expectations(rho));
    worst = std::max(worst, qmath::trace_distance(lin.rho, rho));
  }

  // Werner source through an otherwise ideal first passage.
  const auto t0 = std::chrono::steady_clock::now();
  mc::RunConfig cfg;
  cfg.seed = 8885;
  cfg.emission_prob = 1.0;
  mc::SimulationModels m;
  m.source.werner_weight = 0.8885;
  m.dephasing.sigma_rate_per_s = 0.0;
  m.background.accidental_fraction = 0.0;
  m.chain.eta_854_a = m.chain.eta_854_b = m.chain.eta_393 = m.chain.eta_gate = 1.0;
  m.chain.eta_abs_first = m.chain.eta_abs_second = 0.5;
  // Enough runs for a little over 1e5 first-passage events.
  const double per_run = mc::expected_rates(cfg, m, Passage::first).total_in_gate();
  cfg.n_runs = static_cast<std::uint64_t>(std::ceil(1.05e5 / per_run));
  const auto sim = mc::simulate_runs(cfg, m, mc::Experiment::entanglement_transfer);
  const auto events = mc::coincidence_gate(sim.candidates, cfg.gate_halfwidth_s, cfg);
  mc::CountsTable table = mc::transfer_counts(events, Passage::first, cfg.larmor_bins);
  const double n_events = table.total();
  const auto ml = estimation::ml_state_reconstruct(table, true);
  const Vector psi = bell_literal(BellState::psi_minus);
  const double f = (psi.adjoint() * ml.rho * psi)(0, 0).real();
  const double t = seconds_since(t0);
  return {worst < kLinearTol && std::abs(f - kWernerFidelity) <= kWernerTol && n_events >= 1e5 && t < kMlSeconds,
          "linear " + fmt("%.1e", worst) + ", ML fidelity " + fmt("%.4f", f) + " from " + fmt("%.0f", n_events) +
              " events, " + fmt("%.1f s", t)};
}

Line binning_correction() {
  const int n = 12;
  const double w = 2 * std::numbers::pi / n;
  const double v = 1.0, phi0 = 0.4, trials = 1e6;
  std::vector<estimation::FringePoint> pts;
  for (int b = 0; b < n; ++b) {
    const double lo = w * b, hi = w * (b + 1);
    // Exact bin average of (V/2) sin(x - phi0) + 1/2.
    const double p = 0.5 + 0.5 * v * (std::cos(lo - phi0) - std::cos(hi - phi0)) / w;
    pts.push_back({w * (b + 0.5), trials * p, trials});
  }
  const auto raw = estimation::fit_fringe(pts, false);
  const auto cor = estimation::fit_fringe(pts, true);
  return {std::abs(raw.visibility - kRawVisibility) <= kRawVisibilityTol &&
              std::abs(cor.visibility - 1.0) <= kCorrectedVisibilityTol,
          "uncorrected " + fmt("%.4f", raw.visibility) + ", corrected " + fmt("%.4f", cor.visibility)};
}

// True when `value`, printed with `digits` significant digits, is within one
// unit of the last digit of `published`.
bool matches_printed(double value, double published, int digits) {
  const double unit = std::pow(10.0, std::floor(std::log10(std::abs(published))) - (digits - 1));
  return std::abs(value - published) <= unit * (1.0 + 1e-9);
}

Line efficiency_budget() {
  const auto b = mc::efficiency_budget(mc::CampaignTotals{}, mc::EfficiencyChain{});
  struct Row {
    const char* name;
    double value, published;
    int digits;
  };
  const Row rows[] = {
      {"per_run_first", b.success.per_run_first, 1.76e-4, 3},
      {"per_run_second", b.success.per_run_second, 2.21e-5, 3},
      {"per_pair_first", b.success.per_pair_first, 6.47e-7, 3},
      {"per_pair_second", b.success.per_pair_second, 8.15e-8, 3},
      {"total_pairs", b.total_pairs, 1.3888e11, 5},
      {"eta_abs_first", b.eta_abs_first, 1.04e-3, 3},
      {"eta_abs_second", b.eta_abs_second, 1.32e-4, 3},
  };
  bool ok = true;
  std::string detail;
  for (const Row& r : rows) {
    const bool m = matches_printed(r.value, r.published, r.digits);
    ok = ok && m;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.*e%s ", r.name, r.digits - 1, r.value, m ? "" : "(!)");
    detail += buf;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// Campaign-level criteria

cli::Report analyze(const CampaignConfig& cfg) {
  const cli::SimulationOutput sim = cli::simulate(cfg);
  cli::Analyzer a(cfg);
  for (const auto& e : sim.events) a.add(e);
  a.set_sidebands(sim.sidebands);
  return a.finish();
}

double metric(const cli::Report& r, const std::string& name) {
  return r.summary.at("metrics").at(name).at("value").get<double>();
}

// Published source, default accidental fraction and calibrated dephasing. The
// absorption efficiencies are raised so the run count stays small; they only
// set the event yield.
CampaignConfig published_models(CampaignKind kind, std::uint64_t runs) {
  CampaignConfig cfg;
  cfg.kind = kind;
  cfg.run.n_runs = runs;
  cfg.run.seed = 78;
  cfg.run.threads = 0;
  cfg.models.chain.eta_abs_first = 0.05;
  cfg.models.chain.eta_abs_second = 0.02;
  cfg.analysis.bootstrap = 0;
  cfg.write_events = false;
  return cfg;
}

Line window_scan_closure() {
  CampaignConfig cfg = published_models(CampaignKind::window_scan, 120'000'000);
  cfg.dephasing_calibration.slope_per_s = -200.0;
  // Calibrate over the span of the window centres the scan will report.
  cfg.dephasing_calibration.fit_start_s = cfg.scan.width_s / 2;
  cfg.dephasing_calibration.fit_end_s = cfg.run.exposure_s - cfg.scan.width_s / 2;
  cli::finalize(cfg);
  const cli::Report r = analyze(cfg);
  const double slope = metric(r, "window_scan.slope_per_s");
  const double rel = metric(r, "window_scan.slope_relative_error");
  const bool monotone = metric(r, "window_scan.monotone_non_increasing") > 0.5;
  return {rel <= kScanSlopeRelTol && monotone,
          "slope " + fmt("%.1f", slope) + " /s vs " + fmt("%.1f", cfg.dephasing_calibration.slope_per_s) +
              " /s (relative error " + fmt("%.3f", rel) + "), monotone " + (monotone ? "yes" : "no")};
}

Line simulated_fidelities() {
  CampaignConfig transfer = published_models(CampaignKind::entanglement_transfer, 4'000'000);
  cli::finalize(transfer);
  const cli::Report tr = analyze(transfer);
  const double f_first = metric(tr, "first.fidelity_psi-");

  CampaignConfig tele = published_models(CampaignKind::teleportation, 4'000'000);
  cli::finalize(tele);
  const cli::Report te = analyze(tele);
  const double f_tele = metric(te, "mean.process_fidelity");

  // Truth-flagged accidentals removed, against the same campaign without background.
  CampaignConfig truth = transfer;
  truth.truth = true;
  truth.analysis.background = cli::BackgroundSource::truth;
  const double f_truth = metric(analyze(truth), "first.fidelity_psi-_corrected");
  CampaignConfig clean = transfer;
  clean.models.background.accidental_fraction = 0.0;
  clean.run.seed = 79;
  const double f_clean = metric(analyze(clean), "first.fidelity_psi-");

  const bool ok = f_first >= kTransferLo && f_first <= kTransferHi && f_tele >= kTeleportLo && f_tele <= kTeleportHi &&
                  std::abs(f_truth - f_clean) <= kTruthRecoveryTol;
  return {ok, "transfer " + fmt("%.4f", f_first) + ", teleportation mean " + fmt("%.4f", f_tele) +
                  ", truth-corrected " + fmt("%.4f", f_truth) + " vs noiseless " + fmt("%.4f", f_clean)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Line determinism() {
  const fs::path root = fs::temp_directory_path() / ("ionbell_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  bool ok = true;
  std::string detail;
  const CampaignKind kinds[] = {CampaignKind::mapping,           CampaignKind::entanglement_transfer,
                                CampaignKind::teleportation,     CampaignKind::efficiency_budget,
                                CampaignKind::window_scan,       CampaignKind::rotation_estimate};
  for (CampaignKind k : kinds) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      CampaignConfig cfg = published_models(k, 2'000'000);
      cfg.analysis.bootstrap = 5;
      cfg.run.threads = rep == 0 ? 1 : 2;
      cfg.out_dir = root / (std::string(cli::to_string(k)) + std::to_string(rep));
      cli::finalize(cfg);
      if (cli::run_campaign(cfg) != 0) ok = false;
      const std::string s = slurp(cfg.out_dir / "summary.json");
      if (rep == 0) {
        first = s;
      } else {
        const bool same = !s.empty() && s == first;
        ok = ok && same;
        detail += std::string(cli::to_string(k)) + (same ? " identical " : " DIFFERENT ");
      }
    }
  }
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::pair<int, std::function<Line()>> criteria[] = {
      {1, bell_identities},   {2, passage_partition},   {3, ideal_teleportation},
      {4, tomography_round_trip}, {5, binning_correction}, {6, efficiency_budget},
      {7, window_scan_closure},   {8, simulated_fidelities}, {9, determinism},
  };
  for (const auto& [id, run] : criteria) {
    try {
      report(id, run());
    } catch (const std::exception& ex) {
      report(id, {false, std::string("exception: ") + ex.what()});
    }
  }
  return failures == 0 ? 0 : 1;
}
