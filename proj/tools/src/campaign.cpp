#include "campaign.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "ionbell/bootstrap.hpp"
#include "ionbell/fringe.hpp"
#include "ionbell/noise.hpp"
#include "ionbell/process.hpp"
#include "ionbell/rotation.hpp"
#include "ionbell/tomography.hpp"
#include "ionbell/window_scan.hpp"

namespace ionbell::cli {

using mc::Herald;
using mc::Passage;

namespace {

using nlohmann::ordered_json;
using qmath::BellState;
using qmath::Matrix;
using qmath::Pauli;

ordered_json matrix_json(const Matrix& m) {
  ordered_json re = ordered_json::array();
  ordered_json im = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json rr = ordered_json::array();
    ordered_json ir = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ir.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  return ordered_json{{"re", re}, {"im", im}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Scalar metrics, written to summary.json and summary.txt in insertion order.
class Metrics {
 public:
  void add(const std::string& name, double value, std::optional<double> err = std::nullopt) {
    ordered_json m{{"value", value}};
    if (err) m["stderr"] = *err;
    json_[name] = m;
    text_ += name;
    text_.append(name.size() < 40 ? 40 - name.size() : 1, ' ');
    text_ += fmt("%.4f", value);
    if (err) text_ += " +- " + fmt("%.4f", *err);
    text_ += "\n";
  }
  void add_raw(const std::string& name, double value, const char* format) {
    json_[name] = ordered_json{{"value", value}};
    text_ += name;
    text_.append(name.size() < 40 ? 40 - name.size() : 1, ' ');
    text_ += fmt(format, value) + "\n";
  }
  void note(const std::string& line) { text_ += line + "\n"; }
  const ordered_json& json() const { return json_; }
  const std::string& text() const { return text_; }

 private:
  ordered_json json_ = ordered_json::object();
  std::string text_;
};

std::string table_csv(const mc::CountsTable& t) {
  std::ostringstream os;
  os << "setting,outcome,bin,count\n";
  for (int s = 0; s < t.n_settings(); ++s) {
    for (int o = 0; o < t.n_outcomes(); ++o) {
      for (int b = 0; b < t.n_bins(); ++b) {
        os << s << ',' << o << ',' << b << ',' << std::llround(t.at(s, o, b)) << '\n';
      }
    }
  }
  return os.str();
}

double bell_fidelity(const Matrix& rho, BellState b) {
  const qmath::Vector v = qmath::bell_state(b).amplitudes();
  return (v.adjoint() * rho * v)(0, 0).real();
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

int pauli_index(Pauli p) { return static_cast<int>(p); }

BellState transfer_target(Passage p) {
  return p == Passage::first ? BellState::psi_minus : BellState::phi_minus;
}

// The photon-to-atom map is the identity for the first passage and a bit flip for the second.
Pauli mapping_target(Passage p) { return p == Passage::first ? Pauli::identity : Pauli::x; }

ordered_json ml_diag(const std::string& name, int iterations, bool converged, double ll) {
  return ordered_json{{"estimator", name}, {"iterations", iterations}, {"converged", converged},
                      {"log_likelihood", ll}};
}

struct Convergence {
  ordered_json entries = ordered_json::array();
  bool ok = true;
  void record(const std::string& name, int iterations, bool converged, double ll) {
    entries.push_back(ml_diag(name, iterations, converged, ll));
    ok = ok && converged;
  }
};

// Fringe visibility of the superposition readout for one photon basis and click.
std::optional<estimation::FringeFit> transfer_fringe(const mc::CountsTable& t, int basis, int click,
                                                     bool correct) {
  std::vector<estimation::FringePoint> pts;
  const int setting = 3 + basis;
  for (int b = 0; b < t.n_bins(); ++b) {
    const double plus = t.at(setting, 2 * click, b);
    const double minus = t.at(setting, 2 * click + 1, b);
    pts.push_back({mc::bin_centre(b, t.n_bins()), plus, plus + minus});
  }
  try {
    return estimation::fit_fringe(pts, correct);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

const char* basis_name(int b) {
  static const char* names[] = {"HV", "DA", "RL"};
  return names[b];
}

}  // namespace

mc::Experiment experiment_for(CampaignKind kind) {
  switch (kind) {
    case CampaignKind::mapping: return mc::Experiment::mapping;
    case CampaignKind::teleportation: return mc::Experiment::teleportation;
    case CampaignKind::entanglement_transfer:
    case CampaignKind::window_scan: return mc::Experiment::entanglement_transfer;
    default: break;
  }
  throw ConfigError("experiment '" + std::string(to_string(kind)) + "' does not simulate events");
}

bool is_simulated(CampaignKind kind) {
  return kind == CampaignKind::mapping || kind == CampaignKind::teleportation ||
         kind == CampaignKind::entanglement_transfer || kind == CampaignKind::window_scan;
}

// ---------------------------------------------------------------------------
// Analyzer

Analyzer::Analyzer(const CampaignConfig& cfg) : cfg_(cfg), experiment_(experiment_for(cfg.kind)) {
  const int n = cfg_.run.larmor_bins;
  if (n < 2) throw InvariantError("larmor_bins must be at least 2");
  if (cfg_.kind == CampaignKind::window_scan) return;
  switch (experiment_) {
    case mc::Experiment::entanglement_transfer:
      for (int p = 0; p < 2; ++p) tables_.push_back({mc::CountsTable(6, 4, n), mc::CountsTable(6, 4, n)});
      break;
    case mc::Experiment::mapping:
      for (int p = 0; p < 2; ++p) tables_.push_back({mc::CountsTable(12, 2, n), mc::CountsTable(12, 2, n)});
      break;
    case mc::Experiment::teleportation: {
      const int s = 3 * static_cast<int>(cfg_.inputs.teleport_inputs.size());
      for (int b = 0; b < 4; ++b) tables_.push_back({mc::CountsTable(s, 2, n), mc::CountsTable(s, 2, n)});
      break;
    }
  }
}

void Analyzer::add(const mc::EventRecord& e) {
  ++n_events_;
  if (e.accidental) ++n_with_truth_;
  if (cfg_.kind == CampaignKind::window_scan) {
    buffered_.push_back(e);
    return;
  }
  const bool acc = e.accidental.value_or(false);
  const int p = e.passage == Passage::first ? 0 : 1;
  switch (experiment_) {
    case mc::Experiment::entanglement_transfer:
      mc::add_transfer_event(tables_[p].all, e);
      if (acc) mc::add_transfer_event(tables_[p].accidental, e);
      break;
    case mc::Experiment::mapping:
      mc::add_mapping_event(tables_[p].all, e);
      if (acc) mc::add_mapping_event(tables_[p].accidental, e);
      break;
    case mc::Experiment::teleportation: {
      if (mc::is_shelving(e.atomic)) {
        throw DataError("teleportation event at run " + std::to_string(e.run_index) +
                        " has a shelving readout");
      }
      const auto b = static_cast<int>(mc::event_bell_state(e));
      const std::size_t n = cfg_.inputs.teleport_inputs.size();
      mc::add_teleport_event(tables_[b].all, e, n);
      if (acc) mc::add_teleport_event(tables_[b].accidental, e, n);
      break;
    }
  }
}

double Analyzer::sideband_share(int table_index) const {
  const auto& sb = *sidebands_;
  const double a_first = estimation::accidentals_from_sidebands(static_cast<double>(sb.first), sb.width_ratio);
  const double a_second = estimation::accidentals_from_sidebands(static_cast<double>(sb.second), sb.width_ratio);
  if (experiment_ != mc::Experiment::teleportation) return table_index == 0 ? a_first : a_second;
  // Accidentals carry uniform herald and atomic bits, so each of the four
  // (herald, atomic) triples of a passage receives a quarter of them.
  double total = 0.0;
  for (Passage p : protocol::kPassages) {
    for (Herald h : protocol::kHeralds) {
      for (auto a : {mc::AtomicOutcome::plus, mc::AtomicOutcome::minus}) {
        mc::EventRecord e;
        e.passage = p;
        e.herald = h;
        e.atomic = a;
        if (static_cast<int>(mc::event_bell_state(e)) == table_index) {
          total += 0.25 * (p == Passage::first ? a_first : a_second);
        }
      }
    }
  }
  return total;
}

estimation::BackgroundEstimate Analyzer::background_for(const Tables& t, int table_index,
                                                        std::string& mode) const {
  const bool all_truth = n_events_ > 0 && n_with_truth_ == n_events_;
  switch (cfg_.analysis.background) {
    case BackgroundSource::none:
      mode = "none";
      return estimation::no_background(t.all);
    case BackgroundSource::fraction:
      mode = "fraction";
      return estimation::background_from_fraction(t.all, cfg_.analysis.background_fraction);
    case BackgroundSource::truth:
      if (!all_truth) throw InvariantError("background_estimate 'truth' needs truth-flagged events");
      mode = "truth";
      return estimation::background_from_truth(t.accidental);
    case BackgroundSource::automatic:
      if (all_truth) {
        mode = "truth";
        return estimation::background_from_truth(t.accidental);
      }
      if (sidebands_) {
        mode = "sidebands";
        return estimation::background_from_total(t.all, sideband_share(table_index));
      }
      mode = "none";
      return estimation::no_background(t.all);
  }
  return estimation::no_background(t.all);
}

Report Analyzer::finish() const {
  if (n_events_ == 0) throw DataError("no events");
  Report rep;
  Metrics metrics;
  Convergence conv;
  ordered_json results = ordered_json::object();
  ordered_json background = ordered_json::object();
  const int n_boot = cfg_.analysis.bootstrap;
  const std::uint64_t boot_seed = cfg_.analysis.bootstrap_seed;
  estimation::MlOptions opt;
  opt.max_iterations = cfg_.analysis.ml_max_iterations;
  std::string mode_used;

  metrics.note("experiment " + std::string(to_string(cfg_.kind)) + ", " + std::to_string(n_events_) +
               " events, " + std::to_string(cfg_.run.larmor_bins) + " phase bins");
  if (skipped_ > 0) metrics.note("skipped lines " + std::to_string(skipped_));

  if (cfg_.kind == CampaignKind::window_scan) {
    estimation::WindowScanOptions wo;
    wo.width_s = cfg_.scan.width_s;
    wo.offsets_s = estimation::window_offsets(cfg_.run.exposure_s, cfg_.scan.width_s, cfg_.scan.step_s);
    wo.n_bins = cfg_.run.larmor_bins;
    estimation::WindowScanResult scan;
    try {
      scan = estimation::detection_window_scan(buffered_, wo);
    } catch (const std::invalid_argument& ex) {
      throw DataError(ex.what());
    }
    std::ostringstream csv;
    csv << "offset_s,centre_s,fidelity,events\n";
    csv.precision(17);
    bool monotone = true;
    ordered_json pts = ordered_json::array();
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      const auto& p = scan.points[i];
      csv << p.offset_s << ',' << p.centre_s << ',' << p.fidelity << ',' << p.events << '\n';
      pts.push_back({{"offset_s", p.offset_s}, {"centre_s", p.centre_s}, {"fidelity", p.fidelity},
                     {"events", p.events}});
      if (i > 0 && p.fidelity > scan.points[i - 1].fidelity) monotone = false;
    }
    rep.csv["window_scan.csv"] = csv.str();
    results["window_scan"] = {{"points", pts}, {"slope_per_s", scan.slope_per_s},
                              {"intercept", scan.intercept}};
    metrics.add_raw("window_scan.slope_per_s", scan.slope_per_s, "%.2f");
    metrics.add("window_scan.intercept", scan.intercept);
    metrics.add_raw("window_scan.monotone_non_increasing", monotone ? 1.0 : 0.0, "%.0f");
    if (cfg_.dephasing_calibration.enabled) {
      const double target = cfg_.dephasing_calibration.slope_per_s;
      metrics.add_raw("window_scan.calibrated_slope_per_s", target, "%.2f");
      metrics.add_raw("window_scan.slope_relative_error", std::abs(scan.slope_per_s - target) / std::abs(target),
                      "%.4f");
    }
  } else if (experiment_ == mc::Experiment::entanglement_transfer) {
    for (Passage p : protocol::kPassages) {
      const int i = p == Passage::first ? 0 : 1;
      const std::string name(to_string(p));
      const Tables& t = tables_[i];
      rep.csv["counts_transfer_" + name + ".csv"] = table_csv(t.all);
      if (t.all.total() == 0.0) {
        results[name] = {{"status", "no events"}};
        continue;
      }
      std::string mode;
      const auto bg = background_for(t, i, mode);
      mode_used = mode;
      background[name] = {{"mode", mode}, {"accidentals", bg.total()}};
      const BellState target = transfer_target(p);
      estimation::MlStateResult unc;
      estimation::MlStateResult cor;
      try {
        unc = estimation::ml_state_reconstruct(t.all, false, opt);
        cor = estimation::ml_state_reconstruct(estimation::background_correct(t.all, bg), true, opt);
      } catch (const estimation::IncompleteDataError& ex) {
        results[name] = {{"status", std::string("incomplete data: ") + ex.what()}};
        metrics.note(name + ": incomplete data");
        continue;
      }
      conv.record(name + ".uncorrected", unc.iterations, unc.converged, unc.log_likelihood);
      conv.record(name + ".corrected", cor.iterations, cor.converged, cor.log_likelihood);
      const auto boot = estimation::bootstrap(
          t.all, n_boot, boot_seed + static_cast<std::uint64_t>(i), [&](const mc::CountsTable& r) {
            const auto u = estimation::ml_state_reconstruct(r, false, opt);
            const auto c = estimation::ml_state_reconstruct(estimation::background_correct(r, bg), true, opt);
            return std::vector<double>{bell_fidelity(u.rho, target), purity(u.rho), bell_fidelity(c.rho, target),
                                       purity(c.rho)};
          });
      const auto err = [&](std::size_t k) -> std::optional<double> {
        if (boot.resamples < 2) return std::nullopt;
        return boot.stddev[k];
      };
      const std::string tgt(qmath::to_string(target));
      metrics.add_raw(name + ".events", t.all.total(), "%.0f");
      metrics.add_raw(name + ".accidentals_estimate", bg.total(), "%.1f");
      metrics.add(name + ".fidelity_" + tgt, bell_fidelity(unc.rho, target), err(0));
      metrics.add(name + ".purity", purity(unc.rho), err(1));
      metrics.add(name + ".fidelity_" + tgt + "_corrected", bell_fidelity(cor.rho, target), err(2));
      metrics.add(name + ".purity_corrected", purity(cor.rho), err(3));

      const auto corrected_table = estimation::background_correct(t.all, bg);
      ordered_json vis = ordered_json::object();
      for (int b = 0; b < 3; ++b) {
        for (int click = 0; click < 2; ++click) {
          const auto fit = transfer_fringe(corrected_table, b, click, true);
          if (!fit) continue;
          const std::string key = std::string(basis_name(b)) + "_" + std::to_string(click);
          vis[key] = {{"visibility", fit->visibility}, {"phi0", fit->phi0}};
          metrics.add(name + ".visibility_" + key, fit->visibility);
        }
      }
      results[name] = {{"target", tgt},
                       {"events", t.all.total()},
                       {"background", background[name]},
                       {"rho", matrix_json(unc.rho)},
                       {"rho_corrected", matrix_json(cor.rho)},
                       {"visibilities_corrected", vis},
                       {"bootstrap", {{"resamples", boot.resamples}, {"failures", boot.failures}}}};
    }
  } else if (experiment_ == mc::Experiment::teleportation) {
    double sum_unc = 0.0;
    double sum_cor = 0.0;
    double sum_overlap = 0.0;
    int n_ok = 0;
    for (BellState b : qmath::kBellStates) {
      const int i = static_cast<int>(b);
      const std::string name(qmath::to_string(b));
      const Tables& t = tables_[i];
      rep.csv["counts_teleport_" + name + ".csv"] = table_csv(t.all);
      if (t.all.total() == 0.0) {
        results[name] = {{"status", "no events"}};
        continue;
      }
      std::string mode;
      const auto bg = background_for(t, i, mode);
      mode_used = mode;
      background[name] = {{"mode", mode}, {"accidentals", bg.total()}};
      const Pauli expected = protocol::pauli_correction(b);
      const int k = pauli_index(expected);
      const auto& inputs = cfg_.inputs.teleport_inputs;
      std::optional<estimation::MlProcessResult> unc;
      std::optional<estimation::MlProcessResult> cor;
      try {
        unc = estimation::ml_process_reconstruct(estimation::teleport_process_data(t.all, inputs, false), opt);
        cor = estimation::ml_process_reconstruct(
            estimation::teleport_process_data(estimation::background_correct(t.all, bg), inputs, true), opt);
      } catch (const estimation::IncompleteDataError& ex) {
        results[name] = {{"status", std::string("incomplete data: ") + ex.what()}};
        metrics.note(name + ": incomplete data");
        continue;
      }
      conv.record(name + ".uncorrected", unc->iterations, unc->converged, unc->log_likelihood);
      conv.record(name + ".corrected", cor->iterations, cor->converged, cor->log_likelihood);
      const auto boot = estimation::bootstrap(
          t.all, n_boot, boot_seed + 16 + static_cast<std::uint64_t>(i), [&](const mc::CountsTable& r) {
            const auto u = estimation::ml_process_reconstruct(estimation::teleport_process_data(r, inputs, false), opt);
            const auto c = estimation::ml_process_reconstruct(
                estimation::teleport_process_data(estimation::background_correct(r, bg), inputs, true), opt);
            return std::vector<double>{u.chi.diagonal()[k], c.chi.diagonal()[k]};
          });
      const auto err = [&](std::size_t j) -> std::optional<double> {
        if (boot.resamples < 2) return std::nullopt;
        return boot.stddev[j];
      };
      const auto du = unc->chi.diagonal();
      const auto dc = cor->chi.diagonal();
      const double overlap = estimation::mean_overlap_fidelity(std::clamp(dc[k], 0.0, 1.0));
      metrics.add_raw(name + ".events", t.all.total(), "%.0f");
      metrics.add(name + ".process_fidelity_" + std::string(qmath::to_string(expected)), du[k], err(0));
      metrics.add(name + ".process_fidelity_" + std::string(qmath::to_string(expected)) + "_corrected", dc[k],
                  err(1));
      metrics.add(name + ".mean_overlap_fidelity_corrected", overlap);
      sum_unc += du[k];
      sum_cor += dc[k];
      sum_overlap += overlap;
      ++n_ok;
      results[name] = {{"expected_pauli", std::string(qmath::to_string(expected))},
                       {"events", t.all.total()},
                       {"background", background[name]},
                       {"chi", matrix_json(unc->chi.chi())},
                       {"chi_diagonal", {du[0], du[1], du[2], du[3]}},
                       {"chi_corrected", matrix_json(cor->chi.chi())},
                       {"chi_diagonal_corrected", {dc[0], dc[1], dc[2], dc[3]}},
                       {"bootstrap", {{"resamples", boot.resamples}, {"failures", boot.failures}}}};
    }
    if (n_ok > 0) {
      metrics.add("mean.process_fidelity", sum_unc / n_ok);
      metrics.add("mean.process_fidelity_corrected", sum_cor / n_ok);
      metrics.add("mean.overlap_fidelity_corrected", sum_overlap / n_ok);
    }
  } else {
    for (Passage p : protocol::kPassages) {
      const int i = p == Passage::first ? 0 : 1;
      const std::string name(to_string(p));
      const Tables& t = tables_[i];
      rep.csv["counts_mapping_" + name + ".csv"] = table_csv(t.all);
      if (t.all.total() == 0.0) {
        results[name] = {{"status", "no events"}};
        continue;
      }
      std::string mode;
      const auto bg = background_for(t, i, mode);
      mode_used = mode;
      background[name] = {{"mode", mode}, {"accidentals", bg.total()}};
      const Pauli expected = mapping_target(p);
      const int k = pauli_index(expected);
      std::optional<estimation::MlProcessResult> unc;
      std::optional<estimation::MlProcessResult> cor;
      try {
        unc = estimation::ml_process_reconstruct(estimation::mapping_process_data(t.all, false), opt);
        cor = estimation::ml_process_reconstruct(
            estimation::mapping_process_data(estimation::background_correct(t.all, bg), true), opt);
      } catch (const estimation::IncompleteDataError& ex) {
        results[name] = {{"status", std::string("incomplete data: ") + ex.what()}};
        metrics.note(name + ": incomplete data");
        continue;
      }
      conv.record(name + ".uncorrected", unc->iterations, unc->converged, unc->log_likelihood);
      conv.record(name + ".corrected", cor->iterations, cor->converged, cor->log_likelihood);
      const auto boot = estimation::bootstrap(
          t.all, n_boot, boot_seed + 32 + static_cast<std::uint64_t>(i), [&](const mc::CountsTable& r) {
            const auto u = estimation::ml_process_reconstruct(estimation::mapping_process_data(r, false), opt);
            const auto c = estimation::ml_process_reconstruct(
                estimation::mapping_process_data(estimation::background_correct(r, bg), true), opt);
            return std::vector<double>{u.chi.diagonal()[k], c.chi.diagonal()[k]};
          });
      const auto err = [&](std::size_t j) -> std::optional<double> {
        if (boot.resamples < 2) return std::nullopt;
        return boot.stddev[j];
      };
      const auto du = unc->chi.diagonal();
      const auto dc = cor->chi.diagonal();
      metrics.add_raw(name + ".events", t.all.total(), "%.0f");
      metrics.add(name + ".process_fidelity_" + std::string(qmath::to_string(expected)), du[k], err(0));
      metrics.add(name + ".process_fidelity_" + std::string(qmath::to_string(expected)) + "_corrected", dc[k],
                  err(1));
      results[name] = {{"expected_pauli", std::string(qmath::to_string(expected))},
                       {"events", t.all.total()},
                       {"background", background[name]},
                       {"chi", matrix_json(unc->chi.chi())},
                       {"chi_diagonal", {du[0], du[1], du[2], du[3]}},
                       {"chi_corrected", matrix_json(cor->chi.chi())},
                       {"chi_diagonal_corrected", {dc[0], dc[1], dc[2], dc[3]}},
                       {"bootstrap", {{"resamples", boot.resamples}, {"failures", boot.failures}}}};
    }
  }

  rep.summary = ordered_json{{"experiment", std::string(to_string(cfg_.kind))},
                             {"events", n_events_},
                             {"skipped_lines", skipped_},
                             {"larmor_bins", cfg_.run.larmor_bins},
                             {"bootstrap", n_boot},
                             {"background", background},
                             {"metrics", metrics.json()}};
  rep.results = results;
  rep.summary_text = metrics.text();
  rep.diagnostics = ordered_json{{"estimators", conv.entries}};
  if (!conv.ok) {
    throw NonConvergenceError("maximum-likelihood estimation did not converge", rep.diagnostics);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Event-free campaigns

Report budget_report(const CampaignConfig& cfg) {
  const auto b = mc::efficiency_budget(cfg.totals, cfg.models.chain);
  const double map_eta = mc::mapping_efficiency(cfg.mapping_totals);
  Metrics m;
  m.add_raw("total_exposure_h", b.total_exposure_h, "%.2f");
  m.add_raw("total_pairs", b.total_pairs, "%.4e");
  m.add_raw("success_per_run_first", b.success.per_run_first, "%.2e");
  m.add_raw("success_per_run_second", b.success.per_run_second, "%.2e");
  m.add_raw("success_per_pair_first", b.success.per_pair_first, "%.2e");
  m.add_raw("success_per_pair_second", b.success.per_pair_second, "%.2e");
  m.add_raw("eta_abs_first", b.eta_abs_first, "%.2e");
  m.add_raw("eta_abs_second", b.eta_abs_second, "%.2e");
  m.add_raw("heralded_success_first", b.heralded_success_first, "%.2e");
  m.add_raw("heralded_success_second", b.heralded_success_second, "%.2e");
  m.add_raw("mapping_efficiency", map_eta, "%.1e");
  Report rep;
  rep.summary = ordered_json{{"experiment", std::string(to_string(cfg.kind))}, {"metrics", m.json()}};
  rep.results = ordered_json{{"budget", m.json()}};
  rep.summary_text = m.text();
  rep.diagnostics = ordered_json::object();
  return rep;
}

Report rotation_report(const CampaignConfig& cfg) {
  const auto& rc = cfg.rotation;
  const auto truth = estimation::axis_angle_rotation(rc.axis, rc.angle_deg * std::numbers::pi / 180.0);
  std::mt19937_64 rng(rc.seed);
  std::normal_distribution<double> noise(0.0, rc.noise);
  std::vector<estimation::StokesPair> pairs;
  std::ostringstream csv;
  csv.precision(17);
  csv << "prepared_x,prepared_y,prepared_z,measured_x,measured_y,measured_z\n";
  for (const auto& v : estimation::fibonacci_sphere(rc.n_vectors)) {
    estimation::Vec3 w = truth * v;
    for (int k = 0; k < 3; ++k) w(k) += noise(rng);
    pairs.push_back({v, w});
    csv << v(0) << ',' << v(1) << ',' << v(2) << ',' << w(0) << ',' << w(1) << ',' << w(2) << '\n';
  }
  estimation::RotationEstimate est;
  try {
    est = estimation::estimate_polarization_rotation(pairs);
  } catch (const std::invalid_argument& ex) {
    throw InvariantError(ex.what());
  }
  const double err_deg = estimation::rotation_angle_between(est.rotation, truth) * 180.0 / std::numbers::pi;
  const double angle_deg =
      std::acos(std::clamp((est.rotation.trace() - 1.0) / 2.0, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  Metrics m;
  m.add_raw("rotation.angle_deg", angle_deg, "%.3f");
  m.add_raw("rotation.error_deg", err_deg, "%.4f");
  m.add_raw("rotation.rms_residual", est.rms_error, "%.5f");
  const auto mat = [](const estimation::Mat3& r) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({r(i, 0), r(i, 1), r(i, 2)});
    return rows;
  };
  Report rep;
  rep.summary = ordered_json{{"experiment", std::string(to_string(cfg.kind))}, {"metrics", m.json()}};
  rep.results = ordered_json{{"estimate", mat(est.rotation)}, {"truth", mat(truth)}};
  rep.summary_text = m.text();
  rep.csv["stokes_pairs.csv"] = csv.str();
  rep.diagnostics = ordered_json::object();
  return rep;
}

// ---------------------------------------------------------------------------
// Simulation and files

SimulationOutput simulate(const CampaignConfig& cfg) {
  const auto exp = experiment_for(cfg.kind);
  mc::SimulationResult res;
  try {
    res = mc::simulate_runs(cfg.run, cfg.models, exp, cfg.inputs);
  } catch (const std::invalid_argument& ex) {
    throw InvariantError(ex.what());
  }
  SimulationOutput out;
  out.sidebands = mc::sideband_tally(res.candidates, cfg.run);
  out.events = mc::coincidence_gate(res.candidates, cfg.run.gate_halfwidth_s, cfg.run);
  std::uint64_t acc = 0;
  std::uint64_t first = 0;
  for (auto& e : out.events) {
    if (e.accidental.value_or(false)) ++acc;
    if (e.passage == Passage::first) ++first;
    if (!cfg.truth) e.accidental.reset();
  }
  ordered_json expected = ordered_json::object();
  for (Passage p : protocol::kPassages) {
    const auto r = mc::expected_rates(cfg.run, cfg.models, p);
    const double n = static_cast<double>(cfg.run.n_runs);
    expected[std::string(to_string(p))] = {{"signal", r.signal_in_gate * n},
                                           {"accidental", r.accidental_in_gate * n},
                                           {"dark", r.dark_in_gate * n}};
  }
  out.info = ordered_json{{"config", to_json(cfg)},
                          {"candidates", res.candidates.size()},
                          {"gated", out.events.size()},
                          {"gated_first", first},
                          {"gated_second", out.events.size() - first},
                          {"gated_accidental", acc},
                          {"signal_rejected_by_emission", res.signal_rejected_by_emission},
                          {"gate_acceptance", mc::gate_acceptance(cfg.run.gate_halfwidth_s, cfg.run.wavepacket_decay_s)},
                          {"expected_in_gate", expected},
                          {"sidebands", sidebands_to_json(out.sidebands)}};
  return out;
}

nlohmann::ordered_json sidebands_to_json(const mc::SidebandTally& t) {
  return ordered_json{{"first", t.first}, {"second", t.second}, {"width_ratio", t.width_ratio}};
}

mc::SidebandTally sidebands_from_json(const nlohmann::json& j) {
  mc::SidebandTally t;
  try {
    t.first = j.at("first").get<std::uint64_t>();
    t.second = j.at("second").get<std::uint64_t>();
    t.width_ratio = j.at("width_ratio").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("sidebands.json: ") + ex.what());
  }
  if (!(t.width_ratio > 0.0)) throw InvariantError("sidebands.json: width_ratio must be positive");
  return t;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_report(const std::filesystem::path& dir, const Report& report) {
  write_atomic(dir / "summary.json", report.summary.dump(2) + "\n");
  write_atomic(dir / "summary.txt", report.summary_text);
  write_atomic(dir / "results.json", report.results.dump(2) + "\n");
  write_atomic(dir / "diagnostics.json", report.diagnostics.dump(2) + "\n");
  for (const auto& [name, content] : report.csv) write_atomic(dir / name, content);
}

namespace {

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw InvariantError("output directory " + dir.string() + " is not writable");
  }
}

int finish_and_write(const Analyzer& analyzer, const std::filesystem::path& dir) {
  try {
    write_report(dir, analyzer.finish());
  } catch (const NonConvergenceError& ex) {
    write_atomic(dir / "diagnostics.json", ex.diagnostics.dump(2) + "\n");
    throw;
  }
  return 0;
}

}  // namespace

int run_campaign(const CampaignConfig& cfg) {
  prepare_dir(cfg.out_dir);
  if (cfg.kind == CampaignKind::efficiency_budget) {
    write_report(cfg.out_dir, budget_report(cfg));
    return 0;
  }
  if (cfg.kind == CampaignKind::rotation_estimate) {
    write_report(cfg.out_dir, rotation_report(cfg));
    return 0;
  }
  const SimulationOutput sim = simulate(cfg);
  if (cfg.write_events) {
    std::ostringstream os;
    mc::write_events(os, sim.events, cfg.truth);
    write_atomic(cfg.out_dir / "events.txt", os.str());
  }
  write_atomic(cfg.out_dir / "sidebands.json", sidebands_to_json(sim.sidebands).dump(2) + "\n");
  write_atomic(cfg.out_dir / "simulation.json", sim.info.dump(2) + "\n");
  Analyzer analyzer(cfg);
  for (const auto& e : sim.events) analyzer.add(e);
  analyzer.set_sidebands(sim.sidebands);
  return finish_and_write(analyzer, cfg.out_dir);
}

Report analyze_stream(const CampaignConfig& cfg, std::istream& in, const AnalyzeOptions& opt,
                      const std::optional<mc::SidebandTally>& sidebands) {
  Analyzer analyzer(cfg);
  const auto stats = mc::for_each_event(in, opt.strict, [&](const mc::EventRecord& e) { analyzer.add(e); });
  if (sidebands) analyzer.set_sidebands(*sidebands);
  analyzer.set_skipped_lines(stats.skipped);
  Report rep = analyzer.finish();
  if (!stats.warnings.empty()) rep.diagnostics["skipped"] = stats.warnings;
  return rep;
}

int analyze_file(const CampaignConfig& cfg, const std::filesystem::path& events, const AnalyzeOptions& opt) {
  std::ifstream in(events);
  if (!in) throw DataError("cannot open " + events.string());
  std::optional<mc::SidebandTally> sidebands;
  const auto sidecar = events.parent_path() / "sidebands.json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream s(sidecar);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& ex) {
      throw ConfigError(std::string("sidebands.json: ") + ex.what());
    }
    sidebands = sidebands_from_json(j);
  }
  prepare_dir(cfg.out_dir);
  Report rep;
  try {
    rep = analyze_stream(cfg, in, opt, sidebands);
  } catch (const NonConvergenceError& ex) {
    write_atomic(cfg.out_dir / "diagnostics.json", ex.diagnostics.dump(2) + "\n");
    throw;
  }
  write_report(cfg.out_dir, rep);
  return 0;
}

}  // namespace ionbell::cli
