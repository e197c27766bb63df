#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ionbell/noise.hpp"

namespace ionbell::cli {

namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects any key it was not asked about.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() = default;

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception& ex) {
      throw ConfigError(path_ + "." + key + ": " + ex.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  const json& child(const char* key) {
    seen_.insert(key);
    return doc_.at(key);
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : doc_.items()) {
      if (seen_.count(k) == 0) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_run(const json& j, mc::RunConfig& run) {
  Section s(j, "run");
  s.get("n_runs", run.n_runs);
  s.get("exposure_s", run.exposure_s);
  s.get("seed", run.seed);
  s.get("emission_prob", run.emission_prob);
  s.get("gate_halfwidth_s", run.gate_halfwidth_s);
  s.get("larmor_bins", run.larmor_bins);
  s.get("second_passage_delay_s", run.second_passage_delay_s);
  s.get("wavepacket_decay_s", run.wavepacket_decay_s);
  s.get("sideband_factor", run.sideband_factor);
  s.get("chunk_runs", run.chunk_runs);
  s.get("threads", run.threads);
  s.finish();
}

void read_larmor(const json& j, protocol::LarmorConfig& l) {
  Section s(j, "larmor");
  s.get("freq_d_hz", l.freq_d_hz);
  s.get("freq_s_hz", l.freq_s_hz);
  s.get("b_field_gauss", l.b_field_gauss);
  s.get("loop_period_s", l.loop_period_s);
  s.finish();
}

void read_source(const json& j, noise::SourceModel& src) {
  Section s(j, "source");
  if (s.has("fidelity") && s.has("werner_weight")) {
    throw ConfigError("source: give either fidelity or werner_weight, not both");
  }
  if (s.has("fidelity")) {
    double f = 0.0;
    s.get("fidelity", f);
    if (!(f >= 0.25 && f <= 1.0)) throw InvariantError("source.fidelity must lie in [1/4, 1]");
    src.werner_weight = noise::werner_weight_for_fidelity(f);
  }
  s.get("werner_weight", src.werner_weight);
  s.get("pair_rate_per_power", src.pair_rate_per_power);
  s.get("pump_power_mw", src.pump_power_mw);
  s.get("linewidth_a_hz", src.linewidth_a_hz);
  s.get("detuning_b_hz", src.detuning_b_hz);
  s.get("fiber_pair_rate_per_s", src.fiber_pair_rate_per_s);
  s.finish();
}

void read_dephasing(const json& j, CampaignConfig& cfg) {
  Section s(j, "dephasing");
  if (s.has("sigma_rate_per_s")) {
    s.get("sigma_rate_per_s", cfg.models.dephasing.sigma_rate_per_s);
    cfg.dephasing_calibration.enabled = false;
  }
  if (s.has("calibrate")) {
    if (!cfg.dephasing_calibration.enabled) {
      throw ConfigError("dephasing: give either sigma_rate_per_s or calibrate, not both");
    }
    Section c(s.child("calibrate"), s.path("calibrate"));
    auto& cal = cfg.dephasing_calibration;
    c.get("slope_per_s", cal.slope_per_s);
    c.get("fit_start_s", cal.fit_start_s);
    c.get("fit_end_s", cal.fit_end_s);
    if (c.has("contrast")) {
      double v = 0.0;
      c.get("contrast", v);
      cal.contrast = v;
    }
    c.finish();
  }
  s.finish();
}

void read_background(const json& j, noise::BackgroundModel& bg) {
  Section s(j, "background");
  s.get("accidental_fraction", bg.accidental_fraction);
  s.get("dark_rate_393_per_s", bg.dark_rate_393_per_s);
  s.get("dark_rate_854_per_s", bg.dark_rate_854_per_s);
  s.finish();
}

void read_efficiency(const json& j, mc::EfficiencyChain& ch) {
  Section s(j, "efficiency");
  s.get("eta_854_a", ch.eta_854_a);
  s.get("eta_854_b", ch.eta_854_b);
  s.get("eta_393", ch.eta_393);
  s.get("eta_gate", ch.eta_gate);
  s.get("eta_abs_first", ch.eta_abs_first);
  s.get("eta_abs_second", ch.eta_abs_second);
  s.finish();
}

void read_totals(const json& j, CampaignConfig& cfg) {
  Section s(j, "budget");
  auto& t = cfg.totals;
  s.get("n_runs", t.n_runs);
  s.get("exposure_s", t.exposure_s);
  s.get("n_coincidences_first", t.n_coincidences_first);
  s.get("n_coincidences_second", t.n_coincidences_second);
  s.get("pair_rate_per_power", t.pair_rate_per_power);
  s.get("pump_power_mw", t.pump_power_mw);
  s.get("mapping_runs", cfg.mapping_totals.n_runs);
  s.get("mapping_heralded_photons", cfg.mapping_totals.heralded_photons);
  s.get("mapping_coincidences", cfg.mapping_totals.coincidences);
  s.finish();
}

void read_analysis(const json& j, AnalysisConfig& a) {
  Section s(j, "analysis");
  s.get("bootstrap", a.bootstrap);
  s.get("bootstrap_seed", a.bootstrap_seed);
  s.get("ml_max_iterations", a.ml_max_iterations);
  if (s.has("background_estimate")) {
    const json& b = s.child("background_estimate");
    if (b.is_number()) {
      a.background = BackgroundSource::fraction;
      a.background_fraction = b.get<double>();
    } else if (b.is_string()) {
      const auto v = b.get<std::string>();
      if (v == "auto") {
        a.background = BackgroundSource::automatic;
      } else if (v == "truth") {
        a.background = BackgroundSource::truth;
      } else if (v == "none") {
        a.background = BackgroundSource::none;
      } else {
        throw ConfigError("analysis.background_estimate: expected auto, truth, none or a number");
      }
    } else {
      throw ConfigError("analysis.background_estimate: expected a string or a number");
    }
  }
  s.finish();
}

void read_scan(const json& j, ScanConfig& sc) {
  Section s(j, "window_scan");
  s.get("width_s", sc.width_s);
  s.get("step_s", sc.step_s);
  s.finish();
}

void read_rotation(const json& j, RotationConfig& r) {
  Section s(j, "rotation");
  s.get("n_vectors", r.n_vectors);
  s.get("noise", r.noise);
  if (s.has("axis")) {
    std::vector<double> axis;
    s.get("axis", axis);
    if (axis.size() != 3) throw ConfigError("rotation.axis: expected three numbers");
    r.axis = estimation::Vec3(axis[0], axis[1], axis[2]);
  }
  s.get("angle_deg", r.angle_deg);
  s.get("seed", r.seed);
  s.finish();
}

void read_inputs(const json& j, mc::ExperimentInputs& in) {
  if (!j.is_array() || j.empty()) throw ConfigError("teleport_inputs: expected a non-empty array");
  in.teleport_inputs.clear();
  for (const auto& item : j) {
    std::vector<double> v;
    try {
      v = item.get<std::vector<double>>();
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("teleport_inputs: ") + ex.what());
    }
    if (v.size() != 4) {
      throw ConfigError("teleport_inputs: each input is [re(alpha), im(alpha), re(beta), im(beta)]");
    }
    qmath::Vector amps(2);
    amps << qmath::Complex(v[0], v[1]), qmath::Complex(v[2], v[3]);
    if (amps.norm() == 0.0) throw InvariantError("teleport_inputs: zero vector");
    in.teleport_inputs.push_back(qmath::StateVector(amps).normalize());
  }
}

}  // namespace

std::string_view to_string(CampaignKind k) {
  switch (k) {
    case CampaignKind::mapping: return "mapping";
    case CampaignKind::entanglement_transfer: return "entanglement-transfer";
    case CampaignKind::teleportation: return "teleportation";
    case CampaignKind::efficiency_budget: return "efficiency-budget";
    case CampaignKind::window_scan: return "window-scan";
    case CampaignKind::rotation_estimate: return "rotation-estimate";
  }
  return "?";
}

CampaignKind campaign_kind_from_string(std::string_view s) {
  for (auto k : {CampaignKind::mapping, CampaignKind::entanglement_transfer,
                 CampaignKind::teleportation, CampaignKind::efficiency_budget,
                 CampaignKind::window_scan, CampaignKind::rotation_estimate}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

double default_accidental_fraction() { return (0.824 - 0.780) / (0.824 - 0.25); }

CampaignConfig::CampaignConfig() { models.background.accidental_fraction = default_accidental_fraction(); }

CampaignConfig parse_config(const nlohmann::json& doc) {
  CampaignConfig cfg;
  Section s(doc, "config");
  if (s.has("experiment")) {
    std::string kind;
    s.get("experiment", kind);
    cfg.kind = campaign_kind_from_string(kind);
  }
  if (s.has("run")) read_run(s.child("run"), cfg.run);
  if (s.has("larmor")) read_larmor(s.child("larmor"), cfg.run.larmor);
  if (s.has("source")) read_source(s.child("source"), cfg.models.source);
  if (s.has("dephasing")) read_dephasing(s.child("dephasing"), cfg);
  if (s.has("background")) read_background(s.child("background"), cfg.models.background);
  if (s.has("efficiency")) read_efficiency(s.child("efficiency"), cfg.models.chain);
  if (s.has("budget")) read_totals(s.child("budget"), cfg);
  if (s.has("analysis")) read_analysis(s.child("analysis"), cfg.analysis);
  if (s.has("window_scan")) read_scan(s.child("window_scan"), cfg.scan);
  if (s.has("rotation")) read_rotation(s.child("rotation"), cfg.rotation);
  if (s.has("teleport_inputs")) read_inputs(s.child("teleport_inputs"), cfg.inputs);
  if (s.has("output")) {
    Section o(s.child("output"), "output");
    std::string dir;
    if (o.has("dir")) {
      o.get("dir", dir);
      cfg.out_dir = dir;
    }
    o.get("truth", cfg.truth);
    o.get("write_events", cfg.write_events);
    o.finish();
  }
  s.finish();
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
  return parse_config(doc);
}

void finalize(CampaignConfig& cfg) {
  try {
    cfg.run.validate();
    cfg.models.source.validate();
    cfg.models.background.validate();
    cfg.models.chain.validate();
    if (cfg.dephasing_calibration.enabled) {
      const auto& c = cfg.dephasing_calibration;
      const double contrast = c.contrast.value_or(cfg.models.source.werner_weight *
                                                  (1.0 - cfg.models.background.accidental_fraction));
      cfg.models.dephasing = noise::calibrate_dephasing(c.slope_per_s, c.fit_start_s, c.fit_end_s, contrast);
    }
    cfg.models.dephasing.validate();
    for (auto p : protocol::kPassages) (void)mc::expected_rates(cfg.run, cfg.models, p);
    if (cfg.analysis.bootstrap < 0) throw std::invalid_argument("analysis.bootstrap must be >= 0");
    if (cfg.analysis.ml_max_iterations < 1) {
      throw std::invalid_argument("analysis.ml_max_iterations must be >= 1");
    }
    if (cfg.analysis.background == BackgroundSource::fraction &&
        !(cfg.analysis.background_fraction >= 0.0 && cfg.analysis.background_fraction < 1.0)) {
      throw std::invalid_argument("analysis.background_estimate must lie in [0, 1)");
    }
    if (!(cfg.scan.width_s > 0.0) || !(cfg.scan.step_s > 0.0) || cfg.scan.width_s > cfg.run.exposure_s) {
      throw std::invalid_argument("window_scan: width and step must be positive, width <= exposure");
    }
    if (cfg.rotation.n_vectors < 3 || cfg.rotation.noise < 0.0 || cfg.rotation.axis.norm() == 0.0) {
      throw std::invalid_argument("rotation: need >= 3 vectors, noise >= 0 and a non-zero axis");
    }
  } catch (const std::invalid_argument& ex) {
    throw InvariantError(ex.what());
  }
}

nlohmann::ordered_json to_json(const CampaignConfig& cfg) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(cfg.kind);
  const auto& r = cfg.run;
  j["run"] = {{"n_runs", r.n_runs},
              {"exposure_s", r.exposure_s},
              {"seed", r.seed},
              {"emission_prob", r.emission_prob},
              {"gate_halfwidth_s", r.gate_halfwidth_s},
              {"larmor_bins", r.larmor_bins},
              {"second_passage_delay_s", r.second_passage_delay_s},
              {"wavepacket_decay_s", r.wavepacket_decay_s},
              {"sideband_factor", r.sideband_factor},
              {"chunk_runs", r.chunk_runs}};
  j["source"] = {{"werner_weight", cfg.models.source.werner_weight},
                 {"pair_rate_per_power", cfg.models.source.pair_rate_per_power},
                 {"pump_power_mw", cfg.models.source.pump_power_mw}};
  j["dephasing"] = {{"sigma_rate_per_s", cfg.models.dephasing.sigma_rate_per_s}};
  j["background"] = {{"accidental_fraction", cfg.models.background.accidental_fraction},
                     {"dark_rate_393_per_s", cfg.models.background.dark_rate_393_per_s},
                     {"dark_rate_854_per_s", cfg.models.background.dark_rate_854_per_s}};
  const auto& ch = cfg.models.chain;
  j["efficiency"] = {{"eta_854_a", ch.eta_854_a}, {"eta_854_b", ch.eta_854_b},
                     {"eta_393", ch.eta_393},     {"eta_gate", ch.eta_gate},
                     {"eta_abs_first", ch.eta_abs_first}, {"eta_abs_second", ch.eta_abs_second}};
  j["analysis"] = {{"bootstrap", cfg.analysis.bootstrap},
                   {"bootstrap_seed", cfg.analysis.bootstrap_seed},
                   {"ml_max_iterations", cfg.analysis.ml_max_iterations}};
  return j;
}

}  // namespace ionbell::cli
