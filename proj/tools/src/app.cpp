#include "app.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "campaign.hpp"
#include "config.hpp"

namespace ionbell::cli {

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool truth = false;
  bool strict = false;
  std::optional<int> bins;
  std::optional<int> bootstrap;
  std::optional<unsigned> threads;
  std::string events;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON campaign configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--bins", f.bins, "Larmor phase bins")->check(CLI::PositiveNumber);
  cmd->add_option("--bootstrap", f.bootstrap, "bootstrap resamples")->check(CLI::NonNegativeNumber);
}

CampaignConfig build_config(const Flags& f) {
  CampaignConfig cfg = f.config.empty() ? CampaignConfig{} : load_config(f.config);
  if (f.seed) {
    cfg.run.seed = *f.seed;
    cfg.rotation.seed = *f.seed;
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.truth) cfg.truth = true;
  if (f.bins) cfg.run.larmor_bins = *f.bins;
  if (f.bootstrap) cfg.analysis.bootstrap = *f.bootstrap;
  if (f.threads) cfg.run.threads = *f.threads;
  return cfg;
}

void print_summary(const CampaignConfig& cfg, std::ostream& out) {
  std::ifstream in(cfg.out_dir / "summary.txt");
  out << in.rdbuf();
  out << "results written to " << cfg.out_dir.string() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heralded photon-absorption campaigns: simulation, tomography and budgets", "ionbell"};
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "simulate the configured campaign and analyse it");
  add_common(simulate, f);
  simulate->add_option("--seed", f.seed, "RNG seed");
  simulate->add_flag("--truth", f.truth, "keep ground-truth accidental flags in the event file");
  simulate->add_option("--threads", f.threads, "worker threads (0: all cores)");

  auto* analyze = app.add_subcommand("analyze", "analyse an event file");
  add_common(analyze, f);
  analyze->add_option("events", f.events, "event file")->required();
  analyze->add_flag("--strict", f.strict, "abort on the first malformed line");

  auto* budget = app.add_subcommand("budget", "efficiency budget from campaign totals");
  add_common(budget, f);

  auto* scan = app.add_subcommand("scan", "fidelity against detection-window position");
  add_common(scan, f);
  scan->add_option("--seed", f.seed, "RNG seed");
  scan->add_option("--threads", f.threads, "worker threads (0: all cores)");

  auto* rotation = app.add_subcommand("rotation", "polarization rotation from Stokes vector pairs");
  add_common(rotation, f);
  rotation->add_option("--seed", f.seed, "noise seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "ionbell: " << ex.what() << "\n";
    return 2;
  }

  try {
    CampaignConfig cfg = build_config(f);
    if (*budget) cfg.kind = CampaignKind::efficiency_budget;
    if (*scan) cfg.kind = CampaignKind::window_scan;
    if (*rotation) cfg.kind = CampaignKind::rotation_estimate;
    finalize(cfg);
    if (*analyze) {
      if (!is_simulated(cfg.kind)) {
        throw ConfigError("analyze needs a simulated experiment, not '" + std::string(to_string(cfg.kind)) + "'");
      }
      analyze_file(cfg, f.events, AnalyzeOptions{f.strict});
    } else {
      run_campaign(cfg);
    }
    print_summary(cfg, out);
    return 0;
  } catch (const ConfigError& ex) {
    err << "ionbell: config error: " << ex.what() << "\n";
    return 2;
  } catch (const mc::ParseError& ex) {
    err << "ionbell: " << ex.what() << "\n";
    return 2;
  } catch (const InvariantError& ex) {
    err << "ionbell: invalid configuration: " << ex.what() << "\n";
    return 3;
  } catch (const NonConvergenceError& ex) {
    err << "ionbell: " << ex.what() << " (see diagnostics.json)\n";
    return 4;
  } catch (const std::exception& ex) {
    err << "ionbell: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace ionbell::cli
