#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "app.hpp"
#include "campaign.hpp"
#include "config.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ionbell::cli;
using nlohmann::json;

class Scratch {
 public:
  Scratch() {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() /
           ("ionbell_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  const fs::path& path() const { return dir_; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_json(const fs::path& p, const json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

json bright(const std::string& experiment) {
  return json{{"experiment", experiment},
              {"run", {{"n_runs", 200000}, {"seed", 5}, {"chunk_runs", 8192}}},
              {"efficiency", {{"eta_abs_first", 0.05}, {"eta_abs_second", 0.02}}},
              {"analysis", {{"bootstrap", 3}}}};
}

json ideal(const std::string& experiment, int runs) {
  return json{{"experiment", experiment},
              {"run", {{"n_runs", runs}, {"seed", 9}, {"emission_prob", 1.0}, {"chunk_runs", 256}}},
              {"source", {{"werner_weight", 1.0}}},
              {"dephasing", {{"sigma_rate_per_s", 0.0}}},
              {"background", {{"accidental_fraction", 0.0}}},
              {"efficiency",
               {{"eta_854_a", 1.0}, {"eta_854_b", 1.0}, {"eta_393", 1.0}, {"eta_gate", 1.0},
                {"eta_abs_first", 0.5}, {"eta_abs_second", 0.5}}},
              {"analysis", {{"bootstrap", 0}}}};
}

double metric(const fs::path& summary, const std::string& name) {
  const json j = json::parse(slurp(summary));
  return j.at("metrics").at(name).at("value").get<double>();
}

TEST(Config, UnknownKeysAndTypesRejected) {
  EXPECT_THROW(parse_config(json{{"experimnet", "mapping"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"run", {{"n_runs", "many"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"run", {{"n_rnus", 5}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"experiment", "cooking"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"source", {{"fidelity", 0.9}, {"werner_weight", 0.8}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"analysis", {{"background_estimate", "guess"}}}}), ConfigError);
  const CampaignConfig ok = parse_config(json{{"experiment", "teleportation"}, {"source", {{"fidelity", 0.9164}}}});
  EXPECT_EQ(ok.kind, CampaignKind::teleportation);
  EXPECT_NEAR(ok.models.source.werner_weight, (4 * 0.9164 - 1) / 3, 1e-12);
}

TEST(Config, FinalizeChecksInvariants) {
  CampaignConfig cfg = parse_config(json{{"source", {{"werner_weight", 2.0}}}});
  EXPECT_THROW(finalize(cfg), InvariantError);
  cfg = parse_config(json{{"efficiency", {{"eta_abs_first", 0.9}}}});
  EXPECT_THROW(finalize(cfg), InvariantError);
  cfg = parse_config(json{{"dephasing", {{"calibrate", {{"slope_per_s", 50.0}}}}}});
  EXPECT_THROW(finalize(cfg), InvariantError);
  cfg = CampaignConfig{};
  finalize(cfg);
  EXPECT_NEAR(cfg.models.background.accidental_fraction, 0.044 / 0.574, 1e-12);
  EXPECT_GT(cfg.models.dephasing.sigma_rate_per_s, 0.0);
}

TEST(Cli, ExitCodes) {
  Scratch s;
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"simulate", "--bins", "x"}).code, 2);
  const auto unknown = write_json(s / "unknown.json", json{{"run", {{"runs", 5}}}});
  EXPECT_EQ(run({"simulate", "--config", unknown.string(), "--out", (s / "o1").string()}).code, 2);
  const auto bad = write_json(s / "bad.json", json{{"source", {{"werner_weight", 2}}}});
  const Outcome inv = run({"simulate", "--config", bad.string(), "--out", (s / "o2").string()});
  EXPECT_EQ(inv.code, 3);
  EXPECT_NE(inv.err.find("werner_weight"), std::string::npos);
  EXPECT_EQ(run({"budget", "--out", (s / "o3").string()}).code, 0);
}

TEST(Cli, NonConvergenceWritesDiagnostics) {
  Scratch s;
  json cfg = bright("entanglement-transfer");
  cfg["run"]["n_runs"] = 100000;
  cfg["analysis"]["ml_max_iterations"] = 1;
  const auto path = write_json(s / "c.json", cfg);
  const Outcome o = run({"simulate", "--config", path.string(), "--out", (s / "out").string()});
  EXPECT_EQ(o.code, 4);
  const json d = json::parse(slurp(s / "out" / "diagnostics.json"));
  bool any_unconverged = false;
  for (const auto& e : d.at("estimators")) any_unconverged |= !e.at("converged").get<bool>();
  EXPECT_TRUE(any_unconverged);
}

TEST(Cli, EmptyEventFileIsAnError) {
  Scratch s;
  std::ofstream(s / "events.txt") << "# nothing\n";
  const Outcome o = run({"analyze", (s / "events.txt").string(), "--out", (s / "out").string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("no events"), std::string::npos);
}

TEST(Cli, LenientAndStrictParsing) {
  Scratch s;
  const auto cfg = write_json(s / "c.json", bright("entanglement-transfer"));
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (s / "sim").string()}).code, 0);
  std::string events = slurp(s / "sim" / "events.txt");
  const auto cut = events.find('\n', events.size() / 2);
  events.insert(cut + 1, "this is not an event\n");
  std::ofstream(s / "sim" / "events.txt") << events;
  const Outcome lenient = run({"analyze", (s / "sim" / "events.txt").string(), "--config", cfg.string(),
                               "--out", (s / "lenient").string()});
  EXPECT_EQ(lenient.code, 0) << lenient.err;
  EXPECT_EQ(json::parse(slurp(s / "lenient" / "summary.json")).at("skipped_lines").get<int>(), 1);
  const Outcome strict = run({"analyze", (s / "sim" / "events.txt").string(), "--config", cfg.string(),
                              "--out", (s / "strict").string(), "--strict"});
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.err.find("line "), std::string::npos);
}

class Equivalence : public ::testing::TestWithParam<std::string> {};

TEST_P(Equivalence, AnalyzeReproducesSimulateByteForByte) {
  Scratch s;
  const auto cfg = write_json(s / "c.json", bright(GetParam()));
  for (bool truth : {false, true}) {
    const std::string sim = (s / (truth ? "sim_t" : "sim")).string();
    std::vector<std::string> args{"simulate", "--config", cfg.string(), "--out", sim};
    if (truth) args.push_back("--truth");
    ASSERT_EQ(run(args).code, 0);
    const std::string ana = (s / (truth ? "ana_t" : "ana")).string();
    const Outcome o = run({"analyze", sim + "/events.txt", "--config", cfg.string(), "--out", ana});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(slurp(fs::path(sim) / "summary.json"), slurp(fs::path(ana) / "summary.json"));
    EXPECT_EQ(slurp(fs::path(sim) / "results.json"), slurp(fs::path(ana) / "results.json"));
  }
}

TEST_P(Equivalence, DeterministicAcrossRepeatsAndThreads) {
  Scratch s;
  const auto cfg = write_json(s / "c.json", bright(GetParam()));
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (s / "a").string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (s / "b").string()}).code, 0);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (s / "c").string(), "--threads", "3"}).code, 0);
  const std::string a = slurp(s / "a" / "summary.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(s / "b" / "summary.json"));
  EXPECT_EQ(a, slurp(s / "c" / "summary.json"));
  EXPECT_EQ(slurp(s / "a" / "events.txt"), slurp(s / "c" / "events.txt"));
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (s / "d").string(), "--seed", "6"}).code, 0);
  EXPECT_NE(a, slurp(s / "d" / "summary.json"));
}

INSTANTIATE_TEST_SUITE_P(Experiments, Equivalence,
                         ::testing::Values("entanglement-transfer", "teleportation", "mapping"),
                         [](const auto& info) {
                           std::string n = info.param;
                           std::erase(n, '-');
                           return n;
                         });

TEST(Cli, IdealTeleportationIsNearPerfect) {
  Scratch s;
  const auto cfg = write_json(s / "c.json", ideal("teleportation", 6000));
  const Outcome o = run({"simulate", "--config", cfg.string(), "--out", (s / "out").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path sum = s / "out" / "summary.json";
  EXPECT_NEAR(metric(sum, "phi-.process_fidelity_X_corrected"), 1.0, 0.005);
  EXPECT_NEAR(metric(sum, "phi+.process_fidelity_Y_corrected"), 1.0, 0.005);
  EXPECT_NEAR(metric(sum, "psi-.process_fidelity_I_corrected"), 1.0, 0.005);
  EXPECT_NEAR(metric(sum, "psi+.process_fidelity_Z_corrected"), 1.0, 0.005);
}

TEST(Cli, IdealTransferAndMapping) {
  Scratch s;
  const auto t = write_json(s / "t.json", ideal("entanglement-transfer", 3000));
  ASSERT_EQ(run({"simulate", "--config", t.string(), "--out", (s / "t").string()}).code, 0);
  EXPECT_NEAR(metric(s / "t" / "summary.json", "first.fidelity_psi-_corrected"), 1.0, 0.01);
  EXPECT_NEAR(metric(s / "t" / "summary.json", "second.fidelity_phi-_corrected"), 1.0, 0.01);
  const auto m = write_json(s / "m.json", ideal("mapping", 3000));
  ASSERT_EQ(run({"simulate", "--config", m.string(), "--out", (s / "m").string()}).code, 0);
  EXPECT_NEAR(metric(s / "m" / "summary.json", "first.process_fidelity_I_corrected"), 1.0, 0.01);
  EXPECT_NEAR(metric(s / "m" / "summary.json", "second.process_fidelity_X_corrected"), 1.0, 0.01);
}

TEST(Cli, BudgetTable) {
  Scratch s;
  const Outcome o = run({"budget", "--out", s.path().string()});
  ASSERT_EQ(o.code, 0);
  for (const char* v : {"1.76e-04", "2.21e-05", "6.47e-07", "8.15e-08", "1.3888e+11", "1.04e-03", "1.32e-04",
                        "8.4e-06", "49.75"}) {
    EXPECT_NE(o.out.find(v), std::string::npos) << v;
  }
}

TEST(Cli, RotationReport) {
  Scratch s;
  const Outcome o = run({"rotation", "--out", s.path().string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const json j = json::parse(slurp(s / "summary.json"));
  EXPECT_LT(j.at("metrics").at("rotation.error_deg").at("value").get<double>(), 1.0);
}

}  // namespace
