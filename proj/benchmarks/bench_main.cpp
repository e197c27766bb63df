#include <benchmark/benchmark.h>

#include "ionbell/counts.hpp"
#include "ionbell/process.hpp"
#include "ionbell/simulator.hpp"
#include "ionbell/tomography.hpp"

namespace {

using namespace ionbell;

mc::SimulationModels bright_models() {
  mc::SimulationModels m;
  m.chain.eta_abs_first = 0.05;
  m.chain.eta_abs_second = 0.02;
  return m;
}

void BM_SimulateTransfer(benchmark::State& state) {
  mc::RunConfig cfg;
  cfg.n_runs = static_cast<std::uint64_t>(state.range(0));
  cfg.threads = 1;
  const auto models = bright_models();
  for (auto _ : state) {
    auto res = mc::simulate_runs(cfg, models, mc::Experiment::entanglement_transfer);
    benchmark::DoNotOptimize(res.candidates.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateTransfer)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

mc::CountsTable transfer_table(std::uint64_t runs) {
  mc::RunConfig cfg;
  cfg.n_runs = runs;
  cfg.threads = 1;
  const auto sim = mc::simulate_runs(cfg, bright_models(), mc::Experiment::entanglement_transfer);
  return mc::transfer_counts(mc::coincidence_gate(sim.candidates, cfg.gate_halfwidth_s, cfg), mc::Passage::first,
                             cfg.larmor_bins);
}

void BM_MlStateTomography(benchmark::State& state) {
  const mc::CountsTable table = transfer_table(2'000'000);
  for (auto _ : state) {
    auto r = estimation::ml_state_reconstruct(table, true);
    benchmark::DoNotOptimize(r.rho.data());
  }
  state.counters["events"] = table.total();
}
BENCHMARK(BM_MlStateTomography)->Unit(benchmark::kMillisecond);

void BM_LinearStateTomography(benchmark::State& state) {
  const mc::CountsTable table = transfer_table(2'000'000);
  for (auto _ : state) {
    auto r = estimation::linear_state_reconstruct(estimation::conditioned_expectations(table, true));
    benchmark::DoNotOptimize(r.rho.data());
  }
}
BENCHMARK(BM_LinearStateTomography)->Unit(benchmark::kMicrosecond);

void BM_MlProcessTomography(benchmark::State& state) {
  mc::RunConfig cfg;
  cfg.n_runs = 4'000'000;
  cfg.threads = 1;
  const mc::ExperimentInputs inputs;
  const auto sim = mc::simulate_runs(cfg, bright_models(), mc::Experiment::teleportation, inputs);
  const auto events = mc::coincidence_gate(sim.candidates, cfg.gate_halfwidth_s, cfg);
  const auto table = mc::teleport_counts(events, qmath::BellState::psi_minus, inputs.teleport_inputs.size(),
                                         cfg.larmor_bins);
  const auto data = estimation::teleport_process_data(table, inputs.teleport_inputs, true);
  for (auto _ : state) {
    auto r = estimation::ml_process_reconstruct(data);
    benchmark::DoNotOptimize(r.choi.data());
  }
}
BENCHMARK(BM_MlProcessTomography)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
