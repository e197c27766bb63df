#include "ionbell/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace ionbell::mc {

namespace {

using protocol::AtomicProjection;
using qmath::Complex;
using qmath::Matrix;

constexpr Complex kI{0.0, 1.0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t chunk) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(chunk + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

int passage_index(Passage p) { return p == Passage::first ? 0 : 1; }
int herald_index(Herald h) { return h == Herald::H ? 0 : 1; }
int basis_index(PolarizationBasis b) {
  switch (b) {
    case PolarizationBasis::HV: return 0;
    case PolarizationBasis::DA: return 1;
    case PolarizationBasis::RL: return 2;
  }
  return 0;
}

AtomicOutcome atomic_outcome(bool superposition, int bit) {
  if (superposition) return bit == 0 ? AtomicOutcome::plus : AtomicOutcome::minus;
  return bit == 0 ? AtomicOutcome::shelved0 : AtomicOutcome::shelved1;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double real_trace_product(const Matrix& a, const Matrix& b) {
  // Re tr(a b)
  return (a.transpose().cwiseProduct(b)).sum().real();
}

struct Outcome {
  Herald herald;
  AtomicOutcome atomic;
  PolarizationBasis basis;
  int click;
};

// Precomputed operators and Born-rule sampling for one experiment.
class Sampler {
 public:
  Sampler(Experiment experiment, const SimulationModels& models, const ExperimentInputs& inputs,
          const RunConfig& cfg)
      : experiment_(experiment), models_(models), inputs_(inputs), cfg_(cfg) {
    rho_ab_ = noise::source_density_matrix(models.source).matrix();
    for (Passage p : protocol::kPassages) {
      for (Herald h : protocol::kHeralds) {
        const Matrix k0 = protocol::mapping_kraus(p, h, 0.0).matrix();
        const Matrix kpi = protocol::mapping_kraus(p, h, std::numbers::pi).matrix();
        kraus_const_[passage_index(p)][herald_index(h)] = 0.5 * (k0 + kpi);
        kraus_phase_[passage_index(p)][herald_index(h)] = 0.5 * (k0 - kpi);
        for (int a = 0; a < 2; ++a) {
          const auto outcome =
              protocol::BellOutcome::from_triple(p, h, protocol::kAtomicProjections[a]);
          povm_[passage_index(p)][herald_index(h)][a] =
              protocol::bell_povm_element(outcome).matrix();
        }
      }
    }
    for (PolarizationBasis b : protocol::kPolarizationBases) {
      for (int d = 0; d < 2; ++d) {
        click_proj_[basis_index(b)][d] =
            qmath::projector(protocol::polarization_state(b, d)).matrix();
      }
    }
    for (int bit = 0; bit < 2; ++bit) {
      atom_proj_[0][bit] = qmath::projector(qmath::basis_state(2, bit)).matrix();
      atom_proj_[1][bit] =
          protocol::ground_projector(protocol::kAtomicProjections[bit]).matrix();
    }
    if (experiment_ == Experiment::teleportation) {
      if (inputs_.teleport_inputs.empty()) {
        throw std::invalid_argument("simulate_runs: no teleportation inputs");
      }
      for (const auto& in : inputs_.teleport_inputs) {
        if (in.dim() != 2 || !in.is_normalized(1e-9)) {
          throw std::invalid_argument("simulate_runs: teleportation inputs must be normalized qubits");
        }
      }
    }
  }

  // Born-rule draw over all outcomes of `passage`. Returns nullopt with the
  // probability that the POVM element for this passage does not fire.
  std::optional<Outcome> signal(std::uint64_t run, Passage passage, double t, double u) const {
    const double phase = protocol::frame_phase(t, cfg_.larmor);
    const double c = models_.dephasing.coherence(t);
    const int pi = passage_index(passage);
    const Complex rot = std::exp(kI * phase);
    double cum = 0.0;
    switch (experiment_) {
      case Experiment::entanglement_transfer: {
        const TransferSetting s = transfer_setting(run);
        const int mode = s.superposition_readout ? 1 : 0;
        for (Herald h : protocol::kHeralds) {
          const Matrix k = kraus_const_[pi][herald_index(h)] + rot * kraus_phase_[pi][herald_index(h)];
          const Matrix kk = kron(k, Matrix::Identity(2, 2));
          const Matrix m = noise::dephase(qmath::swap_qubits(kk * rho_ab_ * kk.adjoint()), c,
                                          qmath::Subsystem::second);
          for (int click = 0; click < 2; ++click) {
            for (int bit = 0; bit < 2; ++bit) {
              const Matrix eff =
                  kron(click_proj_[basis_index(s.basis)][click], atom_proj_[mode][bit]);
              cum += real_trace_product(eff, m);
              if (u < cum) return Outcome{h, atomic_outcome(s.superposition_readout, bit), s.basis, click};
            }
          }
        }
        return std::nullopt;
      }
      case Experiment::mapping: {
        const MappingSetting s = mapping_setting(run);
        const int mode = s.superposition_readout ? 1 : 0;
        const Matrix photon =
            qmath::projector(protocol::polarization_state(s.input_basis, s.input_detector)).matrix();
        for (Herald h : protocol::kHeralds) {
          const Matrix k = kraus_const_[pi][herald_index(h)] + rot * kraus_phase_[pi][herald_index(h)];
          const Matrix m = noise::dephase(k * photon * k.adjoint(), c, qmath::Subsystem::first);
          for (int bit = 0; bit < 2; ++bit) {
            cum += real_trace_product(atom_proj_[mode][bit], m);
            if (u < cum) {
              return Outcome{h, atomic_outcome(s.superposition_readout, bit), s.input_basis,
                             s.input_detector};
            }
          }
        }
        return std::nullopt;
      }
      case Experiment::teleportation: {
        const TeleportSetting s = teleport_setting(run, inputs_.teleport_inputs.size());
        const auto& in = inputs_.teleport_inputs[s.input_index];
        qmath::Vector d(2);
        d << in[0], in[1] * rot;
        const Matrix rho_d = noise::dephase(Matrix(d * d.adjoint()), c, qmath::Subsystem::first);
        for (Herald h : protocol::kHeralds) {
          for (int a = 0; a < 2; ++a) {
            const Matrix m =
                protocol::teleport_partner_state(povm_[pi][herald_index(h)][a], rho_ab_, rho_d);
            for (int click = 0; click < 2; ++click) {
              cum += real_trace_product(click_proj_[basis_index(s.basis)][click], m);
              if (u < cum) return Outcome{h, atomic_outcome(true, a), s.basis, click};
            }
          }
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // Accidental coincidence: every recorded bit is uniform.
  Outcome accidental(std::uint64_t run, std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> bit(0, 1);
    const Herald h = bit(rng) == 0 ? Herald::H : Herald::V;
    const int atom = bit(rng);
    const int click = bit(rng);
    switch (experiment_) {
      case Experiment::entanglement_transfer: {
        const TransferSetting s = transfer_setting(run);
        return Outcome{h, atomic_outcome(s.superposition_readout, atom), s.basis, click};
      }
      case Experiment::mapping: {
        const MappingSetting s = mapping_setting(run);
        return Outcome{h, atomic_outcome(s.superposition_readout, atom), s.input_basis,
                       s.input_detector};
      }
      case Experiment::teleportation: {
        const TeleportSetting s = teleport_setting(run, inputs_.teleport_inputs.size());
        return Outcome{h, atomic_outcome(true, atom), s.basis, click};
      }
    }
    return Outcome{h, AtomicOutcome::plus, PolarizationBasis::HV, click};
  }

 private:
  Experiment experiment_;
  const SimulationModels& models_;
  const ExperimentInputs& inputs_;
  const RunConfig& cfg_;
  Matrix rho_ab_;
  Matrix kraus_const_[2][2];
  Matrix kraus_phase_[2][2];
  Matrix povm_[2][2][2];
  Matrix click_proj_[3][2];
  Matrix atom_proj_[2][2];
};

struct ChunkOutput {
  std::vector<EventRecord> events;
  std::uint64_t rejected_by_emission = 0;
};

struct PassagePlan {
  Passage passage;
  double signal_candidates_per_run;    // before emission and Born thinning
  double background_candidates_per_run;  // over the whole acquisition window
};

EventRecord make_event(std::uint64_t run, Passage p, double t, double delay_ns,
                       const Outcome& o, bool accidental, const RunConfig& cfg) {
  EventRecord e;
  e.run_index = run;
  e.passage = p;
  e.herald_time_ns = static_cast<std::int64_t>(std::floor(t * 1e9));
  e.herald = o.herald;
  e.atomic = o.atomic;
  e.basis = o.basis;
  e.click = o.click;
  e.phase_mrad = phase_to_mrad(protocol::frame_phase(t, cfg.larmor));
  e.accidental = accidental;
  e.partner_delay_ns = delay_ns;
  return e;
}

ChunkOutput run_chunk(std::uint64_t chunk, const RunConfig& cfg, const Sampler& sampler,
                      const std::vector<PassagePlan>& plans) {
  ChunkOutput out;
  const std::uint64_t start = chunk * cfg.chunk_runs;
  const std::uint64_t runs = std::min<std::uint64_t>(cfg.chunk_runs, cfg.n_runs - start);
  auto rng = chunk_engine(cfg.seed, chunk);
  std::uniform_int_distribution<std::uint64_t> pick_run(0, runs - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double decay_ns = cfg.wavepacket_decay_s * 1e9;
  std::exponential_distribution<double> jitter(1.0 / decay_ns);
  const double window_ns = cfg.sideband_factor * cfg.gate_halfwidth_s * 1e9;

  for (const PassagePlan& plan : plans) {
    const double nominal = nominal_delay_ns(cfg, plan.passage);
    if (plan.signal_candidates_per_run > 0.0) {
      std::poisson_distribution<std::uint64_t> count(plan.signal_candidates_per_run *
                                                     static_cast<double>(runs));
      const std::uint64_t n = count(rng);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t run = start + pick_run(rng);
        const double t = unit(rng) * cfg.exposure_s;
        const double delay = nominal + jitter(rng);
        const bool emitted = unit(rng) < cfg.emission_prob;
        const double u = unit(rng);
        if (!emitted) {
          ++out.rejected_by_emission;
          continue;
        }
        if (delay - nominal > window_ns) continue;
        if (auto o = sampler.signal(run, plan.passage, t, u)) {
          out.events.push_back(make_event(run, plan.passage, t, delay, *o, false, cfg));
        }
      }
    }
    if (plan.background_candidates_per_run > 0.0) {
      std::poisson_distribution<std::uint64_t> count(plan.background_candidates_per_run *
                                                     static_cast<double>(runs));
      const std::uint64_t n = count(rng);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t run = start + pick_run(rng);
        const double t = unit(rng) * cfg.exposure_s;
        const double delay = nominal + (2.0 * unit(rng) - 1.0) * window_ns;
        const Outcome o = sampler.accidental(run, rng);
        out.events.push_back(make_event(run, plan.passage, t, delay, o, true, cfg));
      }
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const EventRecord& a, const EventRecord& b) {
    if (a.run_index != b.run_index) return a.run_index < b.run_index;
    if (a.herald_time_ns != b.herald_time_ns) return a.herald_time_ns < b.herald_time_ns;
    if (a.passage != b.passage) return a.passage == Passage::first;
    return a.partner_delay_ns < b.partner_delay_ns;
  });
  return out;
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::mapping: return "mapping";
    case Experiment::entanglement_transfer: return "entanglement-transfer";
    case Experiment::teleportation: return "teleportation";
  }
  return "?";
}

Experiment experiment_from_string(std::string_view s) {
  if (s == "mapping") return Experiment::mapping;
  if (s == "entanglement-transfer") return Experiment::entanglement_transfer;
  if (s == "teleportation") return Experiment::teleportation;
  throw std::invalid_argument("unknown experiment '" + std::string(s) + "'");
}

void RunConfig::validate() const {
  if (n_runs == 0) throw std::invalid_argument("RunConfig: n_runs must be positive");
  if (!(exposure_s > 0.0)) throw std::invalid_argument("RunConfig: exposure must be positive");
  if (!(emission_prob > 0.0 && emission_prob <= 1.0)) {
    throw std::invalid_argument("RunConfig: emission_prob must lie in (0, 1]");
  }
  if (!(gate_halfwidth_s > 0.0)) {
    throw std::invalid_argument("RunConfig: gate_halfwidth must be positive");
  }
  if (larmor_bins < 2) throw std::invalid_argument("RunConfig: larmor_bins must be >= 2");
  if (!(second_passage_delay_s >= 0.0) || !(wavepacket_decay_s > 0.0)) {
    throw std::invalid_argument("RunConfig: delays must be non-negative, decay positive");
  }
  if (sideband_factor < 1) throw std::invalid_argument("RunConfig: sideband_factor must be >= 1");
  if (chunk_runs == 0) throw std::invalid_argument("RunConfig: chunk_runs must be positive");
  larmor.validate();
}

std::vector<protocol::StateVector> ExperimentInputs::default_teleport_inputs() {
  const double s = 1.0 / std::sqrt(2.0);
  return {protocol::StateVector{1.0, 0.0}, protocol::StateVector{0.0, 1.0},
          protocol::StateVector{s, s}};
}

TransferSetting transfer_setting(std::uint64_t run) {
  const auto s = static_cast<int>(run % 6);
  return TransferSetting{protocol::kPolarizationBases[s % 3], s >= 3};
}

MappingSetting mapping_setting(std::uint64_t run) {
  const auto i = static_cast<int>(run % 6);
  return MappingSetting{protocol::kPolarizationBases[i / 2], i % 2, ((run / 6) % 2) == 1};
}

TeleportSetting teleport_setting(std::uint64_t run, std::size_t n_inputs) {
  if (n_inputs == 0) throw std::invalid_argument("teleport_setting: no inputs");
  return TeleportSetting{static_cast<std::size_t>(run % n_inputs),
                         protocol::kPolarizationBases[(run / n_inputs) % 3]};
}

double absorption_scale(double eta_abs, double accidental_fraction, double emission_prob) {
  // The registered rate per incoming photon is eta_abs; a fraction f of it is
  // accidental. Built-in inputs have half their weight in each passage subspace.
  const double s = 2.0 * eta_abs * (1.0 - accidental_fraction) / emission_prob;
  if (s > 1.0 + 1e-12) {
    throw std::invalid_argument("unphysical configuration: absorption POVM scale " +
                                std::to_string(s) + " exceeds 1");
  }
  return std::min(s, 1.0);
}

PassageRates expected_rates(const RunConfig& cfg, const SimulationModels& models,
                            Passage passage) {
  const auto& ch = models.chain;
  const double f = models.background.accidental_fraction;
  const double pairs_per_run = models.source.pair_rate_per_s() * cfg.exposure_s;
  const double eta_abs = passage == Passage::first ? ch.eta_abs_first : ch.eta_abs_second;
  const double accept = gate_acceptance(cfg.gate_halfwidth_s, cfg.wavepacket_decay_s);
  const double s = absorption_scale(eta_abs, f, cfg.emission_prob);
  PassageRates r;
  r.signal_in_gate =
      pairs_per_run * ch.eta_854_a * ch.eta_854_b * ch.eta_393 * s * cfg.emission_prob * 0.5 * accept;
  r.accidental_in_gate = f > 0.0 ? r.signal_in_gate * f / (1.0 - f) : 0.0;
  // A dark count on one of two 393 detectors coinciding with a partner
  // detection, or on one of two 854 detectors coinciding with a herald.
  const double partner_rate = models.source.pair_rate_per_s() * ch.eta_854_b;
  const double herald_rate = models.source.pair_rate_per_s() * ch.eta_854_a * ch.eta_393 *
                             (ch.eta_abs_first + ch.eta_abs_second);
  const double gate = 2.0 * cfg.gate_halfwidth_s;
  r.dark_in_gate = cfg.exposure_s * gate *
                   (2.0 * models.background.dark_rate_393_per_s * partner_rate +
                    2.0 * models.background.dark_rate_854_per_s * herald_rate);
  return r;
}

double nominal_delay_ns(const RunConfig& cfg, Passage passage) {
  return passage == Passage::first ? 0.0 : cfg.second_passage_delay_s * 1e9;
}

SimulationResult simulate_runs(const RunConfig& cfg, const SimulationModels& models,
                               Experiment experiment, const ExperimentInputs& inputs) {
  cfg.validate();
  models.source.validate();
  models.dephasing.validate();
  models.background.validate();
  models.chain.validate();

  const Sampler sampler(experiment, models, inputs, cfg);
  std::vector<PassagePlan> plans;
  const double pairs_per_run = models.source.pair_rate_per_s() * cfg.exposure_s;
  const auto& ch = models.chain;
  for (Passage p : protocol::kPassages) {
    const double eta_abs = p == Passage::first ? ch.eta_abs_first : ch.eta_abs_second;
    const double s = absorption_scale(eta_abs, models.background.accidental_fraction,
                                      cfg.emission_prob);
    const PassageRates r = expected_rates(cfg, models, p);
    PassagePlan plan{p, pairs_per_run * ch.eta_854_a * ch.eta_854_b * ch.eta_393 * s,
                     (r.accidental_in_gate + r.dark_in_gate) * cfg.sideband_factor};
    plans.push_back(plan);
  }

  const std::uint64_t n_chunks = (cfg.n_runs + cfg.chunk_runs - 1) / cfg.chunk_runs;
  std::vector<ChunkOutput> outputs(n_chunks);
  unsigned n_threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                        : cfg.threads;
  n_threads = static_cast<unsigned>(std::min<std::uint64_t>(n_threads, n_chunks));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    try {
      for (std::uint64_t c = next++; c < n_chunks && !failed; c = next++) {
        outputs[c] = run_chunk(c, cfg, sampler, plans);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimulationResult result;
  std::size_t total = 0;
  for (const auto& o : outputs) total += o.events.size();
  result.candidates.reserve(total);
  for (auto& o : outputs) {
    result.candidates.insert(result.candidates.end(), o.events.begin(), o.events.end());
    result.signal_rejected_by_emission += o.rejected_by_emission;
  }
  return result;
}

std::vector<EventRecord> coincidence_gate(const std::vector<EventRecord>& events,
                                          double halfwidth_s, const RunConfig& cfg) {
  std::vector<EventRecord> out;
  if (!(halfwidth_s > 0.0)) return out;
  const double hw_ns = halfwidth_s * 1e9;
  for (const auto& e : events) {
    if (std::abs(e.partner_delay_ns - nominal_delay_ns(cfg, e.passage)) <= hw_ns) out.push_back(e);
  }
  return out;
}

SidebandTally sideband_tally(const std::vector<EventRecord>& candidates, const RunConfig& cfg) {
  SidebandTally t;
  const double hw_ns = cfg.gate_halfwidth_s * 1e9;
  for (const auto& e : candidates) {
    if (std::abs(e.partner_delay_ns - nominal_delay_ns(cfg, e.passage)) > hw_ns) {
      (e.passage == Passage::first ? t.first : t.second) += 1;
    }
  }
  t.width_ratio = static_cast<double>(cfg.sideband_factor) - 1.0;
  return t;
}

double gate_acceptance(double halfwidth_s, double decay_s) {
  if (!(halfwidth_s > 0.0)) return 0.0;
  if (!(decay_s > 0.0)) throw std::invalid_argument("gate_acceptance: decay must be positive");
  return -std::expm1(-halfwidth_s / decay_s);
}

}  // namespace ionbell::mc
