#pragma once

// Single-qubit process tomography in the Pauli basis.
//
// A channel E is stored through its Choi matrix J = sum_ij |i><j| x E(|i><j|)
// (input factor first, Tr J = 2) and reported as chi with
// E(rho) = sum_mn chi_mn s_m rho s_n^dagger over {I, X, Y, Z}.

#include <array>
#include <vector>

#include "ionbell/counts.hpp"
#include "ionbell/qmath.hpp"
#include "ionbell/tomography.hpp"

namespace ionbell::estimation {

class ProcessMatrix {
 public:
  /// Throws std::invalid_argument unless chi is 4x4, Hermitian (1e-8),
  /// unit trace (1e-6) and PSD (min eigenvalue >= -1e-6).
  explicit ProcessMatrix(Matrix chi);

  static ProcessMatrix from_unitary(const Matrix& u);
  static ProcessMatrix from_pauli(qmath::Pauli p);

  const Matrix& chi() const { return chi_; }
  double fidelity_to(qmath::Pauli p) const;
  std::array<double, 4> diagonal() const;

 private:
  Matrix chi_;
};

Matrix choi_from_chi(const Matrix& chi);
Matrix chi_from_choi(const Matrix& choi);
/// Output of the channel with Choi matrix J: Tr_in[J (rho^T x 1)].
Matrix apply_choi(const Matrix& choi, const Matrix& rho);
Matrix apply_process(const ProcessMatrix& chi, const Matrix& rho);

/// One multinomial cell of a process experiment.
struct ProcessDatum {
  Matrix input;   // 2x2 input density matrix
  Matrix effect;  // 2x2 output POVM element
  double count;
  int group;      // effects within a group sum to the identity
};

struct MlProcessResult {
  ProcessMatrix chi;
  Matrix choi;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
};

/// Likelihood iteration over trace-preserving Choi matrices. Throws
/// IncompleteDataError when the populated inputs and effects do not determine
/// the channel (e.g. inputs confined to a plane of the Bloch ball).
MlProcessResult ml_process_reconstruct(const std::vector<ProcessDatum>& data,
                                       const MlOptions& opt = {});

/// (2 chi_11 + 1) / 3. Throws std::invalid_argument for chi_11 outside [0, 1].
double mean_overlap_fidelity(double chi11);

/// Input state of a D-qubit preparation after the frame rotation diag(1, e^{ix}),
/// with the coherence multiplied by v to account for averaging over a bin.
Matrix rotated_input(const qmath::StateVector& input, double x, double v);

/// Teleportation data from mc::teleport_counts: input = rotated D state of the
/// run's input, effect = partner-photon projector.
std::vector<ProcessDatum> teleport_process_data(const mc::CountsTable& table,
                                                const std::vector<qmath::StateVector>& inputs,
                                                bool correct_binning);

/// Mapping data from mc::mapping_counts: input = photon polarization state,
/// effect = atomic readout (shelving or Larmor-phase dependent superposition).
std::vector<ProcessDatum> mapping_process_data(const mc::CountsTable& table, bool correct_binning);

}  // namespace ionbell::estimation
