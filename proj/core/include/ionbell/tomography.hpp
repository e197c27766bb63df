#pragma once

// Two-qubit (partner photon x atom) state tomography from count tables.

#include <array>
#include <stdexcept>
#include <vector>

#include "ionbell/counts.hpp"
#include "ionbell/qmath.hpp"

namespace ionbell::estimation {

using qmath::DensityMatrix;
using qmath::Matrix;

/// <sigma_i x sigma_j>, i indexing the photon and j the atom, both in {I, X, Y, Z}.
using Expectations = std::array<std::array<double, 4>, 4>;

class IncompleteDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Expectations exact_expectations(const Matrix& rho);

/// Photon eigenvalue-weighted composition of conditioned atomic expectations:
///   <s_i x s_j> = sum_k lambda_k P(k_i) <s_j>|k_i.
/// <s_z> comes from the shelving readout; <s_x>, <s_y> from a fringe fit of the
/// superposition readout against the (herald-folded) Larmor phase.
/// `transfer` uses the layout of mc::transfer_counts. Throws IncompleteDataError
/// if a setting has no events or a fringe cannot be fitted.
Expectations conditioned_expectations(const mc::CountsTable& transfer, bool correct_binning);

struct LinearReconstruction {
  Matrix rho;  // Hermitian, unit trace
  double min_eigenvalue;
  bool physical;  // min_eigenvalue >= -1e-12
};

/// rho = 1/4 sum <s_i x s_j> s_i x s_j.
LinearReconstruction linear_state_reconstruct(const Expectations& e);

/// Effect of the superposition readout at Larmor phase x, averaged over a bin
/// with attenuation v: (1 +- v (cos x X - sin x Y)) / 2. sign = +1 for |+>.
Matrix fringe_effect(int sign, double x, double v);

/// One multinomial cell: a POVM effect, its count, and the group (measurement
/// setting) it belongs to. Effects within a group sum to the identity.
struct StateDatum {
  Matrix effect;
  double count;
  int group;
};

/// Effects and counts for mc::transfer_counts. Shelving settings are merged
/// over bins; superposition settings keep one group per bin.
std::vector<StateDatum> transfer_state_data(const mc::CountsTable& transfer, bool correct_binning);

/// True if the effects span the full operator space of the given dimension.
bool informationally_complete(const std::vector<Matrix>& effects, int dim);

struct MlOptions {
  double tolerance = 1e-10;
  int max_iterations = 100000;
  bool record_trace = false;
};

struct MlStateResult {
  Matrix rho;
  int iterations = 0;
  double log_likelihood = 0.0;  // per count
  bool converged = false;
  std::vector<double> trace;  // log-likelihood after each iteration, if requested
};

/// Diluted R rho R iteration. Throws IncompleteDataError if the populated
/// effects are not informationally complete or no counts are present.
MlStateResult ml_state_reconstruct(const std::vector<StateDatum>& data, const MlOptions& opt = {});
MlStateResult ml_state_reconstruct(const mc::CountsTable& transfer, bool correct_binning,
                                   const MlOptions& opt = {});

/// Normalized per-count log-likelihood of a state.
double state_log_likelihood(const std::vector<StateDatum>& data, const Matrix& rho);

}  // namespace ionbell::estimation
