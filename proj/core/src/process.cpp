#include "ionbell/process.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "ionbell/fringe.hpp"
#include "ionbell/protocol.hpp"
#include "ml_common.hpp"

namespace ionbell::estimation {

namespace {

constexpr double kExactFitTolerance = 1e-10;

using qmath::Complex;
using qmath::Pauli;

// Column vectors v_m with J = sum chi_mn v_m v_n^dagger; v_m[(i, j)] = (s_m)_{j i}.
std::array<qmath::Vector, 4> choi_basis() {
  std::array<qmath::Vector, 4> out;
  for (int m = 0; m < 4; ++m) {
    const Matrix s = qmath::pauli(qmath::pauli_from_index(m)).matrix();
    qmath::Vector v(4);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) v(2 * i + j) = s(j, i);
    }
    out[static_cast<std::size_t>(m)] = v;
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  return qmath::tensor(qmath::Operator(a), qmath::Operator(b)).matrix();
}

// Tr_out of a (input x output) operator.
Matrix trace_output(const Matrix& x) {
  Matrix out = Matrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int i2 = 0; i2 < 2; ++i2) {
      for (int j = 0; j < 2; ++j) out(i, i2) += x(2 * i + j, 2 * i2 + j);
    }
  }
  return out;
}

Matrix inverse_sqrt(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(detail::hermitize(h));
  Eigen::VectorXd ev = es.eigenvalues();
  Matrix d = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index k = 0; k < ev.size(); ++k) d(k, k) = 1.0 / std::sqrt(std::max(ev(k), 1e-300));
  return es.eigenvectors() * d * es.eigenvectors().adjoint();
}

Matrix click_projector(int basis, int click) {
  return qmath::projector(protocol::polarization_state(protocol::kPolarizationBases[basis], click))
      .matrix();
}

}  // namespace

ProcessMatrix::ProcessMatrix(Matrix chi) : chi_(std::move(chi)) {
  if (chi_.rows() != 4 || chi_.cols() != 4) throw std::invalid_argument("ProcessMatrix: chi must be 4x4");
  if ((chi_ - chi_.adjoint()).cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("ProcessMatrix: chi is not Hermitian");
  }
  chi_ = detail::hermitize(chi_);
  if (std::abs(chi_.trace().real() - 1.0) > 1e-6) {
    throw std::invalid_argument("ProcessMatrix: trace of chi differs from 1");
  }
  if (qmath::min_eigenvalue(chi_) < -1e-6) {
    throw std::invalid_argument("ProcessMatrix: chi is not positive semidefinite");
  }
}

ProcessMatrix ProcessMatrix::from_unitary(const Matrix& u) {
  if (u.rows() != 2 || u.cols() != 2) throw std::invalid_argument("from_unitary: need 2x2");
  qmath::Vector c(4);
  for (int m = 0; m < 4; ++m) {
    c(m) = 0.5 * (qmath::pauli(qmath::pauli_from_index(m)).matrix() * u).trace();
  }
  return ProcessMatrix(Matrix(c * c.adjoint()));
}

ProcessMatrix ProcessMatrix::from_pauli(Pauli p) { return from_unitary(qmath::pauli(p).matrix()); }

double ProcessMatrix::fidelity_to(Pauli p) const {
  const auto k = static_cast<Eigen::Index>(p);
  return chi_(k, k).real();
}

std::array<double, 4> ProcessMatrix::diagonal() const {
  return {chi_(0, 0).real(), chi_(1, 1).real(), chi_(2, 2).real(), chi_(3, 3).real()};
}

Matrix choi_from_chi(const Matrix& chi) {
  const auto v = choi_basis();
  Matrix j = Matrix::Zero(4, 4);
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) j += chi(m, n) * v[m] * v[n].adjoint();
  }
  return j;
}

Matrix chi_from_choi(const Matrix& choi) {
  const auto v = choi_basis();
  Matrix chi(4, 4);
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) chi(m, n) = (v[m].adjoint() * choi * v[n])(0, 0) / 4.0;
  }
  return chi;
}

Matrix apply_choi(const Matrix& choi, const Matrix& rho) {
  Matrix out = Matrix::Zero(2, 2);
  for (int j = 0; j < 2; ++j) {
    for (int j2 = 0; j2 < 2; ++j2) {
      Complex acc = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int i2 = 0; i2 < 2; ++i2) acc += choi(2 * i + j, 2 * i2 + j2) * rho(i, i2);
      }
      out(j, j2) = acc;
    }
  }
  return out;
}

Matrix apply_process(const ProcessMatrix& chi, const Matrix& rho) {
  return apply_choi(choi_from_chi(chi.chi()), rho);
}

MlProcessResult ml_process_reconstruct(const std::vector<ProcessDatum>& data, const MlOptions& opt) {
  if (data.empty()) throw IncompleteDataError("ml_process_reconstruct: no data");
  std::set<int> populated;
  for (const auto& x : data) {
    if (x.input.rows() != 2 || x.input.cols() != 2 || x.effect.rows() != 2 || x.effect.cols() != 2) {
      throw std::invalid_argument("ml_process_reconstruct: inputs and effects must be 2x2");
    }
    if (x.count < 0.0) throw std::invalid_argument("ml_process_reconstruct: negative count");
    if (x.count > 0.0) populated.insert(x.group);
  }
  detail::LinearData d;
  d.dim = 4;
  d.effects.resize(16, static_cast<Eigen::Index>(data.size()));
  d.counts.resize(static_cast<Eigen::Index>(data.size()));
  std::vector<Matrix> informative;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const Matrix f = kron(data[j].input.transpose(), data[j].effect);
    d.effects.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXcd>(f.data(), 16);
    d.counts(static_cast<Eigen::Index>(j)) = data[j].count;
    d.total += data[j].count;
    if (populated.count(data[j].group) != 0) informative.push_back(f);
  }
  if (!(d.total > 0.0)) throw IncompleteDataError("ml_process_reconstruct: no counts");
  if (!detail::spans_operator_space(informative, 4)) {
    throw IncompleteDataError("ml_process_reconstruct: inputs and measurements do not span the qubit space");
  }

  std::vector<int> groups;
  for (const auto& x : data) groups.push_back(x.group);
  if (const auto exact = detail::exact_frequency_fit(d, groups, kExactFitTolerance)) {
    const Matrix tp = trace_output(*exact) - Matrix::Identity(2, 2);
    if (detail::min_eigenvalue(*exact) >= -kExactFitTolerance && tp.cwiseAbs().maxCoeff() < kExactFitTolerance) {
      Matrix chi = detail::hermitize(chi_from_choi(*exact));
      chi /= chi.trace().real();
      return MlProcessResult{ProcessMatrix(chi), *exact, 0, d.log_likelihood(*exact), true};
    }
  }

  Matrix choi = Matrix::Identity(4, 4) / 2.0;  // completely depolarizing channel
  double l = d.log_likelihood(choi);
  int iterations = 0;
  bool converged = false;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    iterations = it;
    const Matrix k = d.gradient_operator(choi);
    const Matrix kjk = k * choi * k;
    const Matrix lam = kron(inverse_sqrt(trace_output(kjk)), Matrix::Identity(2, 2));
    const Matrix target = detail::hermitize(lam * kjk * lam);
    double step = 1.0;
    Matrix next = target;
    double l_next = d.log_likelihood(next);
    int halvings = 0;
    while (l_next < l && halvings < 50) {
      step *= 0.5;
      ++halvings;
      next = (1.0 - step) * choi + step * target;
      l_next = d.log_likelihood(next);
    }
    if (l_next < l) {
      converged = true;
      break;
    }
    const double gain = l_next - l;
    choi = next;
    l = l_next;
    if (gain < opt.tolerance) {
      converged = true;
      break;
    }
  }
  Matrix chi = detail::hermitize(chi_from_choi(choi));
  chi /= chi.trace().real();
  return MlProcessResult{ProcessMatrix(chi), choi, iterations, l, converged};
}

double mean_overlap_fidelity(double chi11) {
  if (!(chi11 >= -1e-9 && chi11 <= 1.0 + 1e-9)) {
    throw std::invalid_argument("mean_overlap_fidelity: chi_11 must lie in [0, 1]");
  }
  return (2.0 * chi11 + 1.0) / 3.0;
}

Matrix rotated_input(const qmath::StateVector& input, double x, double v) {
  if (input.dim() != 2) throw std::invalid_argument("rotated_input: input must be a qubit");
  Matrix rho = input.amplitudes() * input.amplitudes().adjoint();
  const Complex phase = std::exp(Complex(0.0, -x));
  rho(0, 1) *= phase * v;
  rho(1, 0) = std::conj(rho(0, 1));
  return rho;
}

std::vector<ProcessDatum> teleport_process_data(const mc::CountsTable& table,
                                                const std::vector<qmath::StateVector>& inputs,
                                                bool correct_binning) {
  if (table.n_settings() != 3 * static_cast<int>(inputs.size()) || table.n_outcomes() != 2) {
    throw std::invalid_argument("teleport_process_data: table does not match the inputs");
  }
  const int n_bins = table.n_bins();
  const double v = correct_binning ? binning_attenuation(n_bins) : 1.0;
  std::vector<ProcessDatum> data;
  for (int s = 0; s < table.n_settings(); ++s) {
    const auto& in = inputs[static_cast<std::size_t>(s / 3)];
    const int basis = s % 3;
    for (int bin = 0; bin < n_bins; ++bin) {
      const Matrix rho = rotated_input(in, mc::bin_centre(bin, n_bins), v);
      for (int click = 0; click < 2; ++click) {
        data.push_back(ProcessDatum{rho, click_projector(basis, click), table.at(s, click, bin),
                                    s * n_bins + bin});
      }
    }
  }
  return data;
}

std::vector<ProcessDatum> mapping_process_data(const mc::CountsTable& table, bool correct_binning) {
  if (table.n_settings() != 12 || table.n_outcomes() != 2) {
    throw std::invalid_argument("mapping_process_data: expected a mapping counts table");
  }
  const int n_bins = table.n_bins();
  const double v = correct_binning ? binning_attenuation(n_bins) : 1.0;
  std::vector<ProcessDatum> data;
  for (int s = 0; s < 12; ++s) {
    const int input = s / 2;
    const bool superposition = (s % 2) == 1;
    const Matrix rho = click_projector(input / 2, input % 2);
    for (int bin = 0; bin < n_bins; ++bin) {
      const double x = mc::bin_centre(bin, n_bins);
      for (int bit = 0; bit < 2; ++bit) {
        const Matrix effect = superposition
                                  ? fringe_effect(bit == 0 ? 1 : -1, x, v)
                                  : qmath::projector(qmath::basis_state(2, bit)).matrix();
        data.push_back(ProcessDatum{rho, effect, table.at(s, bit, bin), s * n_bins + bin});
      }
    }
  }
  return data;
}

}  // namespace ionbell::estimation
