#include "ionbell/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ionbell/fringe.hpp"
#include "ionbell/protocol.hpp"
#include "ml_common.hpp"

namespace ionbell::estimation {

namespace {

constexpr double kExactFitTolerance = 1e-10;

using qmath::Pauli;

constexpr int kShelving = 0;
constexpr int kSuperposition = 1;

int transfer_setting(int readout, int basis) { return 3 * readout + basis; }

Matrix click_projector(int basis, int click) {
  return qmath::projector(protocol::polarization_state(protocol::kPolarizationBases[basis], click))
      .matrix();
}

Matrix kron(const Matrix& a, const Matrix& b) { return qmath::tensor(qmath::Operator(a), qmath::Operator(b)).matrix(); }

void require_transfer_layout(const mc::CountsTable& t) {
  if (t.n_settings() != 6 || t.n_outcomes() != 4) {
    throw std::invalid_argument("expected an entanglement-transfer counts table (6 settings x 4 outcomes)");
  }
}

}  // namespace

Expectations exact_expectations(const Matrix& rho) {
  if (rho.rows() != 4 || rho.cols() != 4) throw std::invalid_argument("exact_expectations: need 4x4");
  Expectations e{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Matrix op = qmath::tensor(qmath::pauli(qmath::pauli_from_index(i)),
                                      qmath::pauli(qmath::pauli_from_index(j)))
                            .matrix();
      e[i][j] = (op * rho).trace().real();
    }
  }
  return e;
}

Expectations conditioned_expectations(const mc::CountsTable& t, bool correct_binning) {
  require_transfer_layout(t);
  const int n_bins = t.n_bins();
  Expectations e{};
  e[0][0] = 1.0;
  for (int b = 0; b < 3; ++b) {
    const int photon = static_cast<int>(protocol::basis_observable(protocol::kPolarizationBases[b]));
    const int sz = transfer_setting(kShelving, b);
    const int sf = transfer_setting(kSuperposition, b);
    const double n_all = t.setting_total(sz) + t.setting_total(sf);
    if (t.setting_total(sz) <= 0.0 || t.setting_total(sf) <= 0.0) {
      throw IncompleteDataError("conditioned_expectations: missing setting for basis " +
                                std::string(protocol::to_string(protocol::kPolarizationBases[b])));
    }
    for (int k = 0; k < 2; ++k) {
      double n_click = 0.0;
      double z_up = 0.0;
      double z_down = 0.0;
      std::vector<FringePoint> fringe;
      for (int bin = 0; bin < n_bins; ++bin) {
        z_up += t.at(sz, 2 * k, bin);
        z_down += t.at(sz, 2 * k + 1, bin);
        const double plus = t.at(sf, 2 * k, bin);
        const double minus = t.at(sf, 2 * k + 1, bin);
        fringe.push_back(FringePoint{mc::bin_centre(bin, n_bins), plus, plus + minus});
        n_click += plus + minus;
      }
      n_click += z_up + z_down;
      const double p_k = n_click / n_all;
      const double lambda = protocol::detector_eigenvalue(k);
      if (p_k <= 0.0) continue;  // contributes nothing
      if (z_up + z_down <= 0.0) {
        throw IncompleteDataError("conditioned_expectations: no shelving events for a photon outcome");
      }
      const double sz_k = (z_up - z_down) / (z_up + z_down);
      TransverseBloch xy{};
      try {
        xy = transverse_components(fit_fringe(fringe, correct_binning));
      } catch (const std::invalid_argument& ex) {
        throw IncompleteDataError(std::string("conditioned_expectations: ") + ex.what());
      }
      const std::array<double, 4> atom{1.0, xy.x, xy.y, sz_k};
      for (int j = 0; j < 4; ++j) {
        e[photon][j] += lambda * p_k * atom[j];
        if (j > 0) e[0][j] += p_k * atom[j] / 3.0;
      }
    }
  }
  return e;
}

LinearReconstruction linear_state_reconstruct(const Expectations& e) {
  Matrix rho = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      rho += 0.25 * e[i][j] *
             qmath::tensor(qmath::pauli(qmath::pauli_from_index(i)),
                           qmath::pauli(qmath::pauli_from_index(j)))
                 .matrix();
    }
  }
  rho = detail::hermitize(rho);
  const double min_ev = qmath::min_eigenvalue(rho);
  return LinearReconstruction{rho, min_ev, min_ev >= -1e-12};
}

Matrix fringe_effect(int sign, double x, double v) {
  const Matrix sx = qmath::pauli(Pauli::x).matrix();
  const Matrix sy = qmath::pauli(Pauli::y).matrix();
  return 0.5 * (Matrix::Identity(2, 2) +
                static_cast<double>(sign) * v * (std::cos(x) * sx - std::sin(x) * sy));
}

std::vector<StateDatum> transfer_state_data(const mc::CountsTable& t, bool correct_binning) {
  require_transfer_layout(t);
  const int n_bins = t.n_bins();
  const double v = correct_binning ? binning_attenuation(n_bins) : 1.0;
  std::vector<StateDatum> data;
  for (int b = 0; b < 3; ++b) {
    const int sz = transfer_setting(kShelving, b);
    for (int k = 0; k < 2; ++k) {
      for (int a = 0; a < 2; ++a) {
        double n = 0.0;
        for (int bin = 0; bin < n_bins; ++bin) n += t.at(sz, 2 * k + a, bin);
        const Matrix atom = qmath::projector(qmath::basis_state(2, a)).matrix();
        data.push_back(StateDatum{kron(click_projector(b, k), atom), n, sz});
      }
    }
  }
  for (int b = 0; b < 3; ++b) {
    const int sf = transfer_setting(kSuperposition, b);
    for (int bin = 0; bin < n_bins; ++bin) {
      const double x = mc::bin_centre(bin, n_bins);
      for (int k = 0; k < 2; ++k) {
        for (int a = 0; a < 2; ++a) {
          const Matrix atom = fringe_effect(a == 0 ? 1 : -1, x, v);
          data.push_back(
              StateDatum{kron(click_projector(b, k), atom), t.at(sf, 2 * k + a, bin), 6 + sf * n_bins + bin});
        }
      }
    }
  }
  return data;
}

bool informationally_complete(const std::vector<Matrix>& effects, int dim) {
  return detail::spans_operator_space(effects, dim);
}

double state_log_likelihood(const std::vector<StateDatum>& data, const Matrix& rho) {
  detail::LinearData d;
  const auto d2 = rho.rows() * rho.cols();
  d.dim = static_cast<int>(rho.rows());
  d.effects.resize(d2, static_cast<Eigen::Index>(data.size()));
  d.counts.resize(static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    d.effects.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXcd>(data[j].effect.data(), d2);
    d.counts(static_cast<Eigen::Index>(j)) = data[j].count;
    d.total += data[j].count;
  }
  return d.log_likelihood(rho);
}

MlStateResult ml_state_reconstruct(const std::vector<StateDatum>& data, const MlOptions& opt) {
  if (data.empty()) throw IncompleteDataError("ml_state_reconstruct: no data");
  const auto dim = data.front().effect.rows();
  const auto d2 = dim * dim;

  // Groups with at least one count decide completeness.
  std::vector<int> populated;
  for (const auto& x : data) {
    if (x.count < 0.0) throw std::invalid_argument("ml_state_reconstruct: negative count");
    if (x.count > 0.0) populated.push_back(x.group);
  }
  std::vector<Matrix> informative;
  detail::LinearData d;
  d.dim = static_cast<int>(dim);
  d.effects.resize(d2, static_cast<Eigen::Index>(data.size()));
  d.counts.resize(static_cast<Eigen::Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data[j].effect.rows() != dim || data[j].effect.cols() != dim) {
      throw std::invalid_argument("ml_state_reconstruct: effects of mixed dimension");
    }
    d.effects.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::VectorXcd>(data[j].effect.data(), d2);
    d.counts(static_cast<Eigen::Index>(j)) = data[j].count;
    d.total += data[j].count;
    if (std::find(populated.begin(), populated.end(), data[j].group) != populated.end()) {
      informative.push_back(data[j].effect);
    }
  }
  if (!(d.total > 0.0)) throw IncompleteDataError("ml_state_reconstruct: no counts");
  if (!informationally_complete(informative, static_cast<int>(dim))) {
    throw IncompleteDataError("ml_state_reconstruct: settings are not informationally complete");
  }

  MlStateResult res;
  std::vector<int> groups;
  for (const auto& x : data) groups.push_back(x.group);
  if (const auto exact = detail::exact_frequency_fit(d, groups, kExactFitTolerance)) {
    if (detail::min_eigenvalue(*exact) >= -kExactFitTolerance) {
      res.rho = detail::hermitize(*exact / exact->trace().real());
      res.log_likelihood = d.log_likelihood(res.rho);
      res.converged = true;
      if (opt.record_trace) res.trace.push_back(res.log_likelihood);
      return res;
    }
  }
  Matrix rho = Matrix::Identity(dim, dim) / static_cast<double>(dim);
  double l = d.log_likelihood(rho);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Matrix r = d.gradient_operator(rho);
    Matrix target = r * rho * r;
    target = detail::hermitize(target / target.trace().real());
    // Dilute the step until the likelihood does not drop.
    double step = 1.0;
    Matrix next = target;
    double l_next = d.log_likelihood(next);
    int halvings = 0;
    while (l_next < l && halvings < 50) {
      step *= 0.5;
      ++halvings;
      next = (1.0 - step) * rho + step * target;
      l_next = d.log_likelihood(next);
    }
    res.iterations = it;
    if (l_next < l) {  // no ascent direction left
      res.converged = true;
      if (opt.record_trace) res.trace.push_back(l);
      break;
    }
    const double gain = l_next - l;
    rho = next;
    l = l_next;
    if (opt.record_trace) res.trace.push_back(l);
    if (gain < opt.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.rho = detail::hermitize(rho / rho.trace().real());
  res.log_likelihood = l;
  return res;
}

MlStateResult ml_state_reconstruct(const mc::CountsTable& transfer, bool correct_binning,
                                   const MlOptions& opt) {
  return ml_state_reconstruct(transfer_state_data(transfer, correct_binning), opt);
}

}  // namespace ionbell::estimation
