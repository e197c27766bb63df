#pragma once

// Shared pieces of the likelihood iterations for states and processes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace ionbell::estimation::detail {

// Multinomial data p_j = tr(F_j X) for a d x d unknown X, stored as vec(F_j) columns.
struct LinearData {
  Eigen::MatrixXcd effects;  // d^2 x J
  Eigen::VectorXd counts;    // J
  double total = 0.0;
  int dim = 0;

  Eigen::VectorXd probabilities(const Eigen::MatrixXcd& x) const {
    const Eigen::Map<const Eigen::VectorXcd> r(x.data(), x.size());
    return (effects.adjoint() * r).real();
  }

  double log_likelihood(const Eigen::MatrixXcd& x) const {
    const Eigen::VectorXd p = probabilities(x);
    double l = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (counts(j) <= 0.0) continue;
      if (!(p(j) > 0.0)) return -std::numeric_limits<double>::infinity();
      l += counts(j) * std::log(p(j));
    }
    return l / total;
  }

  // sum_j (n_j / N) / p_j F_j
  Eigen::MatrixXcd gradient_operator(const Eigen::MatrixXcd& x) const {
    const Eigen::VectorXd p = probabilities(x);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (counts(j) > 0.0) w(j) = counts(j) / total / std::max(p(j), 1e-300);
    }
    Eigen::VectorXcd v = effects * w.cast<std::complex<double>>();
    return Eigen::Map<Eigen::MatrixXcd>(v.data(), dim, dim);
  }
};

// Least-squares solution of tr(F_j X) = n_j / N_group(j), returned only when it
// reproduces every observed frequency within `tol`. Such an X attains the
// unconstrained maximum of the likelihood, so when it is also physical it is
// the ML estimate. The fixed-point iteration approaches it only as 1/k when it
// lies on the boundary of the physical set.
inline std::optional<Eigen::MatrixXcd> exact_frequency_fit(const LinearData& d, const std::vector<int>& groups,
                                                           double tol) {
  std::map<int, double> group_total;
  for (Eigen::Index j = 0; j < d.counts.size(); ++j) group_total[groups[static_cast<std::size_t>(j)]] += d.counts(j);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < d.counts.size(); ++j) {
    if (group_total[groups[static_cast<std::size_t>(j)]] > 0.0) rows.push_back(j);
  }
  const Eigen::Index d2 = static_cast<Eigen::Index>(d.dim) * d.dim;
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(rows.size()), d2);
  Eigen::VectorXcd f(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Eigen::Index j = rows[r];
    a.row(static_cast<Eigen::Index>(r)) = d.effects.col(j).adjoint();
    f(static_cast<Eigen::Index>(r)) = d.counts(j) / group_total[groups[static_cast<std::size_t>(j)]];
  }
  const Eigen::VectorXcd x = a.completeOrthogonalDecomposition().solve(f);
  Eigen::MatrixXcd m = Eigen::Map<const Eigen::MatrixXcd>(x.data(), d.dim, d.dim);
  m = 0.5 * (m + m.adjoint());
  const Eigen::Map<const Eigen::VectorXcd> v(m.data(), d2);
  if ((a * v - f).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  return m;
}

inline double min_eigenvalue(const Eigen::MatrixXcd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m).eigenvalues().minCoeff();
}

inline bool spans_operator_space(const std::vector<Eigen::MatrixXcd>& ops, int dim) {
  if (ops.empty()) return false;
  const Eigen::Index d2 = static_cast<Eigen::Index>(dim) * dim;
  Eigen::MatrixXcd m(d2, static_cast<Eigen::Index>(ops.size()));
  for (std::size_t j = 0; j < ops.size(); ++j) {
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXcd>(ops[j].data(), d2);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() < d2 || s(0) <= 0.0) return false;
  return s(d2 - 1) > 1e-9 * s(0);
}

inline Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace ionbell::estimation::detail
