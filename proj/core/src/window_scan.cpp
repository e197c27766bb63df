#include "ionbell/window_scan.hpp"

#include <stdexcept>
#include <string>

#include "ionbell/counts.hpp"
#include "ionbell/tomography.hpp"

namespace ionbell::estimation {

WindowScanResult detection_window_scan(const std::vector<mc::EventRecord>& events,
                                       const WindowScanOptions& opt) {
  if (!(opt.width_s > 0.0)) throw std::invalid_argument("window scan: width must be positive");
  if (opt.offsets_s.size() < 2) throw std::invalid_argument("window scan: need at least two offsets");
  const qmath::StateVector target = qmath::bell_state(opt.target);
  WindowScanResult res{};
  for (double offset : opt.offsets_s) {
    const double lo_ns = offset * 1e9;
    const double hi_ns = (offset + opt.width_s) * 1e9;
    mc::CountsTable table(6, 4, opt.n_bins);
    std::size_t n = 0;
    for (const auto& e : events) {
      if (e.passage != opt.passage) continue;
      const auto t = static_cast<double>(e.herald_time_ns);
      if (t < lo_ns || t >= hi_ns) continue;
      mc::add_transfer_event(table, e);
      ++n;
    }
    if (n == 0) {
      throw std::invalid_argument("window scan: no events in window at offset " +
                                  std::to_string(offset * 1e6) + " us");
    }
    const auto lin = linear_state_reconstruct(conditioned_expectations(table, opt.correct_binning));
    const double f = (target.amplitudes().adjoint() * lin.rho * target.amplitudes())(0, 0).real();
    res.points.push_back(WindowScanPoint{offset, offset + 0.5 * opt.width_s, f, n});
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : res.points) {
    mx += p.centre_s;
    my += p.fidelity;
  }
  mx /= static_cast<double>(res.points.size());
  my /= static_cast<double>(res.points.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& p : res.points) {
    sxy += (p.centre_s - mx) * (p.fidelity - my);
    sxx += (p.centre_s - mx) * (p.centre_s - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("window scan: offsets must differ");
  res.slope_per_s = sxy / sxx;
  res.intercept = my - res.slope_per_s * mx;
  return res;
}

std::vector<double> window_offsets(double exposure_s, double width_s, double step_s) {
  if (!(step_s > 0.0) || !(width_s > 0.0)) {
    throw std::invalid_argument("window_offsets: width and step must be positive");
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double o = k * step_s;
    if (o + width_s > exposure_s * (1.0 + 1e-12)) break;
    out.push_back(o);
  }
  return out;
}

}  // namespace ionbell::estimation
