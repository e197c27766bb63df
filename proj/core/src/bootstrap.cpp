#include "ionbell/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace ionbell::estimation {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 bootstrap_engine(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = mix(seed ^ 0xB0075712A9ULL);
  const std::uint64_t b = mix(a ^ mix(index));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

mc::CountsTable multinomial_resample(const mc::CountsTable& table, std::mt19937_64& rng) {
  mc::CountsTable out(table.n_settings(), table.n_outcomes(), table.n_bins());
  const auto& src = table.raw();
  auto& dst = out.raw();
  double mass = 0.0;
  for (double c : src) mass += std::max(c, 0.0);
  auto remaining = static_cast<long long>(std::llround(mass));
  for (std::size_t i = 0; i < src.size() && remaining > 0 && mass > 0.0; ++i) {
    const double w = std::max(src[i], 0.0);
    if (w <= 0.0) continue;
    const double p = std::min(1.0, w / mass);
    long long k = remaining;
    if (p < 1.0) {
      std::binomial_distribution<long long> draw(remaining, p);
      k = draw(rng);
    }
    dst[i] = static_cast<double>(k);
    remaining -= k;
    mass -= w;
  }
  return out;
}

BootstrapStats bootstrap(const mc::CountsTable& table, int n, std::uint64_t seed,
                         const std::function<std::vector<double>(const mc::CountsTable&)>& metrics) {
  BootstrapStats st;
  std::vector<double> sum;
  std::vector<double> sum_sq;
  for (int k = 0; k < n; ++k) {
    auto rng = bootstrap_engine(seed, static_cast<std::uint64_t>(k));
    const mc::CountsTable resampled = multinomial_resample(table, rng);
    std::vector<double> m;
    try {
      m = metrics(resampled);
    } catch (const std::exception&) {
      ++st.failures;
      continue;
    }
    if (sum.empty()) {
      sum.assign(m.size(), 0.0);
      sum_sq.assign(m.size(), 0.0);
    }
    for (std::size_t i = 0; i < m.size() && i < sum.size(); ++i) {
      sum[i] += m[i];
      sum_sq[i] += m[i] * m[i];
    }
    ++st.resamples;
  }
  st.mean.assign(sum.size(), 0.0);
  st.stddev.assign(sum.size(), 0.0);
  if (st.resamples == 0) return st;
  const double r = st.resamples;
  for (std::size_t i = 0; i < sum.size(); ++i) {
    st.mean[i] = sum[i] / r;
    if (st.resamples > 1) {
      st.stddev[i] = std::sqrt(std::max(0.0, (sum_sq[i] - r * st.mean[i] * st.mean[i]) / (r - 1.0)));
    }
  }
  return st;
}

}  // namespace ionbell::estimation
