#pragma once

// Nonparametric bootstrap over count tables.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ionbell/counts.hpp"

namespace ionbell::estimation {

/// Generator for resample `index` of a bootstrap seeded with `seed`.
std::mt19937_64 bootstrap_engine(std::uint64_t seed, std::uint64_t index);

/// Multinomial resample with the table's total and cell frequencies, drawn as
/// a chain of conditional binomials. Non-integer totals are rounded.
mc::CountsTable multinomial_resample(const mc::CountsTable& table, std::mt19937_64& rng);

struct BootstrapStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation, 0 for fewer than 2 resamples
  int resamples = 0;
  int failures = 0;  // resamples on which `metrics` threw
};

/// Evaluates `metrics` on `n` resamples of `table`. A resample on which
/// `metrics` throws std::exception is counted in `failures` and skipped.
BootstrapStats bootstrap(const mc::CountsTable& table, int n, std::uint64_t seed,
                         const std::function<std::vector<double>(const mc::CountsTable&)>& metrics);

}  // namespace ionbell::estimation
