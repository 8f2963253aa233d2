// Copyright 2026 The emcrit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace emcrit {

// ---------------------------------------------------------------------------
// Reproducible RNG streams.
//
// Every stochastic task derives its generator from (global seed, stream index)
// so that results do not depend on scheduling or worker count.  The stream
// index is whatever uniquely identifies the unit of work: trajectory index,
// chain index, bootstrap replicate index, ...
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  // Odd multiplier keeps the map stream -> state bijective.
  std::uint64_t s = seed ^ (0xA3EC4E9FD7254D31ull * (stream + 0x9E3779B97F4A7C15ull));
  std::array<std::uint32_t, 8> words{};
  for (auto& w : words) w = static_cast<std::uint32_t>(splitmix64_next(s) >> 32);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) with exactly 53 random bits; avoids the
// implementation-defined behavior of std::uniform_real_distribution.
inline double canonical_double(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

// ---------------------------------------------------------------------------
// Streaming statistics.
// ---------------------------------------------------------------------------

// Welford running mean/variance with an associative merge, so partial
// accumulators from different workers combine to the same result as a
// sequential pass (up to floating-point reassociation of the merge order,
// which we keep fixed).
class RunningStat {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStat& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) { *this = o; return; }
    const double d = o.mean_ - mean_;
    const std::int64_t n = n_ + o.n_;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / static_cast<double>(n);
    mean_ += d * static_cast<double>(o.n_) / static_cast<double>(n);
    n_ = n;
  }

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Bins a correlated series (Markov-chain output) into blocks of fixed length
// and reports the naive error of the block means.  Choose the bin length
// comfortably above the autocorrelation time.
class BinnedStat {
 public:
  explicit BinnedStat(std::int64_t bin_length = 16) : bin_(bin_length) {
    if (bin_length < 1) throw std::invalid_argument("BinnedStat: bin_length >= 1");
  }

  void push(double x) {
    acc_ += x;
    if (++in_bin_ == bin_) {
      blocks_.push(acc_ / static_cast<double>(bin_));
      acc_ = 0.0;
      in_bin_ = 0;
    }
    all_.push(x);
  }

  double mean() const { return all_.mean(); }
  double std_error() const {
    // Fall back to the unbinned error until at least two blocks exist.
    return blocks_.count() > 1 ? blocks_.std_error() : all_.std_error();
  }
  std::int64_t count() const { return all_.count(); }
  std::int64_t block_count() const { return blocks_.count(); }

 private:
  std::int64_t bin_;
  std::int64_t in_bin_ = 0;
  double acc_ = 0.0;
  RunningStat blocks_;
  RunningStat all_;
};

// ---------------------------------------------------------------------------
// Small special functions and tests.
// ---------------------------------------------------------------------------

// Binary entropy in nats, H2(p) = -p ln p - (1-p) ln(1-p).
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with dof degrees of freedom.
inline double chi2_sf(double chi2, double dof) { return gamma_q(0.5 * dof, 0.5 * chi2); }

struct Chi2Result {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson chi-square of observed counts against expected counts (same total).
// Bins with expected count below min_expected are pooled together.
Chi2Result chi2_test(const std::vector<double>& observed,
                     const std::vector<double>& expected,
                     double min_expected = 5.0);

// Total variation distance between two probability vectors.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

// Bootstrap standard error of a statistic evaluated on resampled index sets.
// `stat` maps a vector of sample indices (with repetition) to a scalar.
template <class Stat>
double bootstrap_stderr(std::size_t n_samples, Stat&& stat, int n_boot, std::mt19937_64& g) {
  if (n_samples == 0) return 0.0;
  std::vector<std::size_t> idx(n_samples);
  RunningStat rs;
  for (int b = 0; b < n_boot; ++b) {
    for (auto& i : idx) i = static_cast<std::size_t>(uniform_below(g, n_samples));
    rs.push(stat(static_cast<const std::vector<std::size_t>&>(idx)));
  }
  return std::sqrt(rs.variance());
}

}  // namespace emcrit
