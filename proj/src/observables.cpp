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

#include "emcrit/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "emcrit/gaussian.hpp"
#include "emcrit/parallel.hpp"
#include "emcrit/stats.hpp"

namespace emcrit::observables {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using gaussian::GaussianPureState;
using gaussian::WeakGate;

IcEstimate reduce(const std::vector<double>& values) {
  RunningStat stat;
  for (const double v : values) stat.push(v);
  IcEstimate out;
  out.samples = static_cast<int>(stat.count());
  out.mean = stat.mean();
  if (out.samples > 1) out.stderr = stat.std_error();
  return out;
}

// Entropy of a wrapped contiguous segment, with the empty segment worth 0.
double segment_entropy(const GaussianPureState& state, int first, int n) {
  return n == 0 ? 0.0 : gaussian::entanglement_entropy(state, first, n);
}

// Gates of the exchanged circuit.  Sites run at the site coupling as usual;
// on the ring the last site picks up a positive parity fold, the image of
// the ring-closure sign of the standard bond layer.
WeakGate dual_site_gate(const CircuitSpec& spec, int x, int sign,
                        int x_parity) {
  WeakGate g;
  g.mode_a = 2 * x;
  g.mode_b = 2 * x + 1;
  g.sign = spec.bc == SpatialBc::periodic && x == spec.L_x - 1
               ? x_parity * sign
               : sign;
  g.kappa = spec.beta_prime;
  g.projective = spec.x_projective;
  return g;
}

// Pair gates run at the bond coupling and carry the final-column halving;
// index L_x - 1 addresses the bare end-to-end pair.
WeakGate dual_pair_gate(const CircuitSpec& spec, int b, int sign,
                        bool final_column) {
  WeakGate g;
  if (b == spec.L_x - 1) {
    g.mode_a = 2 * spec.L_x - 1;
    g.mode_b = 0;
  } else {
    g.mode_a = 2 * b + 1;
    g.mode_b = 2 * b + 2;
  }
  g.sign = sign;
  g.kappa = final_column ? 0.5 * spec.beta : spec.beta;
  g.projective = spec.zz_projective;
  return g;
}

// Shared two-branch walk of the exchanged circuit; outcomes either come from
// the forced record or are drawn from the weight-mixed branch probabilities.
DualIcSample walk_dual(const CircuitSpec& spec,
                       const std::vector<std::int8_t>* forced,
                       std::mt19937_64* rng, int repurify_interval) {
  const int L = spec.L_x;
  if (L < 2)
    throw std::invalid_argument(
        "dual_sample_one: need at least two sites for the end-site qubit");
  const int sites_per_column = spec.bc == SpatialBc::open ? L - 1 : L;
  const std::size_t record_size =
      static_cast<std::size_t>(spec.L_y) * (sites_per_column + L);
  if (forced && forced->size() != record_size)
    throw std::invalid_argument("dual_replay: record length mismatch");

  GaussianPureState branch[2];
  branch[0] =
      gaussian::init_product_state(L, gaussian::ProductState::all_plus_x);
  branch[1] = branch[0];
  branch[1].gamma(2 * L - 2, 2 * L - 1) = -1.0;
  branch[1].gamma(2 * L - 1, 2 * L - 2) = 1.0;
  branch[1].x_parity = -1;
  bool alive[2] = {true, true};

  DualIcSample out;
  out.record.reserve(record_size);

  const auto measure = [&](const auto& gate_for) {
    double p_branch[2] = {0.0, 0.0};
    double weight[2] = {0.0, 0.0};
    const double top = std::max(alive[0] ? branch[0].log_norm : -kInf,
                                alive[1] ? branch[1].log_norm : -kInf);
    for (int c = 0; c < 2; ++c) {
      if (!alive[c]) continue;
      weight[c] = std::exp(2.0 * (branch[c].log_norm - top));
      p_branch[c] = gaussian::outcome_probability(branch[c], gate_for(c, +1));
    }
    const double p_plus = (weight[0] * p_branch[0] + weight[1] * p_branch[1]) /
                          (weight[0] + weight[1]);
    const int sign = forced ? (*forced)[out.record.size()]
                            : (canonical_double(*rng) < p_plus ? 1 : -1);
    out.record.push_back(static_cast<std::int8_t>(sign));
    for (int c = 0; c < 2; ++c) {
      if (!alive[c]) continue;
      const double p = sign > 0 ? p_branch[c] : 1.0 - p_branch[c];
      if (p <= 1e-14) {
        alive[c] = false;
        continue;
      }
      gaussian::apply_weak_gate(branch[c], gate_for(c, sign));
    }
    if (!alive[0] && !alive[1])
      throw std::domain_error("dual record annihilates both branches");
  };

  for (int y = 0; y < spec.L_y; ++y) {
    const bool final_column = y == spec.L_y - 1;
    for (int x = 0; x < sites_per_column; ++x)
      measure([&](int c, int sign) {
        return dual_site_gate(spec, x, sign, branch[c].x_parity);
      });
    for (int b = 0; b < L; ++b)
      measure(
          [&](int, int sign) { return dual_pair_gate(spec, b, sign, final_column); });
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      for (int c = 0; c < 2; ++c)
        if (alive[c]) gaussian::repurify(branch[c]);
  }

  out.log_weight_plus = alive[0] ? 2.0 * branch[0].log_norm : -kInf;
  out.log_weight_minus = alive[1] ? 2.0 * branch[1].log_norm : -kInf;
  out.log_born_prob =
      log_add_exp(out.log_weight_plus, out.log_weight_minus) -
      std::numbers::ln2;
  return out;
}

}  // namespace

BranchWeights replay_branches(const CircuitSpec& spec, const Trajectory& traj,
                              int repurify_interval) {
  GaussianPureState cat[2] = {
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::z_cat_even),
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::z_cat_odd)};
  bool alive[2] = {true, true};
  const auto advance = [&](int c, const WeakGate& gate) {
    if (!alive[c]) return;
    if (gaussian::outcome_probability(cat[c], gate) <= 1e-14) {
      alive[c] = false;
      return;
    }
    gaussian::apply_weak_gate(cat[c], gate);
  };
  for (int y = 0; y < spec.L_y; ++y) {
    const bool final_column = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b)
      for (int c = 0; c < 2; ++c)
        advance(c, gaussian::bond_gate(spec, b, traj.s_signs(b, y),
                                       cat[c].x_parity));
    for (int x = 0; x < spec.L_x; ++x) {
      const WeakGate gate =
          gaussian::site_gate(spec, x, traj.t_signs(x, y), final_column);
      for (int c = 0; c < 2; ++c) advance(c, gate);
    }
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      for (int c = 0; c < 2; ++c)
        if (alive[c]) gaussian::repurify(cat[c]);
  }
  if (!alive[0] && !alive[1])
    throw std::domain_error(
        "replay_branches: record annihilates the pinned branch");
  BranchWeights out;
  out.log_weight_even = alive[0] ? 2.0 * cat[0].log_norm : -kInf;
  out.log_weight_odd = alive[1] ? 2.0 * cat[1].log_norm : -kInf;
  return out;
}

double branch_overlap(const BranchWeights& weights) {
  const bool even_dead = weights.log_weight_even == -kInf;
  const bool odd_dead = weights.log_weight_odd == -kInf;
  if (even_dead && odd_dead)
    throw std::domain_error("branch_overlap: both components have died");
  if (even_dead || odd_dead) return 1.0;
  return std::abs(
      std::tanh(0.5 * (weights.log_weight_odd - weights.log_weight_even)));
}

IcEstimate coherent_information(const CircuitSpec& spec,
                                const std::vector<Trajectory>& ensemble,
                                int n_workers) {
  std::vector<double> h(ensemble.size());
  parallel_for(
      static_cast<int>(ensemble.size()),
      [&](int i) {
        const double q = branch_overlap(replay_branches(spec, ensemble[i]));
        h[i] = binary_entropy(0.5 * (1.0 + q));
      },
      n_workers);
  return reduce(h);
}

IcEstimate coherent_information(const CircuitSpec& spec,
                                const sampling::SamplerConfig& config) {
  std::vector<double> h(config.n_samples);
  parallel_for(
      config.n_samples,
      [&](int i) {
        std::uint64_t s = config.seed + static_cast<std::uint64_t>(i);
        const sampling::PinnedSample ps = sampling::sample_pinned_one(
            spec, splitmix64_next(s), config.repurify_interval);
        const double q =
            branch_overlap({ps.log_weight_even, ps.log_weight_odd});
        h[i] = binary_entropy(0.5 * (1.0 + q));
      },
      config.n_workers);
  return reduce(h);
}

IcScanResult ic_crossing_scan(const std::vector<double>& theta_grid,
                              const std::vector<int>& L_list,
                              const IcScanOptions& options) {
  if (theta_grid.size() < 2 || L_list.size() < 2)
    throw std::invalid_argument(
        "ic_crossing_scan: need at least two angles and two sizes");
  if (!std::is_sorted(theta_grid.begin(), theta_grid.end()) ||
      !std::is_sorted(L_list.begin(), L_list.end()))
    throw std::invalid_argument("ic_crossing_scan: grids must be ascending");

  if (options.knobs.p_s != 0.0)
    throw std::invalid_argument(
        "ic_crossing_scan: noisy coherent information is not a pinned-branch "
        "replay; use the doubled-state estimator");
  const bool deformed =
      options.knobs.p_eta != 0.0 || options.knobs.p_gamma != 0.0;

  const int n_theta = static_cast<int>(theta_grid.size());
  const int n_sizes = static_cast<int>(L_list.size());
  IcScanResult out;
  out.points.resize(static_cast<std::size_t>(n_sizes) * n_theta);
  for (int li = 0; li < n_sizes; ++li)
    for (int ti = 0; ti < n_theta; ++ti) {
      const CircuitSpec spec =
          build_spec(theta_grid[ti], L_list[li], options.aspect * L_list[li],
                     options.bc, options.knobs);
      sampling::SamplerConfig cfg;
      cfg.n_samples = options.samples;
      cfg.n_workers = options.n_workers;
      std::uint64_t point =
          options.seed + static_cast<std::uint64_t>(li) * n_theta + ti;
      cfg.seed = splitmix64_next(point);
      IcEstimate est;
      if (deformed) {
        cfg.sweeps = options.sweeps;
        cfg.flip_bonds = true;
        cfg.flip_sites = !std::isinf(sampling::fugacity(spec.p_eta) +
                                     sampling::fugacity(spec.p_gamma));
        const std::vector<Trajectory> ensemble =
            sampling::sample_chain(spec, cfg);
        est = coherent_information(spec, ensemble, options.n_workers);
      } else {
        est = coherent_information(spec, cfg);
      }
      IcPoint& row = out.points[static_cast<std::size_t>(li) * n_theta + ti];
      row.theta = theta_grid[ti];
      row.L_x = L_list[li];
      row.ic = est.mean;
      row.stderr = est.stderr;
      row.samples = est.samples;
    }

  // Pairwise curve intersections: I_c grows with L above the transition and
  // shrinks with L below it, so the difference of adjacent curves changes
  // sign exactly once up to noise.
  const auto ic_at = [&](int li, int ti) {
    return out.points[static_cast<std::size_t>(li) * n_theta + ti].ic;
  };
  for (int li = 0; li + 1 < n_sizes; ++li) {
    for (int ti = 0; ti + 1 < n_theta; ++ti) {
      const double d0 = ic_at(li, ti) - ic_at(li + 1, ti);
      const double d1 = ic_at(li, ti + 1) - ic_at(li + 1, ti + 1);
      if (d0 > 0.0 && d1 <= 0.0) {
        const double frac = d0 / (d0 - d1);
        out.pair_crossings.push_back(
            theta_grid[ti] + frac * (theta_grid[ti + 1] - theta_grid[ti]));
        break;
      }
    }
  }
  out.bracketed =
      out.pair_crossings.size() == static_cast<std::size_t>(n_sizes) - 1;
  if (!out.pair_crossings.empty()) {
    RunningStat stat;
    for (const double c : out.pair_crossings) stat.push(c);
    out.theta_crossing = stat.mean();
    if (stat.count() > 1) out.crossing_stderr = stat.std_error();
  }
  return out;
}

DualIcSample dual_sample_one(const CircuitSpec& spec, std::uint64_t seed,
                             int repurify_interval) {
  std::mt19937_64 rng = stream_rng(seed, 4);
  return walk_dual(spec, nullptr, &rng, repurify_interval);
}

DualIcSample dual_replay(const CircuitSpec& spec,
                         const std::vector<std::int8_t>& record,
                         int repurify_interval) {
  return walk_dual(spec, &record, nullptr, repurify_interval);
}

IcEstimate dual_coherent_information(const CircuitSpec& spec,
                                     const sampling::SamplerConfig& config) {
  std::vector<double> h(config.n_samples);
  parallel_for(
      config.n_samples,
      [&](int i) {
        std::uint64_t s = config.seed + static_cast<std::uint64_t>(i);
        const DualIcSample sample = dual_sample_one(spec, splitmix64_next(s),
                                                    config.repurify_interval);
        const double q =
            branch_overlap({sample.log_weight_plus, sample.log_weight_minus});
        h[i] = binary_entropy(0.5 * (1.0 + q));
      },
      config.n_workers);
  return reduce(h);
}

ArcTable entanglement_arc(const CircuitSpec& spec,
                          const std::vector<Trajectory>& ensemble,
                          const std::vector<double>& renyi_orders,
                          int n_workers) {
  for (const double n : renyi_orders)
    if (!(n > 0.0))
      throw std::invalid_argument("entanglement_arc: Renyi order must be > 0");
  const int n_cuts = spec.L_x - 1;
  const int n_orders = static_cast<int>(renyi_orders.size());
  const int n_samples = static_cast<int>(ensemble.size());
  std::vector<double> values(static_cast<std::size_t>(n_samples) * n_cuts *
                             n_orders);
  parallel_for(
      n_samples,
      [&](int i) {
        const GaussianPureState state =
            sampling::replay_trajectory(spec, ensemble[i]);
        double* row = values.data() +
                      static_cast<std::size_t>(i) * n_cuts * n_orders;
        for (int l = 1; l <= n_cuts; ++l)
          for (int oi = 0; oi < n_orders; ++oi)
            row[(l - 1) * n_orders + oi] =
                gaussian::entanglement_entropy(state, 0, l, renyi_orders[oi]);
      },
      n_workers);

  ArcTable table;
  for (int oi = 0; oi < n_orders; ++oi)
    for (int l = 1; l <= n_cuts; ++l) {
      RunningStat stat;
      for (int i = 0; i < n_samples; ++i)
        stat.push(values[static_cast<std::size_t>(i) * n_cuts * n_orders +
                         (l - 1) * n_orders + oi]);
      ArcRow row;
      row.L_x = spec.L_x;
      row.cut = l;
      row.renyi = renyi_orders[oi];
      row.samples = static_cast<int>(stat.count());
      row.mean = stat.mean();
      if (row.samples > 1) row.stderr = stat.std_error();
      table.rows.push_back(row);
    }
  return table;
}

CmiEstimate conditional_mutual_information(const CircuitSpec& spec,
                                           const std::vector<Trajectory>& ensemble,
                                           int a, int l, int n_workers) {
  if (a < 1 || l < a || l + a > spec.L_x)
    throw std::invalid_argument(
        "conditional_mutual_information: need 1 <= a <= l and l + a <= L_x");
  std::vector<double> values(ensemble.size());
  parallel_for(
      static_cast<int>(ensemble.size()),
      [&](int i) {
        const GaussianPureState state =
            sampling::replay_trajectory(spec, ensemble[i]);
        const double s_ad = segment_entropy(state, 0, l);
        const double s_bd = segment_entropy(state, a, l);
        const double s_d = segment_entropy(state, a, l - a);
        const double s_abd = segment_entropy(state, 0, l + a);
        values[i] = s_ad + s_bd - s_d - s_abd;
      },
      n_workers);
  RunningStat stat;
  for (const double v : values) stat.push(v);
  CmiEstimate out;
  out.samples = static_cast<int>(stat.count());
  out.mean = stat.mean();
  if (out.samples > 1) out.stderr = stat.std_error();
  return out;
}

EdwardsAnderson edwards_anderson(const CircuitSpec& spec,
                                 const std::vector<Trajectory>& ensemble,
                                 int i, int j, int n_workers) {
  if (i == j || i < 0 || j < 0 || i >= spec.L_x || j >= spec.L_x)
    throw std::invalid_argument("edwards_anderson: sites must be distinct");
  const int lo = std::min(i, j);
  const int hi = std::max(i, j);
  std::vector<double> zz(ensemble.size());
  parallel_for(
      static_cast<int>(ensemble.size()),
      [&](int k) {
        const GaussianPureState state =
            sampling::replay_trajectory(spec, ensemble[k]);
        zz[k] = gaussian::zz_expectation(state, lo, hi);
      },
      n_workers);
  RunningStat glass, plain;
  for (const double v : zz) {
    glass.push(std::abs(v));
    plain.push(v);
  }
  EdwardsAnderson out;
  out.samples = static_cast<int>(glass.count());
  out.glass_mean = glass.mean();
  out.signed_mean = plain.mean();
  if (out.samples > 1) {
    out.glass_stderr = glass.std_error();
    out.signed_stderr = plain.std_error();
  }
  return out;
}

}  // namespace emcrit::observables
