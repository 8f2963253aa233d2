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

#include "emcrit/sampling.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "emcrit/gaussian.hpp"
#include "emcrit/parallel.hpp"
#include "emcrit/stats.hpp"

namespace emcrit::sampling {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using gaussian::GaussianPureState;
using gaussian::WeakGate;

// Applies one full column of the record to `state`; returns false when a
// projective outcome annihilates the amplitude.
bool apply_record_column(GaussianPureState& state, const CircuitSpec& spec,
                         const Trajectory& traj, int y) {
  const bool final_column = y == spec.L_y - 1;
  for (int b = 0; b < spec.n_bonds(); ++b) {
    const WeakGate gate =
        gaussian::bond_gate(spec, b, traj.s_signs(b, y), state.x_parity);
    if (gaussian::outcome_probability(state, gate) <= 1e-14) return false;
    gaussian::apply_weak_gate(state, gate);
  }
  for (int x = 0; x < spec.L_x; ++x) {
    const WeakGate gate =
        gaussian::site_gate(spec, x, traj.t_signs(x, y), final_column);
    if (gaussian::outcome_probability(state, gate) <= 1e-14) return false;
    gaussian::apply_weak_gate(state, gate);
  }
  return true;
}

// ln of the Born probability of a complete record.
double log_born(const CircuitSpec& spec, const Trajectory& traj,
                int repurify_interval) {
  GaussianPureState state = gaussian::init_product_state(
      spec.L_x, gaussian::ProductState::all_plus_x);
  for (int y = 0; y < spec.L_y; ++y) {
    if (!apply_record_column(state, spec, traj, y)) return -kInf;
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      gaussian::repurify(state);
  }
  return 2.0 * state.log_norm;
}

// Fugacity contribution -coef * dcount that stays meaningful at coef = inf.
double fugacity_term(double coef, std::int64_t count) {
  if (std::isinf(coef)) return count > 0 ? -kInf : 0.0;
  return -coef * static_cast<double>(count);
}

int site_vortex(const Trajectory& traj, int x, int y) {
  const int below = y > 0 ? traj.t_signs(x, y - 1) : 1;
  return traj.t_signs(x, y) != below ? 1 : 0;
}

int bond_vortex(const Trajectory& traj, int b, int y) {
  return traj.s_signs(b, y) != traj.s_signs(b, y + 1) ? 1 : 0;
}

// Change of the site-vortex count when t(x, y) is flipped.
int site_flip_dcount(const CircuitSpec& spec, const Trajectory& traj, int x,
                     int y) {
  int d = 1 - 2 * site_vortex(traj, x, y);
  if (y + 1 < spec.L_y) d += 1 - 2 * site_vortex(traj, x, y + 1);
  return d;
}

// Change of the bond-vortex count when s(b, y) is flipped.
int bond_flip_dcount(const CircuitSpec& spec, const Trajectory& traj, int b,
                     int y) {
  int d = 0;
  if (y > 0) d += 1 - 2 * bond_vortex(traj, b, y - 1);
  if (y + 1 < spec.L_y) d += 1 - 2 * bond_vortex(traj, b, y);
  return d;
}

struct FlipMove {
  bool site = true;  // false: bond record
  int row = 0;       // x or b
  int y = 0;
};

void apply_flip(Trajectory& traj, const FlipMove& mv) {
  if (mv.site)
    traj.t_signs(mv.row, mv.y) = -traj.t_signs(mv.row, mv.y);
  else
    traj.s_signs(mv.row, mv.y) = -traj.s_signs(mv.row, mv.y);
}

bool metropolis_accept(double delta, std::mt19937_64& rng) {
  if (delta >= 0.0) return true;
  // NaN (both weights -inf) falls through to a rejection.
  return std::log(canonical_double(rng)) < delta;
}

void check_move_families(const CircuitSpec& spec, const SamplerConfig& cfg) {
  if (!cfg.flip_sites && !cfg.flip_bonds)
    throw std::invalid_argument("metropolis_e_given_m: no move family enabled");
  if (cfg.flip_bonds && spec.zz_projective)
    throw std::invalid_argument(
        "metropolis_e_given_m: bond flips are frozen at projective bond "
        "couplings");
  if (cfg.flip_sites && spec.x_projective)
    throw std::invalid_argument(
        "metropolis_e_given_m: site flips are frozen at projective site "
        "couplings");
}

// Slow reference chain: one uniformly random flip per step with the weight
// recomputed from scratch.
McmcStats run_naive_chain(const CircuitSpec& spec, Trajectory& traj,
                          const SamplerConfig& cfg, int total_sweeps,
                          std::mt19937_64& rng) {
  const int n_site = cfg.flip_sites ? spec.L_x * spec.L_y : 0;
  const int n_bond = cfg.flip_bonds ? spec.n_bonds() * spec.L_y : 0;
  const int n_slots = n_site + n_bond;
  double cur = log_target_weight(spec, traj);
  McmcStats stats;
  for (std::int64_t step = 0;
       step < static_cast<std::int64_t>(total_sweeps) * n_slots; ++step) {
    const int pick = static_cast<int>(uniform_below(rng, n_slots));
    FlipMove mv;
    if (pick < n_site) {
      mv.site = true;
      mv.row = pick % spec.L_x;
      mv.y = pick / spec.L_x;
    } else {
      mv.site = false;
      mv.row = (pick - n_site) % spec.n_bonds();
      mv.y = (pick - n_site) / spec.n_bonds();
    }
    apply_flip(traj, mv);
    const double prop = log_target_weight(spec, traj);
    ++stats.proposals;
    if (metropolis_accept(prop - cur, rng)) {
      cur = prop;
      ++stats.accepts;
    } else {
      apply_flip(traj, mv);  // undo
    }
  }
  return stats;
}

// Mixed backward environments M_y = K_{>=y}^dag K_{>=y}, tracked by the
// covariance of M_y / tr M_y and by lnn = (1/2) ln [tr M_y / 2^L].  The gate
// conjugations use the same covariance update as the forward evolution; the
// ring gates are evaluated in the even string-parity block, which is the one
// the forward state lives in.
std::vector<GaussianPureState> backward_environments(const CircuitSpec& spec,
                                                     const Trajectory& traj) {
  std::vector<GaussianPureState> envs(spec.L_y + 1);
  GaussianPureState env;
  env.gamma = Eigen::MatrixXd::Zero(2 * spec.L_x, 2 * spec.L_x);
  env.log_norm = 0.0;
  env.x_parity = 1;
  envs[spec.L_y] = env;
  for (int y = spec.L_y - 1; y >= 0; --y) {
    const bool final_column = y == spec.L_y - 1;
    // Adjoint order: the site layer is conjugated before the bond layer.
    for (int x = 0; x < spec.L_x; ++x)
      gaussian::apply_weak_gate(
          env, gaussian::site_gate(spec, x, traj.t_signs(x, y), final_column));
    for (int b = 0; b < spec.n_bonds(); ++b)
      gaussian::apply_weak_gate(
          env, gaussian::bond_gate(spec, b, traj.s_signs(b, y), 1));
    envs[y] = env;
  }
  return envs;
}

struct ColumnResult {
  GaussianPureState state;
  bool dead = false;
};

ColumnResult apply_column_copy(const GaussianPureState& psi,
                               const CircuitSpec& spec, const Trajectory& traj,
                               int y) {
  ColumnResult out;
  out.state = psi;
  out.dead = !apply_record_column(out.state, spec, traj, y);
  return out;
}

// ln w = 2 ln f + 2 ln b + (1/2) ln det(1 - G_psi G_M), with the 2^L trace
// factors cancelling against the overlap normalization.
double column_weight(const ColumnResult& col, const GaussianPureState& env,
                     int L_x) {
  if (col.dead) return -kInf;
  const double lto = gaussian::log_trace_overlap(col.state.gamma, env.gamma);
  return 2.0 * (col.state.log_norm + env.log_norm) + lto +
         L_x * std::numbers::ln2;
}

McmcStats run_sweep_chain(const CircuitSpec& spec, Trajectory& traj,
                          const SamplerConfig& cfg, int total_sweeps,
                          std::mt19937_64& rng) {
  const double eta_e = fugacity(spec.p_eta) + fugacity(spec.p_gamma);
  const double eta_m = fugacity(spec.p_gamma);
  McmcStats stats;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    const std::vector<GaussianPureState> envs =
        backward_environments(spec, traj);
    GaussianPureState psi = gaussian::init_product_state(
        spec.L_x, gaussian::ProductState::all_plus_x);
    for (int y = 0; y < spec.L_y; ++y) {
      ColumnResult cur = apply_column_copy(psi, spec, traj, y);
      double cur_lw = column_weight(cur, envs[y + 1], spec.L_x);

      auto propose = [&](const FlipMove& mv, double dfug) {
        apply_flip(traj, mv);
        ColumnResult prop = apply_column_copy(psi, spec, traj, y);
        const double prop_lw = column_weight(prop, envs[y + 1], spec.L_x);
        ++stats.proposals;
        if (metropolis_accept(prop_lw - cur_lw + dfug, rng)) {
          cur = std::move(prop);
          cur_lw = prop_lw;
          ++stats.accepts;
        } else {
          apply_flip(traj, mv);  // undo
        }
      };

      if (cfg.flip_sites)
        for (int x = 0; x < spec.L_x; ++x)
          propose({true, x, y},
                  fugacity_term(eta_e, site_flip_dcount(spec, traj, x, y)));
      if (cfg.flip_bonds)
        for (int b = 0; b < spec.n_bonds(); ++b)
          propose({false, b, y},
                  fugacity_term(eta_m, bond_flip_dcount(spec, traj, b, y)));

      psi = std::move(cur.state);
      if (cfg.repurify_interval > 0 && (y + 1) % cfg.repurify_interval == 0)
        gaussian::repurify(psi);
    }
  }
  return stats;
}

}  // namespace

Trajectory sample_sequential_one(const CircuitSpec& spec, std::uint64_t seed,
                                 int repurify_interval) {
  std::mt19937_64 rng = stream_rng(seed, 0);
  Trajectory traj;
  traj.seed = seed;
  traj.s_signs = SignArray(spec.n_bonds(), spec.L_y);
  traj.t_signs = SignArray(spec.L_x, spec.L_y);
  GaussianPureState state = gaussian::init_product_state(
      spec.L_x, gaussian::ProductState::all_plus_x);
  for (int y = 0; y < spec.L_y; ++y) {
    const bool final_column = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const double p_plus = gaussian::outcome_probability(
          state, gaussian::bond_gate(spec, b, +1, state.x_parity));
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      traj.s_signs(b, y) = static_cast<std::int8_t>(sign);
      gaussian::apply_weak_gate(
          state, gaussian::bond_gate(spec, b, sign, state.x_parity));
    }
    for (int x = 0; x < spec.L_x; ++x) {
      const double p_plus = gaussian::outcome_probability(
          state, gaussian::site_gate(spec, x, +1, final_column));
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      traj.t_signs(x, y) = static_cast<std::int8_t>(sign);
      gaussian::apply_weak_gate(state,
                                gaussian::site_gate(spec, x, sign, final_column));
    }
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      gaussian::repurify(state);
  }
  traj.log_born_prob = 2.0 * state.log_norm;
  traj.sector_W = sector_of(spec, traj);
  return traj;
}

std::vector<Trajectory> sample_sequential(const CircuitSpec& spec,
                                          const SamplerConfig& config) {
  std::vector<Trajectory> out(config.n_samples);
  parallel_for(
      config.n_samples,
      [&](int i) {
        std::uint64_t s = config.seed + static_cast<std::uint64_t>(i);
        const std::uint64_t mixed = splitmix64_next(s);
        out[i] = config.z_pinned_init
                     ? sample_pinned_one(spec, mixed, config.repurify_interval)
                           .trajectory
                     : sample_sequential_one(spec, mixed,
                                             config.repurify_interval);
      },
      config.n_workers);
  return out;
}

gaussian::GaussianPureState replay_trajectory(const CircuitSpec& spec,
                                              const Trajectory& traj,
                                              int repurify_interval) {
  GaussianPureState state = gaussian::init_product_state(
      spec.L_x, gaussian::ProductState::all_plus_x);
  for (int y = 0; y < spec.L_y; ++y) {
    if (!apply_record_column(state, spec, traj, y))
      throw std::domain_error("replay_trajectory: record has zero Born weight");
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      gaussian::repurify(state);
  }
  return state;
}

PinnedSample sample_pinned_one(const CircuitSpec& spec, std::uint64_t seed,
                               int repurify_interval) {
  std::mt19937_64 rng = stream_rng(seed, 3);
  PinnedSample out;
  Trajectory& traj = out.trajectory;
  traj.seed = seed;
  traj.s_signs = SignArray(spec.n_bonds(), spec.L_y);
  traj.t_signs = SignArray(spec.L_x, spec.L_y);

  GaussianPureState cat[2] = {
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::z_cat_even),
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::z_cat_odd)};
  bool alive[2] = {true, true};

  // Draws one outcome from the weight-mixed branch probabilities and advances
  // both components; a component whose conditional probability vanishes is
  // dropped for good.  gate_for builds the component's gate at a given
  // outcome, so ring-closure sign folding stays intact.
  const auto measure = [&](const auto& gate_for) {
    double p_branch[2] = {0.0, 0.0};
    double weight[2] = {0.0, 0.0};
    const double top = std::max(alive[0] ? cat[0].log_norm : -kInf,
                                alive[1] ? cat[1].log_norm : -kInf);
    for (int c = 0; c < 2; ++c) {
      if (!alive[c]) continue;
      weight[c] = std::exp(2.0 * (cat[c].log_norm - top));
      p_branch[c] = gaussian::outcome_probability(cat[c], gate_for(c, +1));
    }
    const double p_plus = (weight[0] * p_branch[0] + weight[1] * p_branch[1]) /
                          (weight[0] + weight[1]);
    const int sign = canonical_double(rng) < p_plus ? 1 : -1;
    for (int c = 0; c < 2; ++c) {
      if (!alive[c]) continue;
      const double p = sign > 0 ? p_branch[c] : 1.0 - p_branch[c];
      if (p <= 1e-14) {
        alive[c] = false;
        continue;
      }
      gaussian::apply_weak_gate(cat[c], gate_for(c, sign));
    }
    return sign;
  };

  for (int y = 0; y < spec.L_y; ++y) {
    const bool final_column = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const auto gate_for = [&](int c, int sign) {
        return gaussian::bond_gate(spec, b, sign, cat[c].x_parity);
      };
      traj.s_signs(b, y) = static_cast<std::int8_t>(measure(gate_for));
    }
    for (int x = 0; x < spec.L_x; ++x) {
      const auto gate_for = [&](int, int sign) {
        return gaussian::site_gate(spec, x, sign, final_column);
      };
      traj.t_signs(x, y) = static_cast<std::int8_t>(measure(gate_for));
    }
    if (repurify_interval > 0 && (y + 1) % repurify_interval == 0)
      for (int c = 0; c < 2; ++c)
        if (alive[c]) gaussian::repurify(cat[c]);
  }

  out.log_weight_even = alive[0] ? 2.0 * cat[0].log_norm : -kInf;
  out.log_weight_odd = alive[1] ? 2.0 * cat[1].log_norm : -kInf;
  traj.log_born_prob =
      log_add_exp(out.log_weight_even, out.log_weight_odd) - std::numbers::ln2;
  traj.sector_W = sector_of(spec, traj);
  return out;
}

Trajectory sample_marginal_m_one(const CircuitSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng = stream_rng(seed, 1);
  // P(-1) for one auxiliary sign; beta = 0 gives a fair coin, frozen bonds
  // give all-plus.
  const double q_minus =
      spec.zz_projective ? 0.0
                         : std::exp(-spec.beta) / (2.0 * std::cosh(spec.beta));
  const auto draw = [&]() { return canonical_double(rng) < q_minus ? -1 : 1; };

  SignArray u_bond(spec.n_bonds(), spec.L_y);
  for (int y = 0; y < spec.L_y; ++y)
    for (int b = 0; b < spec.n_bonds(); ++b)
      u_bond(b, y) = static_cast<std::int8_t>(draw());
  SignArray u_link(spec.L_x, std::max(spec.L_y - 1, 0));
  for (int y = 0; y + 1 < spec.L_y; ++y)
    for (int x = 0; x < spec.L_x; ++x)
      u_link(x, y) = static_cast<std::int8_t>(draw());

  // Gauge the link signs away: sigma(x, y) is the accumulated link product
  // below row y, and the measured record keeps the fluxes of the draw.
  Trajectory traj;
  traj.seed = seed;
  traj.s_signs = SignArray(spec.n_bonds(), spec.L_y);
  traj.t_signs = SignArray::Constant(spec.L_x, spec.L_y, 1);
  Eigen::Array<int, Eigen::Dynamic, 1> sigma(spec.L_x);
  sigma.setOnes();
  for (int y = 0; y < spec.L_y; ++y) {
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const int xr = spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
      traj.s_signs(b, y) =
          static_cast<std::int8_t>(u_bond(b, y) * sigma(b) * sigma(xr));
    }
    if (y + 1 < spec.L_y)
      for (int x = 0; x < spec.L_x; ++x) sigma(x) *= u_link(x, y);
  }
  traj.sector_W = sector_of(spec, traj);
  Trajectory canon = gauge_orbit_canonicalize(spec, traj);
  canon.seed = seed;
  return canon;
}

std::vector<Trajectory> sample_marginal_m(const CircuitSpec& spec,
                                          const SamplerConfig& config) {
  std::vector<Trajectory> out(config.n_samples);
  parallel_for(
      config.n_samples,
      [&](int i) {
        std::uint64_t s = config.seed + static_cast<std::uint64_t>(i);
        out[i] = sample_marginal_m_one(spec, splitmix64_next(s));
      },
      config.n_workers);
  return out;
}

double fugacity(double p) {
  if (p < 0.0 || p > 0.5)
    throw std::invalid_argument("fugacity: knob must lie in [0, 1/2]");
  if (p == 0.5) return kInf;
  return std::log1p(2.0 * p) - std::log1p(-2.0 * p);
}

double log_target_weight(const CircuitSpec& spec, const Trajectory& traj) {
  const double born = log_born(spec, traj, 16);
  if (born == -kInf) return -kInf;
  const VortexField v = vortices_of(spec, traj);
  const double e_part =
      fugacity_term(fugacity(spec.p_eta) + fugacity(spec.p_gamma), v.e_count);
  const double m_part = fugacity_term(fugacity(spec.p_gamma), v.m_count);
  return born + e_part + m_part;
}

McmcStats metropolis_e_given_m(const CircuitSpec& spec, Trajectory& traj,
                               const SamplerConfig& config,
                               std::uint64_t seed) {
  check_move_families(spec, config);
  if (traj.s_signs.rows() != spec.n_bonds() ||
      traj.s_signs.cols() != spec.L_y || traj.t_signs.rows() != spec.L_x ||
      traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument("metropolis_e_given_m: record shape mismatch");
  std::mt19937_64 rng = stream_rng(seed, 2);
  const int burn = config.burn_in >= 0 ? config.burn_in : config.sweeps;
  const int total = burn + config.sweeps;
  McmcStats stats = config.sweep_proposals
                        ? run_sweep_chain(spec, traj, config, total, rng)
                        : run_naive_chain(spec, traj, config, total, rng);
  traj.log_born_prob = log_born(spec, traj, config.repurify_interval);
  traj.sector_W = sector_of(spec, traj);
  return stats;
}

namespace {

void randomize_signs(SignArray& signs, std::mt19937_64& rng) {
  for (Eigen::Index c = 0; c < signs.cols(); ++c)
    for (Eigen::Index r = 0; r < signs.rows(); ++r)
      signs(r, c) = canonical_double(rng) < 0.5 ? std::int8_t{-1}
                                                : std::int8_t{1};
}

void add_stats(McmcStats& total, const McmcStats& part) {
  total.proposals += part.proposals;
  total.accepts += part.accepts;
}

}  // namespace

std::vector<Trajectory> sample_chain(const CircuitSpec& spec,
                                     const SamplerConfig& config,
                                     McmcStats* stats) {
  check_move_families(spec, config);
  if (config.n_samples <= 0)
    throw std::invalid_argument("sample_chain: n_samples must be positive");
  SamplerConfig step = config;
  step.burn_in = 0;

  if (!config.flip_bonds) {
    if (spec.p_eta != 0.0 || spec.p_gamma != 0.0)
      throw std::invalid_argument(
          "sample_chain: conditional chains seed from the undeformed "
          "marginal-m law; deformed ensembles need bond flips");
    std::vector<Trajectory> out(config.n_samples);
    std::vector<McmcStats> parts(config.n_samples);
    parallel_for(
        config.n_samples,
        [&](int i) {
          std::uint64_t s = config.seed + static_cast<std::uint64_t>(i);
          const std::uint64_t mixed = splitmix64_next(s);
          Trajectory walker = sample_marginal_m_one(spec, mixed);
          if (!config.e_free_init) {
            std::mt19937_64 rng = stream_rng(mixed, 6);
            randomize_signs(walker.t_signs, rng);
            if (log_target_weight(spec, walker) == -kInf)
              throw std::runtime_error(
                  "sample_chain: random start has zero target weight");
          }
          SamplerConfig local = step;
          local.burn_in = config.burn_in;
          parts[i] = metropolis_e_given_m(spec, walker, local, mixed);
          out[i] = std::move(walker);
        },
        config.n_workers);
    if (stats)
      for (const McmcStats& part : parts) add_stats(*stats, part);
    return out;
  }

  std::uint64_t s = config.seed;
  Trajectory walker = all_plus_trajectory(spec);
  if (!config.e_free_init) {
    std::mt19937_64 rng = stream_rng(splitmix64_next(s), 6);
    if (config.flip_sites) randomize_signs(walker.t_signs, rng);
    randomize_signs(walker.s_signs, rng);
    if (log_target_weight(spec, walker) == -kInf)
      throw std::runtime_error(
          "sample_chain: random start has zero target weight");
  }
  McmcStats total;
  const int burn = config.burn_in >= 0 ? config.burn_in : config.sweeps;
  if (burn > 0) {
    step.sweeps = burn;
    add_stats(total, metropolis_e_given_m(spec, walker, step, splitmix64_next(s)));
  }
  step.sweeps = config.sweeps;
  std::vector<Trajectory> out(config.n_samples);
  for (int i = 0; i < config.n_samples; ++i) {
    const std::uint64_t mixed = splitmix64_next(s);
    add_stats(total, metropolis_e_given_m(spec, walker, step, mixed));
    walker.seed = mixed;
    out[i] = walker;
  }
  if (stats) add_stats(*stats, total);
  return out;
}

VortexDensity vortex_density(const CircuitSpec& spec,
                             const std::vector<Trajectory>& trajectories) {
  if (spec.L_y < 3)
    throw std::invalid_argument(
        "vortex_density: need at least three columns for unbiased site slots");
  const int x_lo = spec.bc == SpatialBc::open ? 1 : 0;
  const int x_hi = spec.bc == SpatialBc::open ? spec.L_x - 1 : spec.L_x;
  if (x_hi <= x_lo)
    throw std::invalid_argument("vortex_density: no interior sites");
  RunningStat e_stat, m_stat;
  VortexDensity out;
  for (const Trajectory& traj : trajectories) {
    const VortexField v = vortices_of(spec, traj);
    double e_sum = 0.0;
    std::int64_t e_n = 0;
    for (int y = 1; y + 1 < spec.L_y; ++y)
      for (int x = x_lo; x < x_hi; ++x) {
        e_sum += v.e(x, y);
        ++e_n;
      }
    double m_sum = 0.0;
    std::int64_t m_n = 0;
    for (int y = 0; y + 1 < spec.L_y; ++y)
      for (int b = 0; b < spec.n_bonds(); ++b) {
        m_sum += v.m(b, y);
        ++m_n;
      }
    e_stat.push(e_sum / e_n);
    m_stat.push(m_sum / m_n);
    out.e_slots = e_n;
    out.m_slots = m_n;
  }
  out.samples = static_cast<int>(e_stat.count());
  out.e_mean = e_stat.mean();
  out.m_mean = m_stat.mean();
  if (out.samples > 1) {
    out.e_stderr = e_stat.std_error();
    out.m_stderr = m_stat.std_error();
  }
  return out;
}

ShannonEstimate shannon_entropy(const std::vector<Trajectory>& trajectories) {
  RunningStat stat;
  for (const Trajectory& traj : trajectories) {
    if (!std::isfinite(traj.log_born_prob))
      throw std::invalid_argument(
          "shannon_entropy: every record needs a finite Born probability");
    stat.push(-traj.log_born_prob);
  }
  ShannonEstimate out;
  out.samples = static_cast<int>(stat.count());
  out.entropy = stat.mean();
  if (out.samples > 1) out.stderr = stat.std_error();
  return out;
}

}  // namespace emcrit::sampling
