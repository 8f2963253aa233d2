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

#include <cstdint>
#include <vector>

#include "emcrit/gaussian.hpp"
#include "emcrit/lattice.hpp"

namespace emcrit::sampling {

// Samplers for the measurement-record ensemble.
//
// Three routes are provided:
//  * sample_sequential draws complete records gate by gate from the Born
//    rule, which is exact and embarrassingly parallel.
//  * sample_marginal_m draws the bond-vortex data (m, W) alone.  The
//    marginal over site records is an isotropic random-bond Ising model at
//    coupling beta, so it can be sampled exactly by drawing independent
//    signs with P(-1) = exp(-beta) / (2 cosh beta) on every measured bond
//    and on every link between consecutive columns, and keeping only their
//    plaquette fluxes.
//  * metropolis_e_given_m equilibrates the site record at fixed bond-vortex
//    data with single-sign flips against the exact Born weight, optionally
//    reweighted by the vortex fugacities encoded in the spec knobs.  The
//    same chain can instead (or additionally) flip the bond record, which
//    is how the fully site-frozen deformed ensembles are sampled.

struct SamplerConfig {
  int n_samples = 100;
  std::uint64_t seed = 1;
  // Metropolis schedule: burn_in sweeps first, then one record every
  // `sweeps` sweeps.  burn_in < 0 uses `sweeps`.
  int sweeps = 20;
  int burn_in = -1;
  // One sweep proposes every movable sign once in scan order, reusing
  // cached column environments.  With sweep_proposals = false each step
  // instead picks one uniformly random sign and recomputes the weight from
  // scratch; this is O(L_y) slower and exists for balance checks and tiny
  // systems.
  bool sweep_proposals = true;
  // Move families: site flips move e vortices through time, bond flips move
  // m vortices (and can change the flux sector through the first column).
  bool flip_sites = true;
  bool flip_bonds = false;
  // Start conditional chains from the site-vortex-free record instead of a
  // uniformly random one.
  bool e_free_init = true;
  // Born-sample from the Z-pinned product state |0...0> instead of the plus
  // state (the chain factor of the logical-qubit encoding).  Records are
  // drawn by tracking its two parity-cat components in lockstep.
  bool z_pinned_init = false;
  // Columns between purity restorations in the Gaussian evolutions.
  int repurify_interval = 16;
  int n_workers = 0;
};

// One Born-sampled record; log_born_prob and sector_W are filled in.
Trajectory sample_sequential_one(const CircuitSpec& spec, std::uint64_t seed,
                                 int repurify_interval = 16);

std::vector<Trajectory> sample_sequential(const CircuitSpec& spec,
                                          const SamplerConfig& config);

// Deterministic replay of a complete record from the plus product state.
// Throws std::domain_error when the record has zero Born weight.
gaussian::GaussianPureState replay_trajectory(const CircuitSpec& spec,
                                              const Trajectory& traj,
                                              int repurify_interval = 16);

// A record Born-sampled from the Z-pinned product state, together with the
// log Born weights of its even and odd parity-cat components (-infinity once
// a component has been measured away).  The record's log_born_prob averages
// the two weights: ln[(e^{w_even} + e^{w_odd}) / 2].
struct PinnedSample {
  Trajectory trajectory;
  double log_weight_even = 0.0;
  double log_weight_odd = 0.0;
};

PinnedSample sample_pinned_one(const CircuitSpec& spec, std::uint64_t seed,
                               int repurify_interval = 16);

// One record with the exact marginal law of (m, W); the returned record is
// site-vortex free, gauge canonical, and has no Born probability attached.
Trajectory sample_marginal_m_one(const CircuitSpec& spec, std::uint64_t seed);

std::vector<Trajectory> sample_marginal_m(const CircuitSpec& spec,
                                          const SamplerConfig& config);

struct McmcStats {
  std::int64_t proposals = 0;
  std::int64_t accepts = 0;
  double acceptance() const {
    return proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0;
  }
};

// Runs config.sweeps + burn-in Metropolis sweeps on `traj` in place and
// refreshes its cached Born probability and sector.  Throws when the spec is
// projective in a flipped family (single flips would be frozen anyway).
McmcStats metropolis_e_given_m(const CircuitSpec& spec, Trajectory& traj,
                               const SamplerConfig& config,
                               std::uint64_t seed);

// Exact log weight the chain targets: ln P_Born - eta #e - gamma (#e + #m).
double log_target_weight(const CircuitSpec& spec, const Trajectory& traj);

// Snapshot ensemble from the Metropolis chain.  With bond flips enabled a
// single walk is burned in and then recorded every config.sweeps sweeps;
// deformed ensembles must take this route because their bond marginal has no
// exact sampler.  Without bond flips every sample is an independent
// conditional chain seeded from an exact marginal-m draw, which requires the
// undeformed ensemble.  e_free_init starts each walk from the all-plus
// record, otherwise the movable signs start uniformly random.  Snapshots
// carry refreshed Born weights and sectors; `stats`, when given, accumulates
// proposal counts over every constituent run.
std::vector<Trajectory> sample_chain(const CircuitSpec& spec,
                                     const SamplerConfig& config,
                                     McmcStats* stats = nullptr);

// Fugacity of the deformation knobs, ln[(1 + 2p) / (1 - 2p)].
double fugacity(double p);

struct VortexDensity {
  double e_mean = 0.0;
  double e_stderr = 0.0;
  double m_mean = 0.0;
  double m_stderr = 0.0;
  std::int64_t e_slots = 0;
  std::int64_t m_slots = 0;
  int samples = 0;
};

// Vortex densities averaged over the unbiased slots: every bond-vortex slot
// counts, while site vortices are read away from the temporal ends (and away
// from the spatial edges when open).  Needs L_y >= 3.
VortexDensity vortex_density(const CircuitSpec& spec,
                             const std::vector<Trajectory>& trajectories);

struct ShannonEstimate {
  double entropy = 0.0;   // -<ln P>, nats
  double stderr = 0.0;
  int samples = 0;
};

// Record entropy estimator from Born-sampled trajectories; requires finite
// log_born_prob on every input.
ShannonEstimate shannon_entropy(const std::vector<Trajectory>& trajectories);

}  // namespace emcrit::sampling
