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

#include "emcrit/lattice.hpp"
#include "emcrit/sampling.hpp"

namespace emcrit::observables {

// Physics outputs assembled from measurement-record ensembles.
//
// Coherent information of the logical qubit: a reference qubit is maximally
// entangled with the Z-pinned repetition branches, |0...0>|0>_R +
// |1...1>|1>_R, and the record is applied to the chain factor.  Every
// measured operator commutes with the global spin flip, so both branches see
// identical records and the reference density matrix of a record is fixed by
// one number, the flip overlap q = |<prod_j X_j>| of the evolved pinned
// branch.  Writing the branch as its even and odd parity-cat components with
// log Born weights w_even and w_odd, the cross terms vanish by parity and
//   q = |tanh((w_odd - w_even) / 2)|,  I_c = E[ H2((1 + q) / 2) ] in nats.

struct BranchWeights {
  double log_weight_even = 0.0;
  double log_weight_odd = 0.0;
};

// Replays a record on both parity cats of the pinned branch.  Throws
// std::domain_error when the record kills both components.
BranchWeights replay_branches(const CircuitSpec& spec, const Trajectory& traj,
                              int repurify_interval = 16);

// Flip overlap q recovered from the component weights; always in [0, 1].
double branch_overlap(const BranchWeights& weights);

struct IcEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  int samples = 0;
};

// Mean coherent information over records drawn from the pinned branch
// (sample_sequential with z_pinned_init, or any ensemble with the same law).
IcEstimate coherent_information(const CircuitSpec& spec,
                                const std::vector<Trajectory>& ensemble,
                                int n_workers = 0);

// Single-pass variant: samples config.n_samples records and evaluates their
// overlaps from the sampler's own branch weights.
IcEstimate coherent_information(const CircuitSpec& spec,
                                const sampling::SamplerConfig& config);

struct IcPoint {
  double theta = 0.0;
  int L_x = 0;
  double ic = 0.0;
  double stderr = 0.0;
  int samples = 0;
};

struct IcScanOptions {
  int aspect = 4;  // L_y = aspect * L_x
  int samples = 2000;
  std::uint64_t seed = 1;
  SpatialBc bc = SpatialBc::open;
  // Deformation knobs forwarded to build_spec.  Undeformed scans Born-sample
  // the pinned branch directly; deformed scans draw records from the
  // reweighted Metropolis chain (`sweeps` sweeps between snapshots) and
  // replay them.  Noise is rejected here, its coherent information lives in
  // the doubled-state machinery.
  SpecKnobs knobs;
  int sweeps = 20;
  int n_workers = 0;
};

struct IcScanResult {
  std::vector<IcPoint> points;
  // One curve intersection per adjacent pair of sizes, found by scanning the
  // grid for the sign change of I_c(small) - I_c(large).
  std::vector<double> pair_crossings;
  double theta_crossing = 0.0;
  double crossing_stderr = 0.0;
  bool bracketed = false;
};

// I_c(theta, L) table over a theta grid and a list of sizes, plus the level
// crossing estimate that locates the transition.
IcScanResult ic_crossing_scan(const std::vector<double>& theta_grid,
                              const std::vector<int>& L_list,
                              const IcScanOptions& options = {});

// Coherent information through the exchanged circuit, in which bond and site
// measurements swap roles.  X is measured on sites 0..L_x-2 at kappa =
// beta_prime, Majorana pair gates act on the chain bonds and on the bare
// end-to-end pair (2L_x-1, 0) at kappa = beta (halved in the final column,
// pair layer after the site layer), and the logical qubit sits in the
// unmeasured end site: the branches are |+...+>|+-> with total parity +-1.
// Relabeling Majorana mode c to c+1 carries this circuit at angle theta onto
// the standard protocol at pi/2 - theta record by record, so the two
// coherent-information curves coincide and running both yields an end-to-end
// duality check.
struct DualIcSample {
  // Drawn signs in gate order: per column the site outcomes, then the pair
  // outcomes for bonds 0..L_x-2 followed by the end-to-end pair.
  std::vector<std::int8_t> record;
  double log_weight_plus = 0.0;   // end site |+>, parity +1
  double log_weight_minus = 0.0;  // end site |->, parity -1
  double log_born_prob = 0.0;
};

DualIcSample dual_sample_one(const CircuitSpec& spec, std::uint64_t seed,
                             int repurify_interval = 16);

// Deterministic replay of a forced record; throws std::domain_error when the
// record has zero Born weight.
DualIcSample dual_replay(const CircuitSpec& spec,
                         const std::vector<std::int8_t>& record,
                         int repurify_interval = 16);

IcEstimate dual_coherent_information(const CircuitSpec& spec,
                                     const sampling::SamplerConfig& config);

// Born-mean entanglement entropies of the contiguous cuts [0, l).
struct ArcRow {
  int L_x = 0;
  int cut = 0;       // l = 1 .. L_x - 1
  double renyi = 1.0;
  double mean = 0.0;
  double stderr = 0.0;
  int samples = 0;
};

struct ArcTable {
  std::vector<ArcRow> rows;
};

// Replays every record and tabulates S^(n)(l) for each requested Renyi order
// (1 = von Neumann, infinity = min entropy).
ArcTable entanglement_arc(const CircuitSpec& spec,
                          const std::vector<Trajectory>& ensemble,
                          const std::vector<double>& renyi_orders = {1.0},
                          int n_workers = 0);

struct CmiEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  int samples = 0;
};

// Conditional mutual information I(A:B|D) of the segments A = [0, a),
// D = [a, l), B = [l, l+a), averaged over the ensemble; l is the distance
// between the centers of A and B.
CmiEstimate conditional_mutual_information(const CircuitSpec& spec,
                                           const std::vector<Trajectory>& ensemble,
                                           int a, int l, int n_workers = 0);

struct EdwardsAnderson {
  double glass_mean = 0.0;   // E |<Z_i Z_j>|
  double glass_stderr = 0.0;
  double signed_mean = 0.0;  // E <Z_i Z_j>, vanishes by symmetry
  double signed_stderr = 0.0;
  int samples = 0;
};

// Glass correlator of the boundary state between sites i and j.
EdwardsAnderson edwards_anderson(const CircuitSpec& spec,
                                 const std::vector<Trajectory>& ensemble,
                                 int i, int j, int n_workers = 0);

}  // namespace emcrit::observables
