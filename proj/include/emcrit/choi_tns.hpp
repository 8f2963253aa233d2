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
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "emcrit/lattice.hpp"
#include "emcrit/observables.hpp"
#include "emcrit/sampling.hpp"

namespace emcrit::choi_tns {

// Matrix-product machinery for the dephased record states.  The density
// matrix of the chain is flattened to a pure state on a doubled chain, one
// four-dimensional physical index per site holding the local ket and bra
// bits as p = z_ket + 2 z_bra (the same layout as the dense doubled-space
// oracle).  Measurement gates act on the ket and bra layers simultaneously,
// and the dephasing of strength p_s damps every ket/bra-mismatched amplitude
// by 1 - 2 p_s once per site and column, between the bond and the site
// layer.  With p_s = 0 the two layers never mix and the state is an exact
// tensor square of the monitored pure state; with p_s = 1/2 the damping is a
// projector and the bulk collapses onto a single layer with doubled
// couplings.
//
// Open boundary conditions only: the ring bond of a periodic spec does not
// fit the nearest-neighbour sweep.

struct ChoiMps {
  int n_sites = 0;
  // Index of the untouched logical reference site (always the last site), or
  // -1 when the state was evolved without one.
  int reference_site = -1;
  // tensors[i][p] is the (chi_left x chi_right) block of site i at physical
  // index p.
  std::vector<std::array<Eigen::MatrixXd, 4>> tensors;
  // Orthogonality center: sites to the left are left-isometries, sites to
  // the right are right-isometries, and the center tensor carries the unit
  // norm of the state.
  int center = 0;
  // The represented vector is exp(log_norm) times the stored unit-norm MPS,
  // so exp(2 log_norm) is the purity tr rho^2.
  double log_norm = 0.0;
  // Sum of the relative Schmidt weight discarded by every truncation so far;
  // never decreases.
  double truncation_error = 0.0;
  // Set once truncation_error exceeds the configured budget.
  bool truncation_flagged = false;
  // Set when some split was cut by chi_max rather than by the singular-value
  // threshold.
  bool chi_saturated = false;

  int bond_dimension() const;
};

// One measurement column as an operator on the doubled chain: diagonal
// two-site weights for the bond layer, then a 4x4 matrix per site combining
// the dephasing damp with the ket and bra site gates (halved strength in the
// final column).  At p_s = 0 every site matrix is an exact Kronecker square
// of the single-layer gate and the two layers stay independent.
struct ChoiColumnMpo {
  // bond_weights[b](p_b, p_{b+1}) multiplies the amplitude elementwise.
  std::vector<Eigen::Matrix4d> bond_weights;
  // site_gates[x] mixes the physical index of site x.
  std::vector<Eigen::Matrix4d> site_gates;
};

ChoiColumnMpo choi_column(const CircuitSpec& spec, const Trajectory& traj,
                          int y);

struct EvolveOptions {
  // Singular values below svd_cutoff * (largest value) are dropped at each
  // two-site split, independently of chi_max.
  double svd_cutoff = 1e-14;
  // truncation_flagged is raised when the accumulated error passes this.
  double truncation_budget = 1e-2;
  // Evolve the GHZ-encoded state with one extra reference site that no gate
  // or damp touches; required for the coherent-information readout.
  bool encode_reference = false;
};

// Applies the column: a left-to-right sweep of two-site splits for the bond
// weights (each truncated to chi_max at its own singular-value gap), the
// on-site matrices, and a final right-to-left sweep that restores canonical
// form and absorbs the norm into log_norm.  The network is exact in the
// transfer direction; truncation is the only approximation.
void apply_column(ChoiMps& mps, const ChoiColumnMpo& column, int chi_max,
                  const EvolveOptions& options = {});

// Full evolution over the L_y columns of the record, starting from the plus
// product state (or the GHZ-encoded one).  Preconditions: open boundary,
// plain Born mode, p_s in [0, 1/2].
ChoiMps evolve_choi(const CircuitSpec& spec, const Trajectory& traj,
                    int chi_max, const EvolveOptions& options = {});

// Contraction with the unnormalized Bell row (1, 0, 0, 1) on every site:
// tr rho = exp(log_norm) * bell_overlap(mps).
double bell_overlap(const ChoiMps& mps);

// ln tr rho.  Throws std::runtime_error when the contraction is not
// positive (the record state has collapsed numerically).
double log_trace(const ChoiMps& mps);

// -ln<<B_R>> on the normalized state, with B_R twice the Bell projector on
// the reference site; the per-record second Renyi coherent information.
// Requires an encoded state matching the spec; throws std::runtime_error on
// a non-normalizable state.
double renyi2_coherent_information(const CircuitSpec& spec,
                                   const Trajectory& traj,
                                   const ChoiMps& mps);

// Schmidt values of every contiguous cut [0, l), l = 1 .. n_sites - 1, each
// vector unit in the squared norm.
std::vector<Eigen::VectorXd> schmidt_spectra(const ChoiMps& mps);

// Cut entropies of the doubled chain from the Schmidt values; renyi_index 1
// is von Neumann, finite n > 1 the n-th Renyi entropy, infinity the
// min-entropy.
std::vector<double> cut_entropies(const ChoiMps& mps, double renyi_index = 1.0);

// ln of the Bell-contracted norm of the evolved record state: the
// unnormalized log weight ln P~(record) targeted by the noisy-record chain.
// Equals the Born log probability at p_s = 0.
double noisy_log_weight(const CircuitSpec& spec, const Trajectory& traj,
                        int chi_max);

struct NoisyChain {
  std::vector<Trajectory> trajectories;
  sampling::McmcStats stats;
};

// Metropolis over the full record (single sign flips of both bond and site
// slots) with every proposal weighted by a fresh contraction; exact but
// expensive, intended for the small interacting systems.  Uses
// config.n_samples / sweeps / burn_in / seed; each collected trajectory
// carries its ln P~ in log_born_prob.
NoisyChain sample_noisy_ensemble(const CircuitSpec& spec,
                                 const sampling::SamplerConfig& config,
                                 int chi_max);

struct ChoiArc {
  observables::ArcTable table;
  // Largest per-record accumulated truncation error seen while tabulating.
  double max_truncation_error = 0.0;
  // True when some record both hit chi_max and exceeded the error budget.
  bool chi_saturated = false;
};

// Record-averaged cut entropies of the doubled chain over the given
// ensemble.  The table holds the raw doubled-chain values; fits against the
// chord formula report half of the fitted prefactor.
ChoiArc choi_entanglement_arc(const CircuitSpec& spec,
                              const std::vector<Trajectory>& ensemble,
                              int chi_max,
                              const std::vector<double>& renyi_orders = {1.0},
                              int n_workers = 0);

}  // namespace emcrit::choi_tns
