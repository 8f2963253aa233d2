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

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "emcrit/lattice.hpp"

namespace emcrit::oracle {

// Brute-force reference implementations.  Everything here works on explicit
// state vectors (or explicit spin sums) in the computational basis, with no
// fermionic or tensor-network machinery, so it is slow but hard to get wrong.
// The fast code paths are tested against these routines on small systems.
//
// Conventions shared with the rest of the library:
//   * a weak measurement of Pauli P with strength kappa and outcome
//     sign in {-1,+1} applies K = exp(sign * kappa/2 * P) / sqrt(2 cosh kappa),
//     so that K(+)^2 + K(-)^2 = identity;
//   * the projective limit applies K = (1 + sign * P) / 2;
//   * states are kept unit-norm and `log_norm` accumulates (1/2) ln p per
//     gate, so exp(2 * log_norm) is the Born probability of the outcome
//     record applied so far.

struct DenseState {
  int n_qubits = 0;
  Eigen::VectorXcd amp;   // 2^n_qubits amplitudes, unit norm
  double log_norm = 0.0;  // ln of the norm absorbed so far
};

DenseState make_all_plus(int n_qubits);
DenseState make_all_up(int n_qubits);
// (|00...0> + |11...1>) / sqrt(2); used with one extra reference qubit for
// coherent-information checks.
DenseState make_ghz(int n_qubits);

// Outcome probability is returned; the state is updated in place.
double apply_weak_x(DenseState& state, int site, int sign, double kappa,
                    bool projective);
double apply_weak_zz(DenseState& state, int site_i, int site_j, int sign,
                     double kappa, bool projective);

// Runs the full measurement pattern of `traj` on `state`, which must hold at
// least spec.L_x qubits; extra qubits (reference) are left untouched.  Per
// column: the bond layer at strength beta, then the site layer at strength
// beta_prime (halved in the last column).
void run_trajectory(const CircuitSpec& spec, const Trajectory& traj,
                    DenseState& state);

// Full circuit from |+...+>.  Guarded to L_x <= 6.
DenseState dense_trajectory(const CircuitSpec& spec, const Trajectory& traj);

// Full circuit on a GHZ state of L_x system qubits plus one reference qubit
// (the highest index), which no gate touches.
DenseState dense_encoded_trajectory(const CircuitSpec& spec,
                                    const Trajectory& traj);

// --- expectation values ----------------------------------------------------

double expect_x(const DenseState& state, int site);
double expect_zz(const DenseState& state, int site_i, int site_j);
// Product of X over every qubit of the state.
double expect_x_string(const DenseState& state);
std::complex<double> overlap(const DenseState& a, const DenseState& b);

// Majorana covariance Gamma_pq = Re[i <g_p g_q>], p != q, with
// g_{2j} = X_0...X_{j-1} Z_j and g_{2j+1} = X_0...X_{j-1} Y_j.
Eigen::MatrixXd majorana_covariance(const DenseState& state);

// --- reduced density matrices ----------------------------------------------

Eigen::MatrixXcd reduced_density(const DenseState& state,
                                 const std::vector<int>& sites);
double entropy_vn(const Eigen::MatrixXcd& rho);
// renyi_index > 1; use entropy_min for the n -> infinity limit.
double entropy_renyi(const Eigen::MatrixXcd& rho, double renyi_index);
double entropy_min(const Eigen::MatrixXcd& rho);

// --- exhaustive outcome enumeration ----------------------------------------

struct OutcomeEnsemble {
  std::vector<Trajectory> trajectories;
  std::vector<double> probabilities;  // Born weights, sum to 1
};

// Walks every sign assignment of the circuit (2^gates leaves); guarded by
// max_gates.  Only meaningful for Born-rule specs without deformations.
OutcomeEnsemble enumerate_outcomes(const CircuitSpec& spec, int max_gates = 20);

// --- partition function by exhaustive spin sum ------------------------------
//
// The overlap <+...+| K(s,t) |+...+> of the full normalized circuit equals an
// Ising sum over one spin per measurement site and column.  The spin weights:
//   bond (i,j) in column y:   exp(beta/2 * s * sigma_i sigma_j) / sqrt(2 cosh beta)
//   site x between columns:   [cosh(beta'/2) if equal, t sinh(beta'/2) if not]
//                             / sqrt(2 cosh beta')
//   last column site factor:  exp(beta'/4 * t) / sqrt(2 cosh(beta'/2))
//   free caps:                2^(-L_x/2) at each end
// with indicator weights in the projective limits.

struct LogPartition {
  double log_abs = 0.0;
  int sign = 0;  // -1, 0, +1
};

// Guarded to L_x * L_y <= 16 spins.
LogPartition exhaustive_partition(const CircuitSpec& spec,
                                  const Trajectory& traj);

// --- doubled space (density-matrix) evolution -------------------------------
//
// A density matrix on n qubits is flattened to a vector on 2n qubits: ket
// bits 0..n-1, bra bits n..2n-1.  Measurement gates act on both layers; the
// dephasing channel of strength p_s multiplies every (ket bit != bra bit)
// amplitude by 1 - 2 p_s, once per site and column, between the bond and the
// site layer.  The vector is kept at unit Frobenius norm and log_norm
// accumulates ln ||rho||_F, so exp(2 log_norm) = tr rho^2 and the outcome
// record probability is tr rho = doubled_trace(state) * exp(log_norm).

// Guarded to L_x <= 4.  Starts from |+...+><+...+|.
DenseState dense_doubled_space(const CircuitSpec& spec, const Trajectory& traj);
// Same, starting from the GHZ state with a reference qubit (index L_x in each
// layer); the reference sees neither gates nor dephasing.
DenseState dense_doubled_encoded(const CircuitSpec& spec,
                                 const Trajectory& traj);

// Sum of diagonal amplitudes <<identity|state>>, i.e. tr rho up to the
// absorbed norm factor.
double doubled_trace(const DenseState& state);
// tr[(tr_R rho)^2] / tr[rho^2] for the doubled state: expectation of the
// projector |1_R>><<1_R| on the reference ket/bra pair.
double doubled_reference_purity_ratio(const DenseState& state);
// -ln of the above; per-record second Renyi coherent information.
double renyi2_coherent_information_dense(const CircuitSpec& spec,
                                         const Trajectory& traj);

// Reduced density matrix of `rho` (the doubled state) on a subset of ket
// sites, tracing the rest: reshapes the vector back to a matrix and partial
// traces.  Used to check tensor-network entanglement data.
Eigen::MatrixXcd doubled_reduced_density(const DenseState& state,
                                         const std::vector<int>& sites);

}  // namespace emcrit::oracle
