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

#include <Eigen/Dense>

#include "emcrit/lattice.hpp"

namespace emcrit::gaussian {

// Free-fermion simulation of the measurement circuit.
//
// A chain of L sites carries 2L Majorana modes; site j owns modes 2j and
// 2j+1.  The dictionary fixing every sign in this file:
//   X_j           =  i g_{2j}   g_{2j+1}
//   Z_j Z_{j+1}   =  i g_{2j+1} g_{2j+2}
//   Z_{L-1} Z_0   = -P i g_{2L-1} g_0      (ring closure; P = prod_j X_j)
// The state is stored through its covariance
//   Gamma_pq = Re[ i <g_p g_q> ],  Gamma antisymmetric,
// which obeys Gamma^2 = -identity exactly when the state is pure.  The
// circuit gates all commute with P, so the initial X-string parity survives
// the whole evolution and is cached on the state; the ring-closure bond uses
// it to fold the string operator into a plain quadratic gate.

struct GaussianPureState {
  Eigen::MatrixXd gamma;
  // (1/2) ln p accumulated per applied outcome, so exp(2 log_norm) is the
  // Born probability of the record.
  double log_norm = 0.0;
  // Eigenvalue of prod_j X_j fixed at preparation.
  int x_parity = +1;

  int n_modes() const { return static_cast<int>(gamma.rows()); }
  int n_sites() const { return static_cast<int>(gamma.rows()) / 2; }
};

enum class ProductState {
  all_plus_x,   // every site in the +1 eigenstate of X
  z_cat_even,   // (|0...0> + |1...1>)/sqrt(2), X-string parity +1
  z_cat_odd,    // (|0...0> - |1...1>)/sqrt(2), X-string parity -1
};

GaussianPureState init_product_state(int n_sites, ProductState kind);

// One weak (or projective) measurement of the quadratic operator
// i g_a g_b: applies exp(sign * kappa/2 * i g_a g_b) / sqrt(2 cosh kappa),
// or (1 + sign * i g_a g_b)/2 in the projective case.
struct WeakGate {
  int mode_a = 0;
  int mode_b = 0;
  int sign = +1;
  double kappa = 0.0;
  bool projective = false;
};

// Gates in circuit language.  site_gate measures X_x; bond_gate measures
// Z_b Z_{b+1}, folding the ring-closure parity sign in for the last bond of
// a periodic spec.
WeakGate site_gate(const CircuitSpec& spec, int x, int sign, bool final_column);
WeakGate bond_gate(const CircuitSpec& spec, int b, int sign, int x_parity);

double outcome_probability(const GaussianPureState& state, const WeakGate& gate);
// Updates the covariance in O(L^2), books (1/2) ln p, returns p.  Throws on
// a zero-probability projective outcome.
double apply_weak_gate(GaussianPureState& state, const WeakGate& gate);

// One Newton-Schulz sweep Gamma <- Gamma (3 + Gamma^2)/2 followed by
// antisymmetrization; contracts the accumulated floating-point drift of a
// pure-state covariance back onto Gamma^2 = -1.
void repurify(GaussianPureState& state);
// max |entry| of Gamma^2 + identity; zero for an exactly pure covariance.
double purity_defect(const GaussianPureState& state);

// Entanglement entropy of the contiguous region [first_site, first_site +
// n_sites), wrapping past the last site if needed.  renyi_index 1 gives the
// von Neumann entropy, finite n > 1 the n-th Renyi entropy, infinity the
// min-entropy.  Natural logs throughout.
double entanglement_entropy(const GaussianPureState& state, int first_site,
                            int n_sites, double renyi_index = 1.0);

// <prod_j X_j> = Pf(Gamma).
double global_parity(const GaussianPureState& state);

double x_expectation(const GaussianPureState& state, int site);
// <Z_i Z_j> for i < j through the bulk (no ring wrap): Pfaffian of the
// covariance restricted to modes 2i+1 .. 2j.
double zz_expectation(const GaussianPureState& state, int site_i, int site_j);

// Pfaffian of a real antisymmetric matrix (destroys its argument).
double pfaffian(Eigen::MatrixXd a);

// ln tr(rho_A rho_B) for two normalized Gaussian states, pure or mixed:
// tr(rho_A rho_B) = 2^{-L} sqrt(det(1 - G_A G_B)).  For pure states this is
// 2 ln |<A|B>|.  Returns -infinity when the states are orthogonal.
double log_trace_overlap(const Eigen::MatrixXd& gamma_a,
                         const Eigen::MatrixXd& gamma_b);

}  // namespace emcrit::gaussian
