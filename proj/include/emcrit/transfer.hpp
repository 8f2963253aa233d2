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

#include <vector>

#include <Eigen/Dense>

#include "emcrit/lattice.hpp"

namespace emcrit::transfer {

// Quasienergy spectra of the column-to-column evolution.
//
// In the rotated Majorana basis g~_c = i^(c mod 2) g_c every gate acts on the
// mode operators by a real 2x2 block of unit determinant:
//   bond (2b+1, 2b+2), coupling lambda = s beta:
//       [[cosh l,  sinh l], [ sinh l, cosh l]]
//   site (2x, 2x+1), coupling lambda = t beta' (halved in the last column):
//       [[cosh l, -sinh l], [-sinh l, cosh l]]
//   ring bond (2L-1, 0): the bond block with lambda = wrap * s * beta.
// With eta = diag(+,-,+,-,...) each block G satisfies eta G^T eta = G^{-1},
// so the Lyapunov exponents of a column product come in +- pairs and the
// positive half defines single-particle levels eps_n in nats per column.
//
// The physical ring coupling carries the conserved X-string parity; all
// spectra here are evaluated in the parity = +1 block (wrap = -1), and the
// flux sector of a trajectory is read off its first bond column, so
// bucketing Born-sampled trajectories by sector reproduces both boundary
// types of the fermion chain.

using SignCol = Eigen::Array<std::int8_t, Eigen::Dynamic, 1>;

// Dense 2L x 2L single-column transfer matrix, bond layer first.
Eigen::MatrixXd column_transfer(const CircuitSpec& spec, const SignCol& s_col,
                                const SignCol& t_col, int wrap = -1,
                                bool final_column = false);

struct TransferSpectrum {
  int L_x = 0;
  int sector_W = +1;
  int columns_used = 0;
  Eigen::VectorXd epsilon;  // descending, length L_x, nats per column

  // Free-fermion vacuum energy of the column evolution, nats per column.
  double ground_energy() const { return -0.5 * epsilon.sum(); }
};

struct LyapunovOptions {
  int qr_interval = 1;
  // Columns dropped at each end of the cylinder before accumulating; < 0
  // picks 10 L_x.
  int margin = -1;
  int wrap = -1;
};

// QR-stabilized Lyapunov spectrum of the column product of `traj`.
TransferSpectrum lyapunov_spectrum(const CircuitSpec& spec,
                                   const Trajectory& traj,
                                   const LyapunovOptions& opts = {});

// Many-body levels E_0 + sum of a subset of eps_n, sorted ascending.
// excitation_parity: 0 any, +1 even subsets, -1 odd subsets.
std::vector<double> many_body_levels(const TransferSpectrum& spectrum,
                                     int n_levels, int excitation_parity = 0);

// ln |<+...+| K(s,t) |+...+>| of the full normalized circuit; -infinity when
// the overlap vanishes.  Small systems are cross-checked against the
// exhaustive spin sum.
double log_partition(const CircuitSpec& spec, const Trajectory& traj);

// Free-energy density estimate f = -sum eps_n / (2 L_x) per site, pooled
// over same-size spectra; feeds the 1/L^2 fit.
struct CasimirPoint {
  int L_x = 0;
  double f = 0.0;
  double stderr = 0.0;
  int samples = 0;
};

CasimirPoint casimir_fit_input(const std::vector<TransferSpectrum>& spectra);

// Flux-insertion gap: ground-energy difference between the two flux sectors
// in units of 2 pi / L_x.
struct TwistGap {
  double delta_m = 0.0;
  double stderr = 0.0;
  int samples_plus = 0;
  int samples_minus = 0;
};

TwistGap twist_gap(const std::vector<TransferSpectrum>& sector_plus,
                   const std::vector<TransferSpectrum>& sector_minus);

}  // namespace emcrit::transfer
