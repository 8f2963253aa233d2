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
#include <string>
#include <vector>

#include "emcrit/io.hpp"
#include "emcrit/lattice.hpp"
#include "emcrit/observables.hpp"
#include "emcrit/transfer.hpp"

namespace emcrit::fss {

// Statistical post-processing of the measured tables: scaling-law fits and
// the data collapse.  All fits are weighted least squares when every input
// row carries a positive standard error; otherwise the weights are uniform
// and the reported errors are residual-based.

struct FitReport {
  double estimate = 0.0;
  double stderr = 0.0;
  double intercept = 0.0;
  double intercept_stderr = 0.0;
  // Weighted: chi^2 per degree of freedom.  Unweighted: mean squared
  // residual per degree of freedom, useful only for relative comparisons.
  double chi2_dof = 0.0;
  int points = 0;
  bool weighted = false;
  bool ill_conditioned = false;
  std::string window;
  std::uint64_t inputs_hash = 0;
};

json fit_report_json(const FitReport& report);

// Entanglement arc fit S(l) = c * x(l) + const against the chord regressor
//   periodic: x(l) = (1/3) ln((L_x/pi) sin(pi l / L_x))
//   open:     x(l) = (1/6) ln((2 L_x/pi) sin(pi l / L_x))
// so that estimate = c_ent^(n) in the convention where the unitary family
// follows c (1+n) / (2n).  With subtract_half the midpoint row is removed
// and S(l) - S(L_x/2) is fitted through the origin.
struct ArcFitOptions {
  double renyi = 1.0;
  SpatialBc bc = SpatialBc::periodic;
  // Cuts with min_cut <= l <= L_x - min_cut enter the fit.
  int min_cut = 1;
  bool subtract_half = false;
};

FitReport fit_arc(const observables::ArcTable& table,
                  const ArcFitOptions& options = {});

// Casimir fit of the free-energy density, f(L) = f_inf - (pi c / 6) / L^2;
// estimate = c, intercept = f_inf.  Requires at least four distinct widths.
FitReport fit_casimir(const std::vector<transfer::CasimirPoint>& points);

// One c_ent^(n) estimate per Renyi order; renyi may be infinity.
struct CnPoint {
  double renyi = 1.0;
  double c = 0.0;
  double stderr = 0.0;
};

// Fit of the Renyi family c^(n) = (c_vn - c_inf) / n + c_inf, plus the best
// single-parameter unitary form c (1+n) / (2n) for comparison; a large
// cc_chi2_dof against a small chi2_dof quantifies the deviation from the
// unitary family.
struct RenyiFamilyFit {
  double c_vn = 0.0;
  double c_vn_stderr = 0.0;
  double c_inf = 0.0;
  double c_inf_stderr = 0.0;
  double chi2_dof = 0.0;
  double cc_c = 0.0;
  double cc_c_stderr = 0.0;
  double cc_chi2_dof = 0.0;
  int points = 0;
  bool weighted = false;
  bool ill_conditioned = false;
  std::uint64_t inputs_hash = 0;
};

RenyiFamilyFit renyi_family_fit(const std::vector<CnPoint>& points);

json renyi_family_json(const RenyiFamilyFit& fit);

// Finite-size collapse of I_c(theta, L) onto a master curve of the scaling
// variable (theta - theta_c) L^{1/nu}.  The objective is the mean squared
// deviation of every point from a kernel-smoothed local-linear master curve
// built from the other sizes, normalized by the combined errors; a clean
// collapse sits near 1.  Minimized with Nelder-Mead restarts inside the
// window, errors from Gaussian-noise bootstrap replicates.
struct CollapseOptions {
  double theta_c_min = 0.0;
  double theta_c_max = 0.0;
  double nu_min = 0.4;
  double nu_max = 6.0;
  // Kernel bandwidth in units of the scaled-variable spread; 0 picks
  // 0.9 N^{-1/5} (Silverman).
  double bandwidth = 0.0;
  int n_bootstrap = 100;
  std::uint64_t seed = 1;
  int n_workers = 0;
};

struct CollapseReport {
  double theta_c = 0.0;
  double theta_c_stderr = 0.0;
  double nu = 0.0;
  double nu_stderr = 0.0;
  double quality = 0.0;
  int points = 0;
  // Set when the optimum pins against the search window, which means the
  // data do not constrain the parameters.
  bool degenerate = false;
  std::uint64_t inputs_hash = 0;
};

CollapseReport collapse_nu(const std::vector<observables::IcPoint>& table,
                           const CollapseOptions& options);

json collapse_report_json(const CollapseReport& report);

}  // namespace emcrit::fss
