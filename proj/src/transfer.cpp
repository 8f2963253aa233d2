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

#include "emcrit/transfer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "emcrit/gaussian.hpp"
#include "emcrit/stats.hpp"

namespace emcrit::transfer {

namespace {

void check_spec(const CircuitSpec& spec, const char* who) {
  if (spec.zz_projective || spec.x_projective)
    throw std::invalid_argument(std::string(who) +
                                ": projective couplings have no bounded "
                                "column transfer");
  if (spec.bc != SpatialBc::periodic)
    throw std::invalid_argument(std::string(who) + ": needs a periodic ring");
}

// Left-multiplies m by the 2x2 block [[cosh l, g sinh l], [g sinh l, cosh l]]
// acting on rows (a, b).
void apply_block(Eigen::MatrixXd& m, int a, int b, double lambda, double g) {
  const double c = std::cosh(lambda);
  const double h = g * std::sinh(lambda);
  const Eigen::RowVectorXd ra = m.row(a);
  m.row(a) = c * ra + h * m.row(b);
  m.row(b) = h * ra + c * m.row(b);
}

void apply_column(Eigen::MatrixXd& m, const CircuitSpec& spec,
                  const SignCol& s_col, const SignCol& t_col, int wrap,
                  bool final_column) {
  const int L = spec.L_x;
  for (int b = 0; b < spec.n_bonds(); ++b) {
    if (b == L - 1)
      apply_block(m, 2 * L - 1, 0, wrap * s_col(b) * spec.beta, 1.0);
    else
      apply_block(m, 2 * b + 1, 2 * b + 2, s_col(b) * spec.beta, 1.0);
  }
  const double kx = final_column ? 0.5 * spec.beta_prime : spec.beta_prime;
  for (int x = 0; x < L; ++x)
    apply_block(m, 2 * x, 2 * x + 1, t_col(x) * kx, -1.0);
}

}  // namespace

Eigen::MatrixXd column_transfer(const CircuitSpec& spec, const SignCol& s_col,
                                const SignCol& t_col, int wrap,
                                bool final_column) {
  check_spec(spec, "column_transfer");
  if (wrap != 1 && wrap != -1)
    throw std::invalid_argument("column_transfer: wrap must be +-1");
  if (s_col.size() != spec.n_bonds() || t_col.size() != spec.L_x)
    throw std::invalid_argument("column_transfer: column size mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * spec.L_x, 2 * spec.L_x);
  apply_column(m, spec, s_col, t_col, wrap, final_column);
  return m;
}

TransferSpectrum lyapunov_spectrum(const CircuitSpec& spec,
                                   const Trajectory& traj,
                                   const LyapunovOptions& opts) {
  check_spec(spec, "lyapunov_spectrum");
  if (traj.s_signs.rows() != spec.n_bonds() ||
      traj.s_signs.cols() != spec.L_y || traj.t_signs.rows() != spec.L_x ||
      traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument("lyapunov_spectrum: trajectory shape mismatch");
  if (opts.qr_interval < 1)
    throw std::invalid_argument("lyapunov_spectrum: bad qr interval");
  if (opts.wrap != 1 && opts.wrap != -1)
    throw std::invalid_argument("lyapunov_spectrum: wrap must be +-1");
  const int margin = opts.margin >= 0 ? opts.margin : 10 * spec.L_x;
  const int last = spec.L_y - margin;
  if (last - margin < 2 * opts.qr_interval)
    throw std::invalid_argument(
        "lyapunov_spectrum: cylinder too short for the requested margin");

  const int n = 2 * spec.L_x;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd log_sum = Eigen::VectorXd::Zero(n);
  int used = 0;
  int stride = 0;

  auto reorthogonalize = [&](bool accumulate) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    Eigen::MatrixXd next = qr.householderQ();
    const Eigen::VectorXd diag = qr.matrixQR().diagonal();
    for (int i = 0; i < n; ++i) {
      if (diag(i) < 0.0) next.col(i) = -next.col(i);
      if (accumulate) log_sum(i) += std::log(std::abs(diag(i)));
    }
    q = std::move(next);
  };

  for (int y = 0; y < last; ++y) {
    apply_column(q, spec, traj.s_signs.col(y), traj.t_signs.col(y), opts.wrap,
                 false);
    ++stride;
    // Flush at the stride length, at the margin boundary (so every
    // accumulated stride lies fully in the bulk), and at the end.
    if (stride < opts.qr_interval && y + 1 != margin && y + 1 != last) continue;
    const bool in_bulk = y >= margin;
    reorthogonalize(in_bulk);
    if (in_bulk) used += stride;
    stride = 0;
  }
  if (used <= 0)
    throw std::runtime_error("lyapunov_spectrum: no columns accumulated");

  Eigen::VectorXd lambda = log_sum / static_cast<double>(used);
  std::sort(lambda.data(), lambda.data() + n, std::greater<double>());

  TransferSpectrum out;
  out.L_x = spec.L_x;
  out.sector_W = sector_of(spec, traj);
  out.columns_used = used;
  out.epsilon.resize(spec.L_x);
  for (int i = 0; i < spec.L_x; ++i)
    out.epsilon(i) = 0.5 * (lambda(i) - lambda(n - 1 - i));
  return out;
}

std::vector<double> many_body_levels(const TransferSpectrum& spectrum,
                                     int n_levels, int excitation_parity) {
  if (n_levels < 1)
    throw std::invalid_argument("many_body_levels: need n_levels >= 1");
  if (excitation_parity < -1 || excitation_parity > 1)
    throw std::invalid_argument("many_body_levels: parity must be -1, 0, +1");
  const int L = static_cast<int>(spectrum.epsilon.size());
  // Only the soft end of the spectrum can contribute to low levels.
  const int k = std::min(L, 16);
  const double e0 = spectrum.ground_energy();
  std::vector<double> levels;
  levels.reserve(std::size_t{1} << k);
  for (std::uint32_t subset = 0; subset < (1u << k); ++subset) {
    const int nexc = std::popcount(subset);
    if (excitation_parity != 0 && (nexc % 2 == 0 ? 1 : -1) != excitation_parity)
      continue;
    double e = e0;
    for (int i = 0; i < k; ++i)
      if (subset & (1u << i)) e += spectrum.epsilon(L - 1 - i);
    levels.push_back(e);
  }
  std::sort(levels.begin(), levels.end());
  if (static_cast<int>(levels.size()) > n_levels) levels.resize(n_levels);
  return levels;
}

double log_partition(const CircuitSpec& spec, const Trajectory& traj) {
  if (traj.s_signs.rows() != spec.n_bonds() ||
      traj.s_signs.cols() != spec.L_y || traj.t_signs.rows() != spec.L_x ||
      traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument("log_partition: trajectory shape mismatch");
  gaussian::GaussianPureState state =
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::all_plus_x);
  // A vanishing outcome probability kills the whole amplitude, which only
  // happens for projective couplings; report it as log 0 rather than failing.
  const auto dead = [&](const gaussian::WeakGate& gate) {
    return gaussian::outcome_probability(state, gate) <= 1e-14;
  };
  for (int y = 0; y < spec.L_y; ++y) {
    const bool final_column = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const gaussian::WeakGate gate =
          gaussian::bond_gate(spec, b, traj.s_signs(b, y), state.x_parity);
      if (dead(gate)) return -std::numeric_limits<double>::infinity();
      gaussian::apply_weak_gate(state, gate);
    }
    for (int x = 0; x < spec.L_x; ++x) {
      const gaussian::WeakGate gate =
          gaussian::site_gate(spec, x, traj.t_signs(x, y), final_column);
      if (dead(gate)) return -std::numeric_limits<double>::infinity();
      gaussian::apply_weak_gate(state, gate);
    }
    gaussian::repurify(state);
  }
  const gaussian::GaussianPureState plus =
      gaussian::init_product_state(spec.L_x, gaussian::ProductState::all_plus_x);
  return state.log_norm +
         0.5 * gaussian::log_trace_overlap(plus.gamma, state.gamma);
}

CasimirPoint casimir_fit_input(const std::vector<TransferSpectrum>& spectra) {
  if (spectra.empty())
    throw std::invalid_argument("casimir_fit_input: no spectra");
  const int L = spectra.front().L_x;
  RunningStat f;
  for (const TransferSpectrum& sp : spectra) {
    if (sp.L_x != L)
      throw std::invalid_argument("casimir_fit_input: mixed system sizes");
    f.push(sp.ground_energy() / L);
  }
  CasimirPoint out;
  out.L_x = L;
  out.f = f.mean();
  out.stderr = f.count() > 1 ? f.std_error() : 0.0;
  out.samples = static_cast<int>(f.count());
  return out;
}

TwistGap twist_gap(const std::vector<TransferSpectrum>& sector_plus,
                   const std::vector<TransferSpectrum>& sector_minus) {
  if (sector_plus.empty() || sector_minus.empty())
    throw std::invalid_argument("twist_gap: both sectors need spectra");
  const int L = sector_plus.front().L_x;
  RunningStat plus, minus;
  for (const TransferSpectrum& sp : sector_plus) {
    if (sp.L_x != L) throw std::invalid_argument("twist_gap: mixed sizes");
    plus.push(sp.ground_energy());
  }
  for (const TransferSpectrum& sp : sector_minus) {
    if (sp.L_x != L) throw std::invalid_argument("twist_gap: mixed sizes");
    minus.push(sp.ground_energy());
  }
  const double scale = L / (2.0 * std::numbers::pi);
  TwistGap out;
  out.delta_m = scale * (minus.mean() - plus.mean());
  const double se_p = plus.count() > 1 ? plus.std_error() : 0.0;
  const double se_m = minus.count() > 1 ? minus.std_error() : 0.0;
  out.stderr = scale * std::hypot(se_p, se_m);
  out.samples_plus = static_cast<int>(plus.count());
  out.samples_minus = static_cast<int>(minus.count());
  return out;
}

}  // namespace emcrit::transfer
