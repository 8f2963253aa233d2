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

#include "emcrit/gaussian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace emcrit::gaussian {

namespace {

constexpr double kZeroProbTol = 1e-14;

void check_mode(const GaussianPureState& state, int mode, const char* who) {
  if (mode < 0 || mode >= state.n_modes())
    throw std::invalid_argument(std::string(who) + ": mode out of range");
}

double bloch_of(const GaussianPureState& state, const WeakGate& gate,
                const char* who) {
  check_mode(state, gate.mode_a, who);
  check_mode(state, gate.mode_b, who);
  if (gate.mode_a == gate.mode_b)
    throw std::invalid_argument(std::string(who) + ": equal modes");
  if (gate.sign != 1 && gate.sign != -1)
    throw std::invalid_argument(std::string(who) + ": sign must be +-1");
  if (!gate.projective && (!(gate.kappa >= 0.0) || !std::isfinite(gate.kappa)))
    throw std::invalid_argument(std::string(who) + ": bad kappa");
  return state.gamma(gate.mode_a, gate.mode_b);
}

}  // namespace

GaussianPureState init_product_state(int n_sites, ProductState kind) {
  if (n_sites < 2)
    throw std::invalid_argument("init_product_state: need at least 2 sites");
  GaussianPureState state;
  state.gamma = Eigen::MatrixXd::Zero(2 * n_sites, 2 * n_sites);
  switch (kind) {
    case ProductState::all_plus_x:
      for (int j = 0; j < n_sites; ++j) {
        state.gamma(2 * j, 2 * j + 1) = 1.0;
        state.gamma(2 * j + 1, 2 * j) = -1.0;
      }
      state.x_parity = +1;
      break;
    case ProductState::z_cat_even:
    case ProductState::z_cat_odd: {
      const int s = kind == ProductState::z_cat_even ? +1 : -1;
      for (int j = 0; j + 1 < n_sites; ++j) {
        state.gamma(2 * j + 1, 2 * j + 2) = 1.0;
        state.gamma(2 * j + 2, 2 * j + 1) = -1.0;
      }
      state.gamma(0, 2 * n_sites - 1) = s;
      state.gamma(2 * n_sites - 1, 0) = -s;
      state.x_parity = s;
      break;
    }
  }
  return state;
}

WeakGate site_gate(const CircuitSpec& spec, int x, int sign, bool final_column) {
  if (x < 0 || x >= spec.L_x)
    throw std::invalid_argument("site_gate: site out of range");
  WeakGate g;
  g.mode_a = 2 * x;
  g.mode_b = 2 * x + 1;
  g.sign = sign;
  g.kappa = final_column ? 0.5 * spec.beta_prime : spec.beta_prime;
  g.projective = spec.x_projective;
  return g;
}

WeakGate bond_gate(const CircuitSpec& spec, int b, int sign, int x_parity) {
  if (b < 0 || b >= spec.n_bonds())
    throw std::invalid_argument("bond_gate: bond out of range");
  if (x_parity != 1 && x_parity != -1)
    throw std::invalid_argument("bond_gate: parity must be +-1");
  WeakGate g;
  g.kappa = spec.beta;
  g.projective = spec.zz_projective;
  if (spec.bc == SpatialBc::periodic && b == spec.L_x - 1) {
    g.mode_a = 2 * spec.L_x - 1;
    g.mode_b = 0;
    g.sign = -x_parity * sign;
  } else {
    g.mode_a = 2 * b + 1;
    g.mode_b = 2 * b + 2;
    g.sign = sign;
  }
  return g;
}

double outcome_probability(const GaussianPureState& state, const WeakGate& gate) {
  const double g_ab = bloch_of(state, gate, "outcome_probability");
  const double tau =
      gate.projective ? gate.sign : gate.sign * std::tanh(gate.kappa);
  return 0.5 * (1.0 + tau * g_ab);
}

double apply_weak_gate(GaussianPureState& state, const WeakGate& gate) {
  const double g_ab = bloch_of(state, gate, "apply_weak_gate");
  const int a = gate.mode_a;
  const int b = gate.mode_b;
  const double tau =
      gate.projective ? gate.sign : gate.sign * std::tanh(gate.kappa);
  const double sech = gate.projective ? 0.0 : 1.0 / std::cosh(gate.kappa);
  const double denom = 1.0 + tau * g_ab;
  const double p = 0.5 * denom;
  if (p <= kZeroProbTol)
    throw std::runtime_error("apply_weak_gate: zero-probability outcome");

  const Eigen::VectorXd u = state.gamma.col(a);
  const Eigen::VectorXd v = state.gamma.col(b);
  const double f = tau / denom;
  state.gamma.noalias() += f * v * u.transpose();
  state.gamma.noalias() -= f * u * v.transpose();

  // Rows and columns of the measured pair contract toward the outcome.
  const double r = sech / denom;
  state.gamma.row(a) = -r * u.transpose();
  state.gamma.col(a) = r * u;
  state.gamma.row(b) = -r * v.transpose();
  state.gamma.col(b) = r * v;
  state.gamma(a, b) = (g_ab + tau) / denom;
  state.gamma(b, a) = -state.gamma(a, b);
  state.gamma(a, a) = 0.0;
  state.gamma(b, b) = 0.0;

  state.log_norm += 0.5 * std::log(p);
  return p;
}

void repurify(GaussianPureState& state) {
  const int n = state.n_modes();
  Eigen::MatrixXd sq(n, n);
  sq.noalias() = state.gamma * state.gamma;
  Eigen::MatrixXd next = 1.5 * state.gamma;
  next.noalias() += 0.5 * state.gamma * sq;
  state.gamma = 0.5 * (next - next.transpose());
}

double purity_defect(const GaussianPureState& state) {
  const int n = state.n_modes();
  Eigen::MatrixXd sq(n, n);
  sq.noalias() = state.gamma * state.gamma;
  sq += Eigen::MatrixXd::Identity(n, n);
  return sq.cwiseAbs().maxCoeff();
}

double entanglement_entropy(const GaussianPureState& state, int first_site,
                            int n_sites, double renyi_index) {
  const int L = state.n_sites();
  if (n_sites < 0 || n_sites > L)
    throw std::invalid_argument("entanglement_entropy: bad region size");
  if (first_site < 0 || first_site >= L)
    throw std::invalid_argument("entanglement_entropy: bad region start");
  if (!(renyi_index >= 1.0))
    throw std::invalid_argument("entanglement_entropy: index must be >= 1");
  if (n_sites == 0) return 0.0;

  Eigen::VectorXi idx(2 * n_sites);
  for (int k = 0; k < n_sites; ++k) {
    const int site = (first_site + k) % L;
    idx(2 * k) = 2 * site;
    idx(2 * k + 1) = 2 * site + 1;
  }
  Eigen::MatrixXd sub(2 * n_sites, 2 * n_sites);
  for (int p = 0; p < 2 * n_sites; ++p)
    for (int q = 0; q < 2 * n_sites; ++q)
      sub(p, q) = state.gamma(idx(p), idx(q));

  Eigen::MatrixXd m(2 * n_sites, 2 * n_sites);
  m.noalias() = -sub * sub;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);

  const bool use_vn = renyi_index == 1.0;
  const bool use_min = std::isinf(renyi_index);
  double acc = 0.0;
  for (double lam : es.eigenvalues()) {
    const double nu = std::sqrt(std::clamp(lam, 0.0, 1.0));
    const double hi = 0.5 * (1.0 + nu);
    const double lo = 0.5 * (1.0 - nu);
    if (use_vn) {
      if (hi > 0.0) acc -= hi * std::log(hi);
      if (lo > 0.0) acc -= lo * std::log(lo);
    } else if (use_min) {
      acc -= std::log(hi);
    } else {
      acc += std::log(std::pow(hi, renyi_index) + std::pow(lo, renyi_index)) /
             (1.0 - renyi_index);
    }
  }
  // Each occupation shows up twice in the mode-pair spectrum.
  return 0.5 * acc;
}

double pfaffian(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("pfaffian: matrix not square");
  if (n == 0) return 1.0;
  if (n % 2 != 0) return 0.0;

  double pf = 1.0;
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    // Pivot the largest entry of column k into the subdiagonal slot.
    Eigen::Index piv = k + 1;
    double best = std::abs(a(k + 1, k));
    for (Eigen::Index i = k + 2; i < n; ++i)
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    if (best == 0.0) return 0.0;
    if (piv != k + 1) {
      a.row(piv).swap(a.row(k + 1));
      a.col(piv).swap(a.col(k + 1));
      pf = -pf;
    }
    pf *= a(k, k + 1);
    const Eigen::Index m = n - k - 2;
    if (m > 0) {
      const Eigen::VectorXd mu = a.col(k).tail(m) / a(k + 1, k);
      const Eigen::RowVectorXd r = a.row(k + 1).tail(m);
      a.bottomRightCorner(m, m).noalias() -= mu * r;
      a.bottomRightCorner(m, m).noalias() += r.transpose() * mu.transpose();
    }
  }
  return pf;
}

double global_parity(const GaussianPureState& state) {
  return pfaffian(state.gamma);
}

double x_expectation(const GaussianPureState& state, int site) {
  if (site < 0 || site >= state.n_sites())
    throw std::invalid_argument("x_expectation: site out of range");
  return state.gamma(2 * site, 2 * site + 1);
}

double log_trace_overlap(const Eigen::MatrixXd& gamma_a,
                         const Eigen::MatrixXd& gamma_b) {
  const Eigen::Index n = gamma_a.rows();
  if (gamma_a.cols() != n || gamma_b.rows() != n || gamma_b.cols() != n)
    throw std::invalid_argument("log_trace_overlap: shape mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  m.noalias() -= gamma_a * gamma_b;
  // 1 - G_A G_B is similar to a positive semidefinite matrix; a negative
  // determinant can only come from rounding, so clamp at orthogonality.
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  double log_abs = 0.0;
  double det_sign = lu.permutationP().determinant() > 0 ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = lu.matrixLU()(i, i);
    if (d == 0.0) return -std::numeric_limits<double>::infinity();
    log_abs += std::log(std::abs(d));
    if (d < 0.0) det_sign = -det_sign;
  }
  if (det_sign < 0.0) return -std::numeric_limits<double>::infinity();
  return -0.5 * static_cast<double>(n) * std::log(2.0) + 0.5 * log_abs;
}

double zz_expectation(const GaussianPureState& state, int site_i, int site_j) {
  if (site_i < 0 || site_j <= site_i || site_j >= state.n_sites())
    throw std::invalid_argument("zz_expectation: need 0 <= i < j < L");
  const int width = 2 * (site_j - site_i);
  Eigen::MatrixXd sub(width, width);
  for (int p = 0; p < width; ++p)
    for (int q = 0; q < width; ++q)
      sub(p, q) = state.gamma(2 * site_i + 1 + p, 2 * site_i + 1 + q);
  return pfaffian(std::move(sub));
}

}  // namespace emcrit::gaussian
