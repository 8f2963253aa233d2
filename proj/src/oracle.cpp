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

#include "emcrit/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "emcrit/stats.hpp"

namespace emcrit::oracle {

namespace {

using cplx = std::complex<double>;

constexpr double kZeroProbTol = 1e-14;

std::size_t dim_of(int n_qubits) { return std::size_t{1} << n_qubits; }

void check_site(const DenseState& state, int site, const char* who) {
  if (site < 0 || site >= state.n_qubits)
    throw std::invalid_argument(std::string(who) + ": site out of range");
}

void check_sign(int sign, const char* who) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument(std::string(who) + ": sign must be +-1");
}

// Divides out the current norm and books it into log_norm.  Returns the
// squared norm that was absorbed.
double renormalize(DenseState& state, const char* who) {
  const double nrm2 = state.amp.squaredNorm();
  if (!(nrm2 > kZeroProbTol))
    throw std::runtime_error(std::string(who) +
                             ": state norm vanished (zero-probability branch)");
  state.amp /= std::sqrt(nrm2);
  state.log_norm += 0.5 * std::log(nrm2);
  return nrm2;
}

void check_traj_shape(const CircuitSpec& spec, const Trajectory& traj,
                      const char* who) {
  if (traj.s_signs.rows() != spec.n_bonds() || traj.s_signs.cols() != spec.L_y ||
      traj.t_signs.rows() != spec.L_x || traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument(std::string(who) +
                                ": trajectory shape does not match spec");
}

}  // namespace

DenseState make_all_plus(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 24)
    throw std::invalid_argument("make_all_plus: bad qubit count");
  DenseState s;
  s.n_qubits = n_qubits;
  s.amp = Eigen::VectorXcd::Constant(dim_of(n_qubits),
                                     std::pow(2.0, -0.5 * n_qubits));
  return s;
}

DenseState make_all_up(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 24)
    throw std::invalid_argument("make_all_up: bad qubit count");
  DenseState s;
  s.n_qubits = n_qubits;
  s.amp = Eigen::VectorXcd::Zero(dim_of(n_qubits));
  s.amp(0) = 1.0;
  return s;
}

DenseState make_ghz(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 24)
    throw std::invalid_argument("make_ghz: bad qubit count");
  DenseState s;
  s.n_qubits = n_qubits;
  s.amp = Eigen::VectorXcd::Zero(dim_of(n_qubits));
  const double r = 1.0 / std::sqrt(2.0);
  s.amp(0) = r;
  s.amp(dim_of(n_qubits) - 1) = r;
  return s;
}

double expect_x(const DenseState& state, int site) {
  check_site(state, site, "expect_x");
  const std::size_t bit = std::size_t{1} << site;
  double acc = 0.0;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b)
    if (!(b & bit)) acc += 2.0 * std::real(std::conj(state.amp(b)) * state.amp(b | bit));
  return acc;
}

double expect_zz(const DenseState& state, int site_i, int site_j) {
  check_site(state, site_i, "expect_zz");
  check_site(state, site_j, "expect_zz");
  if (site_i == site_j) throw std::invalid_argument("expect_zz: equal sites");
  const std::size_t bi = std::size_t{1} << site_i;
  const std::size_t bj = std::size_t{1} << site_j;
  double acc = 0.0;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
    const bool frustrated = static_cast<bool>(b & bi) != static_cast<bool>(b & bj);
    acc += (frustrated ? -1.0 : 1.0) * std::norm(state.amp(b));
  }
  return acc;
}

double expect_x_string(const DenseState& state) {
  const std::size_t mask = dim_of(state.n_qubits) - 1;
  double acc = 0.0;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b)
    acc += std::real(std::conj(state.amp(b)) * state.amp(b ^ mask));
  return acc;
}

std::complex<double> overlap(const DenseState& a, const DenseState& b) {
  if (a.n_qubits != b.n_qubits)
    throw std::invalid_argument("overlap: qubit count mismatch");
  return a.amp.dot(b.amp);
}

double apply_weak_x(DenseState& state, int site, int sign, double kappa,
                    bool projective) {
  check_site(state, site, "apply_weak_x");
  check_sign(sign, "apply_weak_x");
  const std::size_t bit = std::size_t{1} << site;
  if (projective) {
    const double p = 0.5 * (1.0 + sign * expect_x(state, site));
    if (p <= kZeroProbTol)
      throw std::runtime_error("apply_weak_x: projective outcome has zero probability");
    for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
      if (b & bit) continue;
      const cplx lo = state.amp(b), hi = state.amp(b | bit);
      state.amp(b) = 0.5 * (lo + static_cast<double>(sign) * hi);
      state.amp(b | bit) = static_cast<double>(sign) * state.amp(b);
    }
    return renormalize(state, "apply_weak_x");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("apply_weak_x: bad kappa");
  const double scale = 1.0 / std::sqrt(2.0 * std::cosh(kappa));
  const double c = std::cosh(0.5 * kappa) * scale;
  const double h = sign * std::sinh(0.5 * kappa) * scale;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
    if (b & bit) continue;
    const cplx lo = state.amp(b), hi = state.amp(b | bit);
    state.amp(b) = c * lo + h * hi;
    state.amp(b | bit) = h * lo + c * hi;
  }
  return renormalize(state, "apply_weak_x");
}

double apply_weak_zz(DenseState& state, int site_i, int site_j, int sign,
                     double kappa, bool projective) {
  check_site(state, site_i, "apply_weak_zz");
  check_site(state, site_j, "apply_weak_zz");
  check_sign(sign, "apply_weak_zz");
  if (site_i == site_j) throw std::invalid_argument("apply_weak_zz: equal sites");
  const std::size_t bi = std::size_t{1} << site_i;
  const std::size_t bj = std::size_t{1} << site_j;
  if (projective) {
    for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
      const int zz = static_cast<bool>(b & bi) != static_cast<bool>(b & bj) ? -1 : 1;
      if (zz != sign) state.amp(b) = 0.0;
    }
    return renormalize(state, "apply_weak_zz");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("apply_weak_zz: bad kappa");
  const double scale = 1.0 / std::sqrt(2.0 * std::cosh(kappa));
  const double w_same = std::exp(0.5 * kappa * sign) * scale;
  const double w_diff = std::exp(-0.5 * kappa * sign) * scale;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
    const bool frustrated = static_cast<bool>(b & bi) != static_cast<bool>(b & bj);
    state.amp(b) *= frustrated ? w_diff : w_same;
  }
  return renormalize(state, "apply_weak_zz");
}

void run_trajectory(const CircuitSpec& spec, const Trajectory& traj,
                    DenseState& state) {
  check_traj_shape(spec, traj, "run_trajectory");
  if (state.n_qubits < spec.L_x)
    throw std::invalid_argument("run_trajectory: state smaller than circuit");
  for (int y = 0; y < spec.L_y; ++y) {
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const int j = spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
      apply_weak_zz(state, b, j, traj.s_signs(b, y), spec.beta,
                    spec.zz_projective);
    }
    const bool last = y == spec.L_y - 1;
    const double kx = last ? 0.5 * spec.beta_prime : spec.beta_prime;
    for (int x = 0; x < spec.L_x; ++x)
      apply_weak_x(state, x, traj.t_signs(x, y), kx, spec.x_projective);
  }
}

DenseState dense_trajectory(const CircuitSpec& spec, const Trajectory& traj) {
  if (spec.L_x > 6)
    throw std::invalid_argument("dense_trajectory: supported only for L_x <= 6");
  DenseState state = make_all_plus(spec.L_x);
  run_trajectory(spec, traj, state);
  return state;
}

DenseState dense_encoded_trajectory(const CircuitSpec& spec,
                                    const Trajectory& traj) {
  if (spec.L_x > 6)
    throw std::invalid_argument(
        "dense_encoded_trajectory: supported only for L_x <= 6");
  DenseState state = make_ghz(spec.L_x + 1);
  run_trajectory(spec, traj, state);
  return state;
}

Eigen::MatrixXd majorana_covariance(const DenseState& state) {
  const int n = state.n_qubits;
  const std::size_t dim = dim_of(n);
  Eigen::MatrixXcd modes(dim, 2 * n);
  for (int j = 0; j < n; ++j) {
    const std::size_t low = (std::size_t{1} << j) - 1;  // X string below j
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t b = 0; b < dim; ++b) {
      const double z = (b & bit) ? -1.0 : 1.0;
      modes(b ^ low, 2 * j) = z * state.amp(b);
      modes(b ^ low ^ bit, 2 * j + 1) = cplx(0.0, z) * state.amp(b);
    }
  }
  const Eigen::MatrixXcd g = cplx(0.0, 1.0) * (modes.adjoint() * modes);
  Eigen::MatrixXd gamma = g.real();
  gamma.diagonal().setZero();
  return 0.5 * (gamma - gamma.transpose());
}

Eigen::MatrixXcd reduced_density(const DenseState& state,
                                 const std::vector<int>& sites) {
  const int n = state.n_qubits;
  std::size_t keep_mask = 0;
  for (int s : sites) {
    check_site(state, s, "reduced_density");
    const std::size_t bit = std::size_t{1} << s;
    if (keep_mask & bit)
      throw std::invalid_argument("reduced_density: repeated site");
    keep_mask |= bit;
  }
  const std::size_t dim_a = std::size_t{1} << sites.size();
  const std::size_t dim_r = dim_of(n) >> sites.size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_a, dim_r);
  for (std::size_t b = 0; b < dim_of(n); ++b) {
    std::size_t a = 0;
    for (std::size_t k = 0; k < sites.size(); ++k)
      if (b & (std::size_t{1} << sites[k])) a |= std::size_t{1} << k;
    std::size_t r = 0, rbit = 1;
    for (int q = 0; q < n; ++q) {
      const std::size_t bit = std::size_t{1} << q;
      if (keep_mask & bit) continue;
      if (b & bit) r |= rbit;
      rbit <<= 1;
    }
    m(a, r) += state.amp(b);
  }
  return m * m.adjoint();
}

namespace {

Eigen::VectorXd density_eigenvalues(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols())
    throw std::invalid_argument("density eigenvalues: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(0.0);
}

}  // namespace

double entropy_vn(const Eigen::MatrixXcd& rho) {
  const Eigen::VectorXd lam = density_eigenvalues(rho);
  double s = 0.0;
  for (double l : lam)
    if (l > 0.0) s -= l * std::log(l);
  return s;
}

double entropy_renyi(const Eigen::MatrixXcd& rho, double renyi_index) {
  if (!(renyi_index > 1.0))
    throw std::invalid_argument("entropy_renyi: index must exceed 1");
  const Eigen::VectorXd lam = density_eigenvalues(rho);
  double acc = 0.0;
  for (double l : lam)
    if (l > 0.0) acc += std::pow(l, renyi_index);
  return std::log(acc) / (1.0 - renyi_index);
}

double entropy_min(const Eigen::MatrixXcd& rho) {
  return -std::log(density_eigenvalues(rho).maxCoeff());
}

OutcomeEnsemble enumerate_outcomes(const CircuitSpec& spec, int max_gates) {
  if (spec.mode != MeasurementMode::born || spec.deformed())
    throw std::invalid_argument(
        "enumerate_outcomes: only plain Born-rule specs");
  if (spec.p_s != 0.0)
    throw std::invalid_argument("enumerate_outcomes: p_s not supported");
  const int n_gates = (spec.n_bonds() + spec.L_x) * spec.L_y;
  if (n_gates > max_gates)
    throw std::invalid_argument("enumerate_outcomes: too many gates");

  struct Slot {
    bool is_zz;
    int a;  // bond or site index
    int y;
  };
  std::vector<Slot> slots;
  slots.reserve(n_gates);
  for (int y = 0; y < spec.L_y; ++y) {
    for (int b = 0; b < spec.n_bonds(); ++b) slots.push_back({true, b, y});
    for (int x = 0; x < spec.L_x; ++x) slots.push_back({false, x, y});
  }

  OutcomeEnsemble out;
  Trajectory work;
  work.s_signs.resize(spec.n_bonds(), spec.L_y);
  work.t_signs.resize(spec.L_x, spec.L_y);

  // Depth-first walk over outcome signs, branching the state at every gate.
  auto walk = [&](auto&& self, std::size_t depth, const DenseState& state) -> void {
    if (depth == slots.size()) {
      work.log_born_prob = 2.0 * state.log_norm;
      work.sector_W = sector_of(spec, work);
      out.trajectories.push_back(work);
      out.probabilities.push_back(std::exp(2.0 * state.log_norm));
      return;
    }
    const Slot& slot = slots[depth];
    const bool last = slot.y == spec.L_y - 1;
    for (int sign : {+1, -1}) {
      // Peek at the branch probability so zero-weight projective branches
      // can be dropped without touching the state.
      double mean, strength;
      if (slot.is_zz) {
        const int j = spec.bc == SpatialBc::periodic ? (slot.a + 1) % spec.L_x
                                                     : slot.a + 1;
        mean = expect_zz(state, slot.a, j);
        strength = spec.zz_projective ? 1.0 : std::tanh(spec.beta);
      } else {
        mean = expect_x(state, slot.a);
        strength = spec.x_projective
                       ? 1.0
                       : std::tanh(last ? 0.5 * spec.beta_prime : spec.beta_prime);
      }
      if (0.5 * (1.0 + sign * strength * mean) <= kZeroProbTol) continue;

      DenseState branch = state;
      if (slot.is_zz) {
        const int j = spec.bc == SpatialBc::periodic ? (slot.a + 1) % spec.L_x
                                                     : slot.a + 1;
        apply_weak_zz(branch, slot.a, j, sign, spec.beta, spec.zz_projective);
        work.s_signs(slot.a, slot.y) = static_cast<std::int8_t>(sign);
      } else {
        apply_weak_x(branch, slot.a, sign,
                     last ? 0.5 * spec.beta_prime : spec.beta_prime,
                     spec.x_projective);
        work.t_signs(slot.a, slot.y) = static_cast<std::int8_t>(sign);
      }
      self(self, depth + 1, branch);
    }
  };
  walk(walk, 0, make_all_plus(spec.L_x));
  return out;
}

LogPartition exhaustive_partition(const CircuitSpec& spec,
                                  const Trajectory& traj) {
  check_traj_shape(spec, traj, "exhaustive_partition");
  const int n_spins = spec.L_x * spec.L_y;
  if (n_spins > 16)
    throw std::invalid_argument("exhaustive_partition: lattice too large");

  const double neg_inf = -std::numeric_limits<double>::infinity();
  // Column-independent site factors: the last site layer acts on the free
  // cap as a pure number, and both caps contribute 2^(-L_x).
  double base = -spec.L_x * std::log(2.0);
  for (int x = 0; x < spec.L_x; ++x) {
    const int t = traj.t_signs(x, spec.L_y - 1);
    if (spec.x_projective) {
      if (t < 0) return {neg_inf, 0};
    } else {
      base += 0.25 * spec.beta_prime * t -
              0.5 * std::log(2.0 * std::cosh(0.5 * spec.beta_prime));
    }
  }

  const double bond_scale =
      spec.zz_projective ? 0.0 : 0.5 * std::log(2.0 * std::cosh(spec.beta));
  const double site_scale =
      spec.x_projective ? 0.0 : 0.5 * std::log(2.0 * std::cosh(spec.beta_prime));
  const double log_cosh =
      spec.x_projective ? -std::log(2.0)
                        : std::log(std::cosh(0.5 * spec.beta_prime));
  const double log_sinh =
      spec.x_projective ? -std::log(2.0)
                        : std::log(std::sinh(0.5 * spec.beta_prime));

  double log_pos = neg_inf, log_neg = neg_inf;
  const std::size_t n_cfg = std::size_t{1} << n_spins;
  for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
    auto spin = [&](int x, int y) -> int {
      return (cfg >> (x + spec.L_x * y)) & 1 ? -1 : 1;
    };
    double lw = base;
    int sgn = 1;
    bool dead = false;
    for (int y = 0; y < spec.L_y && !dead; ++y) {
      for (int b = 0; b < spec.n_bonds(); ++b) {
        const int j = spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
        const int u = traj.s_signs(b, y) * spin(b, y) * spin(j, y);
        if (spec.zz_projective) {
          if (u < 0) { dead = true; break; }
        } else {
          lw += 0.5 * spec.beta * u - bond_scale;
        }
      }
      if (dead || y + 1 == spec.L_y) continue;
      for (int x = 0; x < spec.L_x; ++x) {
        if (spin(x, y) == spin(x, y + 1)) {
          lw += log_cosh - site_scale;
        } else {
          if (log_sinh == neg_inf) { dead = true; break; }
          lw += log_sinh - site_scale;
          sgn *= traj.t_signs(x, y);
        }
      }
    }
    if (dead) continue;
    if (sgn > 0)
      log_pos = log_add_exp(log_pos, lw);
    else
      log_neg = log_add_exp(log_neg, lw);
  }

  if (log_pos == neg_inf && log_neg == neg_inf) return {neg_inf, 0};
  const int sign = log_pos >= log_neg ? 1 : -1;
  const double big = std::max(log_pos, log_neg);
  const double small = std::min(log_pos, log_neg);
  const double diff = 1.0 - std::exp(small - big);
  if (diff <= 0.0) return {neg_inf, 0};
  return {big + std::log(diff), sign};
}

namespace {

// Doubled-space helpers; ket bits live below bra bits.
void apply_dephasing_glue(DenseState& state, int site, int n_layer, double p_s) {
  const double w = 1.0 - 2.0 * p_s;
  const std::size_t ket = std::size_t{1} << site;
  const std::size_t bra = std::size_t{1} << (site + n_layer);
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b)
    if (static_cast<bool>(b & ket) != static_cast<bool>(b & bra))
      state.amp(b) *= w;
  renormalize(state, "apply_dephasing_glue");
}

DenseState run_doubled(const CircuitSpec& spec, const Trajectory& traj,
                       DenseState state, int n_layer) {
  check_traj_shape(spec, traj, "dense_doubled_space");
  if (spec.deformed() || spec.mode != MeasurementMode::born)
    throw std::invalid_argument(
        "dense_doubled_space: only plain Born-rule specs");
  for (int y = 0; y < spec.L_y; ++y) {
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const int j = spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
      apply_weak_zz(state, b, j, traj.s_signs(b, y), spec.beta,
                    spec.zz_projective);
      apply_weak_zz(state, b + n_layer, j + n_layer, traj.s_signs(b, y),
                    spec.beta, spec.zz_projective);
    }
    if (spec.p_s > 0.0)
      for (int x = 0; x < spec.L_x; ++x)
        apply_dephasing_glue(state, x, n_layer, spec.p_s);
    const bool lastcol = y == spec.L_y - 1;
    const double kx = lastcol ? 0.5 * spec.beta_prime : spec.beta_prime;
    for (int x = 0; x < spec.L_x; ++x) {
      apply_weak_x(state, x, traj.t_signs(x, y), kx, spec.x_projective);
      apply_weak_x(state, x + n_layer, traj.t_signs(x, y), kx,
                   spec.x_projective);
    }
  }
  return state;
}

}  // namespace

DenseState dense_doubled_space(const CircuitSpec& spec, const Trajectory& traj) {
  if (spec.L_x > 4)
    throw std::invalid_argument(
        "dense_doubled_space: supported only for L_x <= 4");
  return run_doubled(spec, traj, make_all_plus(2 * spec.L_x), spec.L_x);
}

DenseState dense_doubled_encoded(const CircuitSpec& spec,
                                 const Trajectory& traj) {
  if (spec.L_x > 4)
    throw std::invalid_argument(
        "dense_doubled_encoded: supported only for L_x <= 4");
  const int n_layer = spec.L_x + 1;
  const DenseState ghz = make_ghz(n_layer);
  DenseState state;
  state.n_qubits = 2 * n_layer;
  state.amp.resize(dim_of(2 * n_layer));
  for (std::size_t bra = 0; bra < dim_of(n_layer); ++bra)
    for (std::size_t ket = 0; ket < dim_of(n_layer); ++ket)
      state.amp(ket | (bra << n_layer)) = ghz.amp(ket) * ghz.amp(bra);
  return run_doubled(spec, traj, std::move(state), n_layer);
}

double doubled_trace(const DenseState& state) {
  if (state.n_qubits % 2 != 0)
    throw std::invalid_argument("doubled_trace: odd qubit count");
  const int n_layer = state.n_qubits / 2;
  double acc = 0.0;
  for (std::size_t k = 0; k < dim_of(n_layer); ++k)
    acc += std::real(state.amp(k | (k << n_layer)));
  return acc;
}

double doubled_reference_purity_ratio(const DenseState& state) {
  if (state.n_qubits % 2 != 0)
    throw std::invalid_argument(
        "doubled_reference_purity_ratio: odd qubit count");
  const int n_layer = state.n_qubits / 2;
  const std::size_t ket = std::size_t{1} << (n_layer - 1);
  const std::size_t bra = std::size_t{1} << (state.n_qubits - 1);
  double acc = 0.0;
  for (std::size_t b = 0; b < dim_of(state.n_qubits); ++b) {
    if (b & (ket | bra)) continue;
    acc += std::norm(state.amp(b) + state.amp(b | ket | bra));
  }
  return acc / state.amp.squaredNorm();
}

double renyi2_coherent_information_dense(const CircuitSpec& spec,
                                         const Trajectory& traj) {
  const DenseState state = dense_doubled_encoded(spec, traj);
  return -std::log(doubled_reference_purity_ratio(state));
}

Eigen::MatrixXcd doubled_reduced_density(const DenseState& state,
                                         const std::vector<int>& sites) {
  if (state.n_qubits % 2 != 0)
    throw std::invalid_argument("doubled_reduced_density: odd qubit count");
  const int n_layer = state.n_qubits / 2;
  std::size_t keep_mask = 0;
  for (int s : sites) {
    if (s < 0 || s >= n_layer)
      throw std::invalid_argument("doubled_reduced_density: site out of range");
    const std::size_t bit = std::size_t{1} << s;
    if (keep_mask & bit)
      throw std::invalid_argument("doubled_reduced_density: repeated site");
    keep_mask |= bit;
  }
  const std::size_t dim_a = std::size_t{1} << sites.size();
  auto gather = [&](std::size_t a, std::size_t rest) {
    // Interleave the kept bits (from a, in listed order) with the traced
    // bits (from rest) to form one layer index.
    std::size_t idx = 0;
    std::size_t rbit = 1;
    for (int q = 0; q < n_layer; ++q) {
      const std::size_t bit = std::size_t{1} << q;
      if (keep_mask & bit) continue;
      if (rest & rbit) idx |= bit;
      rbit <<= 1;
    }
    for (std::size_t k = 0; k < sites.size(); ++k)
      if (a & (std::size_t{1} << k)) idx |= std::size_t{1} << sites[k];
    return idx;
  };
  const std::size_t dim_r = dim_of(n_layer) >> sites.size();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim_a, dim_a);
  for (std::size_t a = 0; a < dim_a; ++a)
    for (std::size_t ap = 0; ap < dim_a; ++ap)
      for (std::size_t r = 0; r < dim_r; ++r) {
        const std::size_t ket = gather(a, r);
        const std::size_t bra = gather(ap, r);
        rho(a, ap) += state.amp(ket | (bra << n_layer));
      }
  const double tr = std::real(rho.trace());
  if (!(std::abs(tr) > 1e-12))
    throw std::runtime_error("doubled_reduced_density: vanishing trace");
  rho /= tr;
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace emcrit::oracle
