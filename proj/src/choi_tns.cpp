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

#include "emcrit/choi_tns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "emcrit/parallel.hpp"
#include "emcrit/stats.hpp"

namespace emcrit::choi_tns {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A projective bond weight that contradicts the record annihilates the state,
// but the contradiction acts on tensors whose forbidden entries only vanish
// up to SVD roundoff, so the zero block arrives as O(eps^2) squared norm
// rather than an exact zero.  Any legitimate per-split factor stays far above
// this line (the weakest Kraus factor before the projective snap is ~1e-13).
constexpr double kDeadSplitThreshold = 1e-20;

int chi_left(const ChoiMps& mps, int i) {
  return static_cast<int>(mps.tensors[i][0].rows());
}

int chi_right(const ChoiMps& mps, int i) {
  return static_cast<int>(mps.tensors[i][0].cols());
}

// Single-layer 2x2 matrix of a weak X gate in the Z basis, including the
// Kraus normalization.
Eigen::Matrix2d layer_site_matrix(double kappa, int sign, bool projective) {
  Eigen::Matrix2d k;
  if (projective) {
    const double s = 0.5 * sign;
    k << 0.5, s, s, 0.5;
    return k;
  }
  const double norm = 1.0 / std::sqrt(2.0 * std::cosh(kappa));
  const double c = std::cosh(0.5 * kappa) * norm;
  const double s = sign * std::sinh(0.5 * kappa) * norm;
  k << c, s, s, c;
  return k;
}

// Single-layer diagonal weight of a weak ZZ gate on the spin pair
// (zeta_i, zeta_j) = (+-1, +-1), including the Kraus normalization.
double layer_bond_weight(double kappa, int sign, bool projective, int zeta_i,
                         int zeta_j) {
  if (projective) return sign * zeta_i * zeta_j > 0 ? 1.0 : 0.0;
  return std::exp(0.5 * kappa * sign * zeta_i * zeta_j) /
         std::sqrt(2.0 * std::cosh(kappa));
}

void check_spec(const CircuitSpec& spec, const char* where) {
  if (spec.bc != SpatialBc::open)
    throw std::invalid_argument(std::string(where) +
                                ": open boundary conditions only");
  if (spec.deformed() || spec.mode != MeasurementMode::born)
    throw std::invalid_argument(std::string(where) +
                                ": only plain Born-rule specs");
  if (!(spec.p_s >= 0.0 && spec.p_s <= 0.5))
    throw std::invalid_argument(std::string(where) + ": p_s outside [0, 1/2]");
}

void check_traj(const CircuitSpec& spec, const Trajectory& traj,
                const char* where) {
  if (traj.s_signs.rows() != spec.n_bonds() ||
      traj.s_signs.cols() != spec.L_y || traj.t_signs.rows() != spec.L_x ||
      traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument(std::string(where) +
                                ": record shape does not match the spec");
}

// Moves the center one site to the left by an LQ split of the center tensor;
// the center becomes a right-isometry and the L factor merges leftward.
void shift_center_left(ChoiMps& mps) {
  const int c = mps.center;
  const int cl = chi_left(mps, c);
  const int cr = chi_right(mps, c);
  Eigen::MatrixXd wide(cl, 4 * cr);
  for (int p = 0; p < 4; ++p) wide.middleCols(p * cr, cr) = mps.tensors[c][p];
  const int k = std::min(cl, 4 * cr);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(wide.transpose());
  const Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(4 * cr, k);
  const Eigen::MatrixXd carry =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>().transpose();
  for (int p = 0; p < 4; ++p)
    mps.tensors[c][p] = thin_q.transpose().middleCols(p * cr, cr);
  for (int p = 0; p < 4; ++p) mps.tensors[c - 1][p] *= carry;
  mps.center = c - 1;
}

// Moves the center one site to the right by a QR split of the center tensor.
void shift_center_right(ChoiMps& mps) {
  const int c = mps.center;
  const int cl = chi_left(mps, c);
  const int cr = chi_right(mps, c);
  Eigen::MatrixXd tall(4 * cl, cr);
  for (int p = 0; p < 4; ++p) tall.middleRows(p * cl, cl) = mps.tensors[c][p];
  const int k = std::min(4 * cl, cr);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tall);
  const Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(4 * cl, k);
  const Eigen::MatrixXd carry =
      qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int p = 0; p < 4; ++p)
    mps.tensors[c][p] = thin_q.middleRows(p * cl, cl);
  for (int p = 0; p < 4; ++p)
    mps.tensors[c + 1][p] = carry * mps.tensors[c + 1][p];
  mps.center = c + 1;
}

// Renormalizes the center tensor to unit Frobenius norm, absorbing the scale
// into log_norm.  Throws when the state has been annihilated.
void absorb_center_norm(ChoiMps& mps, const char* where) {
  double sq = 0.0;
  for (int p = 0; p < 4; ++p) sq += mps.tensors[mps.center][p].squaredNorm();
  if (!(sq > 0.0) || !std::isfinite(sq))
    throw std::runtime_error(std::string(where) +
                             ": record state annihilated");
  const double norm = std::sqrt(sq);
  for (int p = 0; p < 4; ++p) mps.tensors[mps.center][p] /= norm;
  mps.log_norm += std::log(norm);
}

// Brings the whole chain to right-canonical form (center 0) with exact
// splits, absorbing the accumulated norm.
void canonicalize_right(ChoiMps& mps, const char* where) {
  mps.center = mps.n_sites - 1;
  while (mps.center > 0) shift_center_left(mps);
  absorb_center_norm(mps, where);
}

void orthogonalize_to(ChoiMps& mps, int target, const char* where) {
  while (mps.center > target) shift_center_left(mps);
  while (mps.center < target) shift_center_right(mps);
  absorb_center_norm(mps, where);
}

// Applies the diagonal pair weight on the bond (b, b+1) and re-splits with a
// truncated SVD.  Assumes the center sits at b; it moves to b+1.
void split_bond(ChoiMps& mps, int b, const Eigen::Matrix4d& weight,
                int chi_max, const EvolveOptions& options, const char* where) {
  const int cl = chi_left(mps, b);
  const int cr = chi_right(mps, b + 1);
  Eigen::MatrixXd theta(4 * cl, 4 * cr);
  for (int pl = 0; pl < 4; ++pl)
    for (int pr = 0; pr < 4; ++pr)
      theta.block(pl * cl, pr * cr, cl, cr) =
          weight(pl, pr) * mps.tensors[b][pl] * mps.tensors[b + 1][pr];

  Eigen::BDCSVD<Eigen::MatrixXd> svd(theta,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double total_sq = sv.squaredNorm();
  if (!(total_sq > kDeadSplitThreshold) || !std::isfinite(total_sq))
    throw std::runtime_error(std::string(where) +
                             ": record state annihilated");
  int keep = 0;
  const double floor = options.svd_cutoff * sv(0);
  while (keep < sv.size() && keep < chi_max && sv(keep) > floor) ++keep;
  keep = std::max(keep, 1);
  if (keep == chi_max && keep < sv.size() && sv(keep) > floor)
    mps.chi_saturated = true;
  const double kept_sq = sv.head(keep).squaredNorm();
  mps.truncation_error += 1.0 - kept_sq / total_sq;
  const double norm = std::sqrt(kept_sq);
  mps.log_norm += std::log(norm);

  const Eigen::VectorXd weights = sv.head(keep) / norm;
  for (int pl = 0; pl < 4; ++pl)
    mps.tensors[b][pl] = svd.matrixU().block(pl * cl, 0, cl, keep);
  for (int pr = 0; pr < 4; ++pr)
    mps.tensors[b + 1][pr] =
        weights.asDiagonal() *
        svd.matrixV().block(pr * cr, 0, cr, keep).transpose();
  mps.center = b + 1;
}

ChoiMps product_plus_state(int n_sites) {
  ChoiMps mps;
  mps.n_sites = n_sites;
  mps.tensors.resize(n_sites);
  for (int i = 0; i < n_sites; ++i)
    for (int p = 0; p < 4; ++p)
      mps.tensors[i][p] = Eigen::MatrixXd::Constant(1, 1, 0.5);
  mps.center = 0;
  return mps;
}

// (|0...0> + |1...1>)(<0...0| + <1...1|) / 2 over L_x chain sites plus the
// reference, as a bond-dimension-4 MPS: the bond index carries the ket and
// bra branch bits.
ChoiMps ghz_encoded_state(int L_x) {
  ChoiMps mps;
  mps.n_sites = L_x + 1;
  mps.reference_site = L_x;
  mps.tensors.resize(mps.n_sites);
  for (int p = 0; p < 4; ++p) {
    mps.tensors[0][p] = Eigen::MatrixXd::Zero(1, 4);
    mps.tensors[0][p](0, p) = 0.5;
    mps.tensors[mps.n_sites - 1][p] = Eigen::MatrixXd::Zero(4, 1);
    mps.tensors[mps.n_sites - 1][p](p, 0) = 1.0;
  }
  for (int i = 1; i + 1 < mps.n_sites; ++i)
    for (int p = 0; p < 4; ++p) {
      mps.tensors[i][p] = Eigen::MatrixXd::Zero(4, 4);
      mps.tensors[i][p](p, p) = 1.0;
    }
  mps.center = 0;
  return mps;
}

double spectrum_entropy(const Eigen::VectorXd& schmidt, double renyi_index) {
  if (std::isinf(renyi_index)) {
    const double top = schmidt.maxCoeff();
    return -std::log(top * top);
  }
  if (renyi_index == 1.0) {
    double s = 0.0;
    for (int i = 0; i < schmidt.size(); ++i) {
      const double w = schmidt(i) * schmidt(i);
      if (w > 0.0) s -= w * std::log(w);
    }
    return s;
  }
  double acc = 0.0;
  for (int i = 0; i < schmidt.size(); ++i)
    acc += std::pow(schmidt(i) * schmidt(i), renyi_index);
  return std::log(acc) / (1.0 - renyi_index);
}

}  // namespace

int ChoiMps::bond_dimension() const {
  int chi = 0;
  for (const auto& site : tensors)
    chi = std::max(chi, static_cast<int>(site[0].cols()));
  return chi;
}

ChoiColumnMpo choi_column(const CircuitSpec& spec, const Trajectory& traj,
                          int y) {
  check_spec(spec, "choi_column");
  check_traj(spec, traj, "choi_column");
  if (y < 0 || y >= spec.L_y)
    throw std::invalid_argument("choi_column: column index out of range");

  ChoiColumnMpo column;
  column.bond_weights.resize(spec.n_bonds());
  for (int b = 0; b < spec.n_bonds(); ++b) {
    Eigen::Matrix4d w;
    const int s = traj.s_signs(b, y);
    for (int pi = 0; pi < 4; ++pi)
      for (int pj = 0; pj < 4; ++pj) {
        const int zk_i = 1 - 2 * (pi & 1), zk_j = 1 - 2 * (pj & 1);
        const int zb_i = 1 - 2 * (pi >> 1), zb_j = 1 - 2 * (pj >> 1);
        w(pi, pj) =
            layer_bond_weight(spec.beta, s, spec.zz_projective, zk_i, zk_j) *
            layer_bond_weight(spec.beta, s, spec.zz_projective, zb_i, zb_j);
      }
    column.bond_weights[b] = w;
  }

  const double damp = 1.0 - 2.0 * spec.p_s;
  const Eigen::Vector4d glue(1.0, damp, damp, 1.0);
  const double kappa =
      y == spec.L_y - 1 ? 0.5 * spec.beta_prime : spec.beta_prime;
  column.site_gates.resize(spec.L_x);
  for (int x = 0; x < spec.L_x; ++x) {
    const Eigen::Matrix2d k =
        layer_site_matrix(kappa, traj.t_signs(x, y), spec.x_projective);
    Eigen::Matrix4d g;
    for (int po = 0; po < 4; ++po)
      for (int pi = 0; pi < 4; ++pi)
        g(po, pi) = k(po & 1, pi & 1) * k(po >> 1, pi >> 1) * glue(pi);
    column.site_gates[x] = g;
  }
  return column;
}

void apply_column(ChoiMps& mps, const ChoiColumnMpo& column, int chi_max,
                  const EvolveOptions& options) {
  const int n_chain = static_cast<int>(column.site_gates.size());
  if (n_chain < 2 || n_chain > mps.n_sites ||
      column.bond_weights.size() + 1 != column.site_gates.size())
    throw std::invalid_argument("apply_column: column does not fit the state");
  if (chi_max < 1)
    throw std::invalid_argument("apply_column: chi_max must be positive");

  if (mps.center != 0) canonicalize_right(mps, "apply_column");
  for (int b = 0; b + 1 < n_chain; ++b)
    split_bond(mps, b, column.bond_weights[b], chi_max, options,
               "apply_column");
  for (int x = 0; x < n_chain; ++x) {
    std::array<Eigen::MatrixXd, 4> next;
    for (int po = 0; po < 4; ++po) {
      next[po] = column.site_gates[x](po, 0) * mps.tensors[x][0];
      for (int pi = 1; pi < 4; ++pi)
        next[po] += column.site_gates[x](po, pi) * mps.tensors[x][pi];
    }
    mps.tensors[x] = std::move(next);
  }
  canonicalize_right(mps, "apply_column");
  if (mps.truncation_error > options.truncation_budget)
    mps.truncation_flagged = true;
}

ChoiMps evolve_choi(const CircuitSpec& spec, const Trajectory& traj,
                    int chi_max, const EvolveOptions& options) {
  check_spec(spec, "evolve_choi");
  check_traj(spec, traj, "evolve_choi");
  if (chi_max < 1)
    throw std::invalid_argument("evolve_choi: chi_max must be positive");
  ChoiMps mps = options.encode_reference ? ghz_encoded_state(spec.L_x)
                                         : product_plus_state(spec.L_x);
  for (int y = 0; y < spec.L_y; ++y)
    apply_column(mps, choi_column(spec, traj, y), chi_max, options);
  return mps;
}

double bell_overlap(const ChoiMps& mps) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  for (int i = 0; i < mps.n_sites; ++i)
    row = row * (mps.tensors[i][0] + mps.tensors[i][3]);
  return row(0);
}

double log_trace(const ChoiMps& mps) {
  const double overlap = bell_overlap(mps);
  if (!(overlap > 0.0) || !std::isfinite(overlap))
    throw std::runtime_error("log_trace: Bell contraction is not positive");
  return mps.log_norm + std::log(overlap);
}

double renyi2_coherent_information(const CircuitSpec& spec,
                                   const Trajectory& traj,
                                   const ChoiMps& mps) {
  check_spec(spec, "renyi2_coherent_information");
  check_traj(spec, traj, "renyi2_coherent_information");
  if (mps.reference_site < 0 || mps.reference_site != mps.n_sites - 1 ||
      mps.n_sites != spec.L_x + 1)
    throw std::invalid_argument(
        "renyi2_coherent_information: state has no matching reference site");
  ChoiMps work = mps;
  orthogonalize_to(work, work.reference_site, "renyi2_coherent_information");
  // <B_R> = 2 |<<Bell| . |^2 with the normalized Bell row (1,0,0,1)/sqrt(2):
  // contract the Bell vector into the center tensor and take the norm.
  const Eigen::MatrixXd projected =
      (work.tensors[work.center][0] + work.tensors[work.center][3]) /
      std::sqrt(2.0);
  const double value = 2.0 * projected.squaredNorm();
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::runtime_error(
        "renyi2_coherent_information: state is not normalizable");
  return -std::log(value);
}

std::vector<Eigen::VectorXd> schmidt_spectra(const ChoiMps& mps) {
  ChoiMps work = mps;
  orthogonalize_to(work, 0, "schmidt_spectra");
  std::vector<Eigen::VectorXd> spectra;
  spectra.reserve(work.n_sites - 1);
  for (int b = 0; b + 1 < work.n_sites; ++b) {
    const int cl = chi_left(work, b);
    const int cr = chi_right(work, b);
    Eigen::MatrixXd tall(4 * cl, cr);
    for (int p = 0; p < 4; ++p)
      tall.middleRows(p * cl, cl) = work.tensors[b][p];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        tall, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    const double norm = sv.norm();
    if (!(norm > 0.0))
      throw std::runtime_error("schmidt_spectra: record state annihilated");
    sv /= norm;
    spectra.push_back(sv);
    const int k = static_cast<int>(sv.size());
    for (int p = 0; p < 4; ++p)
      work.tensors[b][p] = svd.matrixU().block(p * cl, 0, cl, k);
    const Eigen::MatrixXd carry =
        sv.asDiagonal() * svd.matrixV().transpose();
    for (int p = 0; p < 4; ++p)
      work.tensors[b + 1][p] = carry * work.tensors[b + 1][p];
    work.center = b + 1;
  }
  return spectra;
}

std::vector<double> cut_entropies(const ChoiMps& mps, double renyi_index) {
  if (!(renyi_index > 0.0))
    throw std::invalid_argument("cut_entropies: Renyi order must be > 0");
  const std::vector<Eigen::VectorXd> spectra = schmidt_spectra(mps);
  std::vector<double> out;
  out.reserve(spectra.size());
  for (const auto& sv : spectra) out.push_back(spectrum_entropy(sv, renyi_index));
  return out;
}

double noisy_log_weight(const CircuitSpec& spec, const Trajectory& traj,
                        int chi_max) {
  return log_trace(evolve_choi(spec, traj, chi_max));
}

NoisyChain sample_noisy_ensemble(const CircuitSpec& spec,
                                 const sampling::SamplerConfig& config,
                                 int chi_max) {
  check_spec(spec, "sample_noisy_ensemble");
  if (config.n_samples < 1)
    throw std::invalid_argument("sample_noisy_ensemble: n_samples >= 1");
  if (chi_max < 1)
    throw std::invalid_argument("sample_noisy_ensemble: chi_max >= 1");

  const int n_bond_slots = spec.n_bonds() * spec.L_y;
  const int n_slots = n_bond_slots + spec.L_x * spec.L_y;
  std::mt19937_64 rng = stream_rng(config.seed, 5);

  const auto weight_of = [&](const Trajectory& traj) {
    const ChoiMps mps = evolve_choi(spec, traj, chi_max);
    const double overlap = bell_overlap(mps);
    return overlap > 0.0 ? mps.log_norm + std::log(overlap) : kNegInf;
  };

  NoisyChain out;
  Trajectory traj = all_plus_trajectory(spec);
  double weight = weight_of(traj);

  const auto run_sweeps = [&](int n_sweeps) {
    for (int sweep = 0; sweep < n_sweeps; ++sweep)
      for (int step = 0; step < n_slots; ++step) {
        const int slot = static_cast<int>(uniform_below(rng, n_slots));
        auto& cell = slot < n_bond_slots
                         ? traj.s_signs(slot % spec.n_bonds(),
                                        slot / spec.n_bonds())
                         : traj.t_signs((slot - n_bond_slots) % spec.L_x,
                                        (slot - n_bond_slots) / spec.L_x);
        cell = static_cast<std::int8_t>(-cell);
        const double proposed = weight_of(traj);
        ++out.stats.proposals;
        if (std::log(canonical_double(rng)) < proposed - weight) {
          weight = proposed;
          ++out.stats.accepts;
        } else {
          cell = static_cast<std::int8_t>(-cell);
        }
      }
  };

  run_sweeps(config.burn_in >= 0 ? config.burn_in : config.sweeps);
  out.trajectories.reserve(config.n_samples);
  for (int i = 0; i < config.n_samples; ++i) {
    run_sweeps(config.sweeps);
    Trajectory sample = traj;
    sample.log_born_prob = weight;
    sample.seed = config.seed;
    sample.sector_W = sector_of(spec, sample);
    out.trajectories.push_back(std::move(sample));
  }
  return out;
}

ChoiArc choi_entanglement_arc(const CircuitSpec& spec,
                              const std::vector<Trajectory>& ensemble,
                              int chi_max,
                              const std::vector<double>& renyi_orders,
                              int n_workers) {
  check_spec(spec, "choi_entanglement_arc");
  if (ensemble.empty())
    throw std::invalid_argument("choi_entanglement_arc: empty ensemble");
  for (const double n : renyi_orders)
    if (!(n > 0.0))
      throw std::invalid_argument(
          "choi_entanglement_arc: Renyi order must be > 0");

  const int n_cuts = spec.L_x - 1;
  const int n_orders = static_cast<int>(renyi_orders.size());
  const int n_samples = static_cast<int>(ensemble.size());
  std::vector<double> values(static_cast<std::size_t>(n_samples) * n_cuts *
                             n_orders);
  std::vector<double> errors(n_samples, 0.0);
  std::vector<std::uint8_t> saturated(n_samples, 0);
  parallel_for(
      n_samples,
      [&](std::size_t i) {
        const ChoiMps mps = evolve_choi(spec, ensemble[i], chi_max);
        errors[i] = mps.truncation_error;
        saturated[i] = mps.truncation_flagged && mps.chi_saturated ? 1 : 0;
        const std::vector<Eigen::VectorXd> spectra = schmidt_spectra(mps);
        double* row = values.data() + i * n_cuts * n_orders;
        for (int l = 1; l <= n_cuts; ++l)
          for (int oi = 0; oi < n_orders; ++oi)
            row[(l - 1) * n_orders + oi] =
                spectrum_entropy(spectra[l - 1], renyi_orders[oi]);
      },
      n_workers);

  ChoiArc arc;
  for (int i = 0; i < n_samples; ++i) {
    arc.max_truncation_error = std::max(arc.max_truncation_error, errors[i]);
    arc.chi_saturated = arc.chi_saturated || saturated[i] != 0;
  }
  for (int oi = 0; oi < n_orders; ++oi)
    for (int l = 1; l <= n_cuts; ++l) {
      RunningStat stat;
      for (int i = 0; i < n_samples; ++i)
        stat.push(values[static_cast<std::size_t>(i) * n_cuts * n_orders +
                         (l - 1) * n_orders + oi]);
      observables::ArcRow row;
      row.L_x = spec.L_x;
      row.cut = l;
      row.renyi = renyi_orders[oi];
      row.samples = static_cast<int>(stat.count());
      row.mean = stat.mean();
      if (row.samples > 1) row.stderr = stat.std_error();
      arc.table.rows.push_back(row);
    }
  return arc;
}

}  // namespace emcrit::choi_tns
