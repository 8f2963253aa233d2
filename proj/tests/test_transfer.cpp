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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "emcrit/lattice.hpp"
#include "emcrit/oracle.hpp"
#include "emcrit/stats.hpp"
#include "emcrit/transfer.hpp"

using namespace emcrit;
using transfer::SignCol;
using transfer::TransferSpectrum;

namespace {

SignCol random_col(int n, std::mt19937_64& rng) {
  SignCol col(n);
  for (int i = 0; i < n; ++i) col(i) = canonical_double(rng) < 0.5 ? -1 : 1;
  return col;
}

Trajectory random_trajectory(const CircuitSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng = stream_rng(seed, 7);
  Trajectory traj;
  traj.s_signs = SignArray(spec.n_bonds(), spec.L_y);
  traj.t_signs = SignArray(spec.L_x, spec.L_y);
  for (int y = 0; y < spec.L_y; ++y) {
    for (int b = 0; b < spec.n_bonds(); ++b)
      traj.s_signs(b, y) = canonical_double(rng) < 0.5 ? -1 : 1;
    for (int x = 0; x < spec.L_x; ++x)
      traj.t_signs(x, y) = canonical_double(rng) < 0.5 ? -1 : 1;
  }
  traj.sector_W = sector_of(spec, traj);
  return traj;
}

// Positive half of the log eigenvalue moduli of a column product, matching
// the pairing used by the Lyapunov routine.
Eigen::VectorXd direct_epsilon(const Eigen::MatrixXd& product, int per_column) {
  const Eigen::EigenSolver<Eigen::MatrixXd> ev(product);
  Eigen::VectorXd mu = ev.eigenvalues().array().abs().log();
  std::sort(mu.data(), mu.data() + mu.size(), std::greater<double>());
  const int L = static_cast<int>(mu.size()) / 2;
  Eigen::VectorXd eps(L);
  for (int i = 0; i < L; ++i)
    eps(i) = 0.5 * (mu(i) - mu(mu.size() - 1 - i)) / per_column;
  return eps;
}

}  // namespace

TEST_CASE("column transfer is eta-orthogonal with unit determinant") {
  std::mt19937_64 rng = stream_rng(51, 0);
  const CircuitSpec spec = build_spec(0.31 * M_PI, 5, 1, SpatialBc::periodic);
  Eigen::VectorXd eta(10);
  for (int i = 0; i < 10; ++i) eta(i) = i % 2 == 0 ? 1.0 : -1.0;
  for (int wrap : {-1, 1})
    for (bool final_column : {false, true}) {
      const Eigen::MatrixXd g =
          transfer::column_transfer(spec, random_col(5, rng),
                                    random_col(5, rng), wrap, final_column);
      const Eigen::MatrixXd should_be_identity =
          eta.asDiagonal() * g.transpose() * eta.asDiagonal() * g;
      CHECK((should_be_identity - Eigen::MatrixXd::Identity(10, 10))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      CHECK(g.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("column transfer rejects unusable inputs") {
  std::mt19937_64 rng = stream_rng(52, 0);
  const CircuitSpec open_spec = build_spec(0.3 * M_PI, 4, 1, SpatialBc::open);
  CHECK_THROWS_AS(transfer::column_transfer(open_spec, random_col(3, rng),
                                            random_col(4, rng)),
                  std::invalid_argument);
  const CircuitSpec proj = build_spec(0.5 * M_PI, 4, 1, SpatialBc::periodic);
  CHECK_THROWS_AS(
      transfer::column_transfer(proj, random_col(4, rng), random_col(4, rng)),
      std::invalid_argument);
  const CircuitSpec spec = build_spec(0.3 * M_PI, 4, 1, SpatialBc::periodic);
  CHECK_THROWS_AS(transfer::column_transfer(spec, random_col(4, rng),
                                            random_col(4, rng), 0),
                  std::invalid_argument);
}

TEST_CASE("uniform cylinder exponents match direct eigenvalues") {
  const CircuitSpec spec = build_spec(0.25 * M_PI, 4, 200, SpatialBc::periodic);
  const Trajectory traj = all_plus_trajectory(spec);
  const TransferSpectrum sp = transfer::lyapunov_spectrum(spec, traj);
  CHECK(sp.sector_W == 1);
  CHECK(sp.columns_used == 120);

  SignCol ones_s = SignCol::Constant(spec.n_bonds(), 1);
  SignCol ones_t = SignCol::Constant(spec.L_x, 1);
  const Eigen::MatrixXd t_col =
      transfer::column_transfer(spec, ones_s, ones_t, -1);
  const Eigen::VectorXd eps = direct_epsilon(t_col, 1);
  REQUIRE(eps.size() == sp.epsilon.size());
  for (int i = 0; i < eps.size(); ++i)
    CHECK(sp.epsilon(i) == doctest::Approx(eps(i)).epsilon(1e-7));
  // Spectrum comes out sorted.
  for (int i = 0; i + 1 < eps.size(); ++i)
    CHECK(sp.epsilon(i) >= sp.epsilon(i + 1) - 1e-12);
}

TEST_CASE("period-two cylinder exponents match the two-column product") {
  const CircuitSpec spec = build_spec(0.3 * M_PI, 3, 400, SpatialBc::periodic);
  std::mt19937_64 rng = stream_rng(53, 0);
  const SignCol sa = random_col(spec.n_bonds(), rng);
  const SignCol ta = random_col(spec.L_x, rng);
  const SignCol sb = random_col(spec.n_bonds(), rng);
  const SignCol tb = random_col(spec.L_x, rng);

  Trajectory traj;
  traj.s_signs = SignArray(spec.n_bonds(), spec.L_y);
  traj.t_signs = SignArray(spec.L_x, spec.L_y);
  for (int y = 0; y < spec.L_y; ++y) {
    traj.s_signs.col(y) = y % 2 == 0 ? sa : sb;
    traj.t_signs.col(y) = y % 2 == 0 ? ta : tb;
  }
  traj.sector_W = sector_of(spec, traj);

  transfer::LyapunovOptions opts;
  opts.margin = 60;  // even, so the accumulation window is phase aligned
  const TransferSpectrum sp = transfer::lyapunov_spectrum(spec, traj, opts);
  CHECK(sp.columns_used == 280);

  const Eigen::MatrixXd pair_product =
      transfer::column_transfer(spec, sb, tb, -1) *
      transfer::column_transfer(spec, sa, ta, -1);
  const Eigen::VectorXd eps = direct_epsilon(pair_product, 2);
  for (int i = 0; i < eps.size(); ++i)
    CHECK(sp.epsilon(i) == doctest::Approx(eps(i)).epsilon(1e-5));
}

TEST_CASE("qr interval does not change the exponents") {
  const CircuitSpec spec = build_spec(0.35 * M_PI, 3, 150, SpatialBc::periodic);
  const Trajectory traj = random_trajectory(spec, 54);
  transfer::LyapunovOptions one, four;
  one.margin = four.margin = 25;
  four.qr_interval = 4;
  const TransferSpectrum a = transfer::lyapunov_spectrum(spec, traj, one);
  const TransferSpectrum b = transfer::lyapunov_spectrum(spec, traj, four);
  CHECK(a.columns_used == b.columns_used);
  for (int i = 0; i < a.epsilon.size(); ++i)
    CHECK(a.epsilon(i) == doctest::Approx(b.epsilon(i)).epsilon(1e-9));
}

TEST_CASE("free energy overlap agrees with the exhaustive spin sum") {
  int which = 0;
  for (SpatialBc bc : {SpatialBc::periodic, SpatialBc::open})
    for (int L_x : {2, 3})
      for (double theta : {0.3 * M_PI, 0.45 * M_PI}) {
        const CircuitSpec spec = build_spec(theta, L_x, 3, bc);
        const Trajectory traj = random_trajectory(spec, 55 + which++);
        const oracle::LogPartition lp = oracle::exhaustive_partition(spec, traj);
        const double lg = transfer::log_partition(spec, traj);
        CHECK(lg == doctest::Approx(lp.log_abs).epsilon(1e-8));
      }
}

TEST_CASE("projective couplings: consistent records only") {
  const double inf = std::numeric_limits<double>::infinity();

  // Frozen bonds force the bond record to repeat across columns.
  const CircuitSpec zz = build_spec(0.5 * M_PI, 3, 2, SpatialBc::open);
  Trajectory traj = all_plus_trajectory(zz);
  traj.s_signs(0, 0) = traj.s_signs(0, 1) = -1;
  traj.t_signs(1, 0) = -1;
  CHECK(transfer::log_partition(zz, traj) ==
        doctest::Approx(oracle::exhaustive_partition(zz, traj).log_abs)
            .epsilon(1e-8));
  traj.s_signs(0, 1) = 1;  // contradicts column 0
  CHECK(transfer::log_partition(zz, traj) == -inf);
  CHECK(oracle::exhaustive_partition(zz, traj).log_abs == -inf);

  // Frozen sites force the closing half layer to accept every site.
  const CircuitSpec xx = build_spec(0.0, 2, 2, SpatialBc::periodic);
  Trajectory plus = all_plus_trajectory(xx);
  CHECK(transfer::log_partition(xx, plus) ==
        doctest::Approx(oracle::exhaustive_partition(xx, plus).log_abs)
            .epsilon(1e-8));
  plus.t_signs(0, 1) = -1;
  CHECK(transfer::log_partition(xx, plus) == -inf);
  CHECK(oracle::exhaustive_partition(xx, plus).log_abs == -inf);
}

TEST_CASE("many-body levels respect the excitation parity filter") {
  TransferSpectrum sp;
  sp.L_x = 3;
  sp.epsilon = Eigen::Vector3d(2.0, 1.0, 0.5);

  const std::vector<double> even = transfer::many_body_levels(sp, 10, +1);
  const std::vector<double> odd = transfer::many_body_levels(sp, 10, -1);
  const std::vector<double> any = transfer::many_body_levels(sp, 6, 0);

  REQUIRE(even.size() == 4);
  CHECK(even[0] == doctest::Approx(-1.75));
  CHECK(even[1] == doctest::Approx(-0.25));
  CHECK(even[2] == doctest::Approx(0.75));
  CHECK(even[3] == doctest::Approx(1.25));

  REQUIRE(odd.size() == 4);
  CHECK(odd[0] == doctest::Approx(-1.25));
  CHECK(odd[1] == doctest::Approx(-0.75));
  CHECK(odd[2] == doctest::Approx(0.25));
  CHECK(odd[3] == doctest::Approx(1.75));

  REQUIRE(any.size() == 6);
  CHECK(any[0] == doctest::Approx(-1.75));
  CHECK(any[1] == doctest::Approx(-1.25));
  CHECK(any[5] == doctest::Approx(0.75));
}

TEST_CASE("sector aggregation pools ground energies") {
  TransferSpectrum a, b;
  a.L_x = b.L_x = 4;
  a.epsilon = Eigen::Vector4d(1.0, 0.5, 0.25, 0.125);
  b.epsilon = 2.0 * a.epsilon;

  const transfer::CasimirPoint pt = transfer::casimir_fit_input({a, b});
  CHECK(pt.L_x == 4);
  CHECK(pt.samples == 2);
  CHECK(pt.f == doctest::Approx(0.5 * (a.ground_energy() + b.ground_energy()) / 4));
  CHECK(pt.stderr > 0.0);

  const transfer::TwistGap gap = transfer::twist_gap({a}, {b});
  const double expected =
      4.0 / (2.0 * M_PI) * (b.ground_energy() - a.ground_energy());
  CHECK(gap.delta_m == doctest::Approx(expected));
  CHECK(gap.samples_plus == 1);
  CHECK(gap.samples_minus == 1);

  TransferSpectrum other = a;
  other.L_x = 5;
  CHECK_THROWS_AS(transfer::casimir_fit_input({a, other}),
                  std::invalid_argument);
  CHECK_THROWS_AS(transfer::twist_gap({a}, {other}), std::invalid_argument);
}

TEST_CASE("uniform self-dual cylinder shows the expected gap scaling") {
  // Single-particle and flux-insertion gaps of the uniform record at
  // theta = pi/4, in units of 2 pi / L_x.  The finite-size values converge
  // to 1/2 and 1/8 like 1/L^2; the pinned numbers below come from direct
  // eigendecompositions of the column matrix.
  struct Pin {
    int L_x;
    int L_y;
    double delta_eps;
    double delta_m;
  };
  const Pin pins[] = {{8, 400, 0.49369486, 0.12583958},
                      {16, 800, 0.49840130, 0.12520280}};

  std::vector<double> f_values;
  for (const Pin& pin : pins) {
    const CircuitSpec spec =
        build_spec(0.25 * M_PI, pin.L_x, pin.L_y, SpatialBc::periodic);
    const Trajectory traj = all_plus_trajectory(spec);

    transfer::LyapunovOptions opts;
    const TransferSpectrum antiperiodic =
        transfer::lyapunov_spectrum(spec, traj, opts);
    opts.wrap = +1;
    const TransferSpectrum periodic =
        transfer::lyapunov_spectrum(spec, traj, opts);

    const double scale = pin.L_x / (2.0 * M_PI);
    const double delta_eps =
        scale * antiperiodic.epsilon(pin.L_x - 1);
    CHECK(delta_eps == doctest::Approx(pin.delta_eps).epsilon(1e-4));

    const transfer::TwistGap gap =
        transfer::twist_gap({antiperiodic}, {periodic});
    CHECK(gap.delta_m == doctest::Approx(pin.delta_m).epsilon(1e-4));

    f_values.push_back(antiperiodic.ground_energy() / pin.L_x);
  }

  // Two-size fit of f_L = f_inf - (pi c / 6) / L^2.
  const double c = 6.0 / M_PI * (f_values[1] - f_values[0]) /
                   (1.0 / 64.0 - 1.0 / 256.0);
  CHECK(c == doctest::Approx(0.5).epsilon(0.01));
}
