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
#include <random>

#include "emcrit/gaussian.hpp"
#include "emcrit/lattice.hpp"
#include "emcrit/oracle.hpp"
#include "emcrit/stats.hpp"

using namespace emcrit;
using gaussian::GaussianPureState;
using gaussian::ProductState;
using oracle::DenseState;

namespace {

DenseState dense_cat(int n, int parity) {
  DenseState s = oracle::make_ghz(n);
  if (parity < 0) s.amp(s.amp.size() - 1) = -s.amp(s.amp.size() - 1);
  return s;
}

// Runs one Born-sampled trajectory with the dense engine and the covariance
// engine in lockstep, checking probabilities, covariances and the absorbed
// norm after every column.  Exercises every sign convention at once.
void lockstep_compare(const CircuitSpec& spec, ProductState kind,
                      std::uint64_t seed) {
  std::mt19937_64 rng = stream_rng(seed, 0);
  DenseState dense = kind == ProductState::all_plus_x
                         ? oracle::make_all_plus(spec.L_x)
                         : dense_cat(spec.L_x,
                                     kind == ProductState::z_cat_even ? 1 : -1);
  GaussianPureState cov = gaussian::init_product_state(spec.L_x, kind);
  REQUIRE((oracle::majorana_covariance(dense) - cov.gamma)
              .cwiseAbs()
              .maxCoeff() < 1e-12);

  for (int y = 0; y < spec.L_y; ++y) {
    const bool last = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const gaussian::WeakGate gate =
          gaussian::bond_gate(spec, b, +1, cov.x_parity);
      const double p_plus = gaussian::outcome_probability(cov, gate);
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      const gaussian::WeakGate pick =
          gaussian::bond_gate(spec, b, sign, cov.x_parity);
      const double p_cov = gaussian::apply_weak_gate(cov, pick);
      const int j = spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
      const double p_dense = oracle::apply_weak_zz(dense, b, j, sign, spec.beta,
                                                   spec.zz_projective);
      CHECK(p_cov == doctest::Approx(p_dense).epsilon(1e-10));
    }
    for (int x = 0; x < spec.L_x; ++x) {
      const gaussian::WeakGate gate = gaussian::site_gate(spec, x, +1, last);
      const double p_plus = gaussian::outcome_probability(cov, gate);
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      const double p_cov = gaussian::apply_weak_gate(
          cov, gaussian::site_gate(spec, x, sign, last));
      const double p_dense = oracle::apply_weak_x(
          dense, x, sign, last ? 0.5 * spec.beta_prime : spec.beta_prime,
          spec.x_projective);
      CHECK(p_cov == doctest::Approx(p_dense).epsilon(1e-10));
    }
    gaussian::repurify(cov);
    CHECK((oracle::majorana_covariance(dense) - cov.gamma)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK(cov.log_norm == doctest::Approx(dense.log_norm).epsilon(1e-9));
  }

  // Derived observables agree at the end of the run.
  CHECK(gaussian::global_parity(cov) ==
        doctest::Approx(oracle::expect_x_string(dense)).epsilon(1e-8));
  for (int x = 0; x < spec.L_x; ++x)
    CHECK(gaussian::x_expectation(cov, x) ==
          doctest::Approx(oracle::expect_x(dense, x)).epsilon(1e-8));
  for (int i = 0; i + 1 < spec.L_x; ++i)
    CHECK(gaussian::zz_expectation(cov, i, i + 1) ==
          doctest::Approx(oracle::expect_zz(dense, i, i + 1)).epsilon(1e-8));
}

}  // namespace

TEST_CASE("initial covariances match the dense states") {
  for (ProductState kind : {ProductState::all_plus_x, ProductState::z_cat_even,
                            ProductState::z_cat_odd}) {
    const GaussianPureState state = gaussian::init_product_state(4, kind);
    CHECK(gaussian::purity_defect(state) < 1e-14);
    DenseState dense = kind == ProductState::all_plus_x
                           ? oracle::make_all_plus(4)
                           : dense_cat(4, kind == ProductState::z_cat_even ? 1 : -1);
    CHECK((oracle::majorana_covariance(dense) - state.gamma)
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    CHECK(gaussian::global_parity(state) ==
          doctest::Approx(oracle::expect_x_string(dense)).epsilon(1e-12));
  }
}

TEST_CASE("lockstep against the dense engine, weak couplings") {
  lockstep_compare(build_spec(0.3 * M_PI, 4, 4, SpatialBc::periodic),
                   ProductState::all_plus_x, 31);
  lockstep_compare(build_spec(0.3 * M_PI, 4, 4, SpatialBc::open),
                   ProductState::all_plus_x, 32);
  lockstep_compare(build_spec(0.2 * M_PI, 3, 5, SpatialBc::periodic),
                   ProductState::all_plus_x, 33);
}

TEST_CASE("lockstep with odd string parity exercises the ring closure") {
  lockstep_compare(build_spec(0.35 * M_PI, 4, 4, SpatialBc::periodic),
                   ProductState::z_cat_odd, 34);
  lockstep_compare(build_spec(0.35 * M_PI, 4, 4, SpatialBc::periodic),
                   ProductState::z_cat_even, 35);
  lockstep_compare(build_spec(0.25 * M_PI, 4, 3, SpatialBc::open),
                   ProductState::z_cat_odd, 36);
}

TEST_CASE("lockstep in the projective limits") {
  lockstep_compare(build_spec(0.5 * M_PI, 4, 3, SpatialBc::periodic),
                   ProductState::all_plus_x, 37);
  lockstep_compare(build_spec(0.0, 4, 3, SpatialBc::periodic),
                   ProductState::all_plus_x, 38);
  lockstep_compare(build_spec(0.5 * M_PI, 3, 3, SpatialBc::open),
                   ProductState::z_cat_even, 39);
}

TEST_CASE("outcome probabilities are complementary") {
  const CircuitSpec spec = build_spec(0.28 * M_PI, 4, 2, SpatialBc::periodic);
  GaussianPureState state =
      gaussian::init_product_state(4, ProductState::all_plus_x);
  gaussian::apply_weak_gate(state, gaussian::bond_gate(spec, 0, +1, +1));
  gaussian::apply_weak_gate(state, gaussian::site_gate(spec, 2, -1, false));
  for (int b = 0; b < 4; ++b) {
    const double p = gaussian::outcome_probability(
        state, gaussian::bond_gate(spec, b, +1, state.x_parity));
    const double q = gaussian::outcome_probability(
        state, gaussian::bond_gate(spec, b, -1, state.x_parity));
    CHECK(p + q == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("entanglement entropies match dense reductions") {
  std::mt19937_64 rng = stream_rng(41, 0);
  const CircuitSpec spec = build_spec(0.3 * M_PI, 5, 4, SpatialBc::periodic);
  DenseState dense = oracle::make_all_plus(spec.L_x);
  GaussianPureState cov =
      gaussian::init_product_state(spec.L_x, ProductState::all_plus_x);
  for (int y = 0; y < spec.L_y; ++y) {
    const bool last = y == spec.L_y - 1;
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const double p_plus = gaussian::outcome_probability(
          cov, gaussian::bond_gate(spec, b, +1, cov.x_parity));
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      gaussian::apply_weak_gate(cov,
                                gaussian::bond_gate(spec, b, sign, cov.x_parity));
      oracle::apply_weak_zz(dense, b, (b + 1) % spec.L_x, sign, spec.beta,
                            false);
    }
    for (int x = 0; x < spec.L_x; ++x) {
      const double p_plus = gaussian::outcome_probability(
          cov, gaussian::site_gate(spec, x, +1, last));
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      gaussian::apply_weak_gate(cov, gaussian::site_gate(spec, x, sign, last));
      oracle::apply_weak_x(dense, x, sign,
                           last ? 0.5 * spec.beta_prime : spec.beta_prime,
                           false);
    }
  }

  for (int l = 1; l < spec.L_x; ++l) {
    std::vector<int> sites(l);
    for (int k = 0; k < l; ++k) sites[k] = k;
    const Eigen::MatrixXcd rho = oracle::reduced_density(dense, sites);
    CHECK(gaussian::entanglement_entropy(cov, 0, l, 1.0) ==
          doctest::Approx(oracle::entropy_vn(rho)).epsilon(1e-7));
    CHECK(gaussian::entanglement_entropy(cov, 0, l, 2.0) ==
          doctest::Approx(oracle::entropy_renyi(rho, 2.0)).epsilon(1e-7));
    CHECK(gaussian::entanglement_entropy(
              cov, 0, l, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(oracle::entropy_min(rho)).epsilon(1e-6));
  }
  // A wrapped region.
  const Eigen::MatrixXcd rho_wrap = oracle::reduced_density(dense, {3, 4, 0});
  CHECK(gaussian::entanglement_entropy(cov, 3, 3, 1.0) ==
        doctest::Approx(oracle::entropy_vn(rho_wrap)).epsilon(1e-7));
  // ZZ correlations through the bulk.
  for (int i = 0; i < spec.L_x - 1; ++i)
    for (int j = i + 1; j < spec.L_x; ++j)
      CHECK(gaussian::zz_expectation(cov, i, j) ==
            doctest::Approx(oracle::expect_zz(dense, i, j)).epsilon(1e-7));
}

TEST_CASE("trace overlaps match dense inner products") {
  std::mt19937_64 rng = stream_rng(42, 0);
  const CircuitSpec spec = build_spec(0.33 * M_PI, 4, 2, SpatialBc::open);
  DenseState dense = oracle::make_all_plus(spec.L_x);
  GaussianPureState cov =
      gaussian::init_product_state(spec.L_x, ProductState::all_plus_x);
  for (int y = 0; y < spec.L_y; ++y)
    for (int b = 0; b < spec.n_bonds(); ++b) {
      const double p_plus = gaussian::outcome_probability(
          cov, gaussian::bond_gate(spec, b, +1, cov.x_parity));
      const int sign = canonical_double(rng) < p_plus ? 1 : -1;
      gaussian::apply_weak_gate(cov,
                                gaussian::bond_gate(spec, b, sign, cov.x_parity));
      oracle::apply_weak_zz(dense, b, b + 1, sign, spec.beta, false);
    }
  const GaussianPureState plus =
      gaussian::init_product_state(spec.L_x, ProductState::all_plus_x);
  const double log_ov = gaussian::log_trace_overlap(plus.gamma, cov.gamma);
  const std::complex<double> amp =
      oracle::overlap(oracle::make_all_plus(spec.L_x), dense);
  CHECK(0.5 * log_ov == doctest::Approx(std::log(std::abs(amp))).epsilon(1e-9));

  // Orthogonal cat states have vanishing overlap.
  const GaussianPureState even =
      gaussian::init_product_state(4, ProductState::z_cat_even);
  const GaussianPureState odd =
      gaussian::init_product_state(4, ProductState::z_cat_odd);
  CHECK(gaussian::log_trace_overlap(even.gamma, odd.gamma) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("repurification contracts covariance drift") {
  std::mt19937_64 rng = stream_rng(43, 0);
  GaussianPureState state =
      gaussian::init_product_state(6, ProductState::all_plus_x);
  std::normal_distribution<double> noise(0.0, 1e-4);
  Eigen::MatrixXd eps(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) eps(i, j) = noise(rng);
  state.gamma += eps - eps.transpose();
  const double before = gaussian::purity_defect(state);
  REQUIRE(before > 1e-6);
  gaussian::repurify(state);
  CHECK(gaussian::purity_defect(state) < before * before * 100.0);
}

TEST_CASE("pfaffian agrees with cofactor expansion on small matrices") {
  std::mt19937_64 rng = stream_rng(44, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        a(i, j) = g(rng);
        a(j, i) = -a(i, j);
      }
    const double expected =
        a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
    CHECK(gaussian::pfaffian(a) == doctest::Approx(expected).epsilon(1e-10));
  }
  // Pf(A)^2 = det(A) on a larger random case.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      a(i, j) = g(rng);
      a(j, i) = -a(i, j);
    }
  const double pf = gaussian::pfaffian(a);
  CHECK(pf * pf == doctest::Approx(a.determinant()).epsilon(1e-8));
}
