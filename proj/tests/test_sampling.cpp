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
#include <map>
#include <string>
#include <vector>

#include "emcrit/lattice.hpp"
#include "emcrit/oracle.hpp"
#include "emcrit/sampling.hpp"
#include "emcrit/stats.hpp"

using namespace emcrit;

namespace {

std::string record_key(const Trajectory& traj) {
  std::string key;
  for (int y = 0; y < traj.s_signs.cols(); ++y) {
    for (int b = 0; b < traj.s_signs.rows(); ++b)
      key += traj.s_signs(b, y) > 0 ? '+' : '-';
    for (int x = 0; x < traj.t_signs.rows(); ++x)
      key += traj.t_signs(x, y) > 0 ? '+' : '-';
  }
  return key;
}

std::string vortex_key(const CircuitSpec& spec, const Trajectory& traj) {
  const VortexField v = vortices_of(spec, traj);
  std::string key;
  for (int y = 0; y + 1 < spec.L_y; ++y)
    for (int b = 0; b < spec.n_bonds(); ++b) key += v.m(b, y) ? '1' : '0';
  if (spec.bc == SpatialBc::periodic)
    key += sector_of(spec, traj) > 0 ? 'P' : 'M';
  return key;
}

// Exact class law of the auxiliary sign model: independent signs on every
// measured bond slot and every inter-column link, fluxes kept.
std::map<std::string, double> iid_flux_law(const CircuitSpec& spec) {
  const int nb = spec.n_bonds();
  const int n_bond = nb * spec.L_y;
  const int n_link = spec.L_x * (spec.L_y - 1);
  const double q = std::exp(-spec.beta) / (2.0 * std::cosh(spec.beta));
  std::map<std::string, double> law;
  for (std::uint64_t mask = 0; mask < (1ull << (n_bond + n_link)); ++mask) {
    double p = 1.0;
    for (int k = 0; k < n_bond + n_link; ++k)
      p *= (mask >> k) & 1 ? q : 1.0 - q;
    const auto bond = [&](int b, int y) {
      return (mask >> (y * nb + b)) & 1 ? -1 : 1;
    };
    const auto link = [&](int x, int y) {
      return (mask >> (n_bond + y * spec.L_x + x)) & 1 ? -1 : 1;
    };
    std::string key;
    for (int y = 0; y + 1 < spec.L_y; ++y)
      for (int b = 0; b < nb; ++b) {
        const int xr =
            spec.bc == SpatialBc::periodic ? (b + 1) % spec.L_x : b + 1;
        const int flux =
            bond(b, y) * bond(b, y + 1) * link(b, y) * link(xr, y);
        key += flux < 0 ? '1' : '0';
      }
    if (spec.bc == SpatialBc::periodic) {
      int w = 1;
      for (int b = 0; b < nb; ++b) w *= bond(b, 0);
      key += w > 0 ? 'P' : 'M';
    }
    law[key] += p;
  }
  return law;
}

std::map<std::string, double> born_flux_law(const CircuitSpec& spec) {
  const oracle::OutcomeEnsemble ens = oracle::enumerate_outcomes(spec, 30);
  std::map<std::string, double> law;
  for (std::size_t k = 0; k < ens.trajectories.size(); ++k)
    law[vortex_key(spec, ens.trajectories[k])] += ens.probabilities[k];
  return law;
}

// Exact Born weight of a fixed record via the dense engine.
double dense_log_born(const CircuitSpec& spec, const Trajectory& traj) {
  oracle::DenseState state = oracle::make_all_plus(spec.L_x);
  oracle::run_trajectory(spec, traj, state);
  return 2.0 * state.log_norm;
}

Chi2Result frequency_test(const std::map<std::string, double>& expected_law,
                          const std::map<std::string, int>& counts, int total) {
  std::vector<double> observed, expected;
  for (const auto& [key, p] : expected_law) {
    const auto it = counts.find(key);
    observed.push_back(it == counts.end() ? 0.0 : it->second);
    expected.push_back(p * total);
  }
  return chi2_test(observed, expected);
}

}  // namespace

TEST_CASE("sequential sampler reproduces the exact record distribution") {
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 2, SpatialBc::periodic);
  const oracle::OutcomeEnsemble ens = oracle::enumerate_outcomes(spec, 30);
  std::map<std::string, double> law;
  std::map<std::string, double> log_p;
  for (std::size_t k = 0; k < ens.trajectories.size(); ++k) {
    law[record_key(ens.trajectories[k])] = ens.probabilities[k];
    log_p[record_key(ens.trajectories[k])] = std::log(ens.probabilities[k]);
  }

  sampling::SamplerConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 11;
  const std::vector<Trajectory> samples = sampling::sample_sequential(spec, cfg);
  std::map<std::string, int> counts;
  for (const Trajectory& traj : samples) ++counts[record_key(traj)];
  const Chi2Result res = frequency_test(law, counts, cfg.n_samples);
  CHECK(res.p_value > 1e-4);

  // The attached Born probabilities match the enumeration.
  for (int k = 0; k < 50; ++k)
    CHECK(samples[k].log_born_prob ==
          doctest::Approx(log_p.at(record_key(samples[k]))).epsilon(1e-9));
}

TEST_CASE("bond-vortex marginal equals the independent-sign flux law") {
  for (double theta : {0.3 * M_PI, 0.42 * M_PI}) {
    const CircuitSpec spec = build_spec(theta, 2, 2, SpatialBc::periodic);
    const auto exact = born_flux_law(spec);
    const auto iid = iid_flux_law(spec);
    REQUIRE(exact.size() == iid.size());
    for (const auto& [key, p] : exact)
      CHECK(p == doctest::Approx(iid.at(key)).epsilon(1e-11));
  }
  const CircuitSpec open_spec = build_spec(0.35 * M_PI, 3, 2, SpatialBc::open);
  const auto exact = born_flux_law(open_spec);
  const auto iid = iid_flux_law(open_spec);
  REQUIRE(exact.size() == iid.size());
  for (const auto& [key, p] : exact)
    CHECK(p == doctest::Approx(iid.at(key)).epsilon(1e-11));
}

TEST_CASE("marginal sampler draws from the flux law") {
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 3, SpatialBc::periodic);
  const auto law = iid_flux_law(spec);

  sampling::SamplerConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 12;
  const std::vector<Trajectory> samples = sampling::sample_marginal_m(spec, cfg);
  std::map<std::string, int> counts;
  for (const Trajectory& traj : samples) {
    ++counts[vortex_key(spec, traj)];
    CHECK((traj.t_signs == 1).all());
  }
  const Chi2Result res = frequency_test(law, counts, cfg.n_samples);
  CHECK(res.p_value > 1e-4);

  // Samples come out gauge canonical.
  const Trajectory& probe = samples.front();
  const Trajectory canon = gauge_orbit_canonicalize(spec, probe);
  CHECK((canon.s_signs == probe.s_signs).all());
}

TEST_CASE("vortex densities follow the quartic law") {
  sampling::SamplerConfig cfg;
  cfg.n_samples = 600;
  cfg.seed = 13;

  const CircuitSpec spec = build_spec(0.3 * M_PI, 4, 5, SpatialBc::periodic);
  const auto density =
      sampling::vortex_density(spec, sampling::sample_sequential(spec, cfg));
  const double e_target = 0.5 * (1.0 - std::pow(std::cos(0.3 * M_PI), 4));
  const double m_target = 0.5 * (1.0 - std::pow(std::sin(0.3 * M_PI), 4));
  CHECK(std::abs(density.e_mean - e_target) <
        std::max(4.0 * density.e_stderr, 1e-12));
  CHECK(std::abs(density.m_mean - m_target) <
        std::max(4.0 * density.m_stderr, 1e-12));

  // Projective end points pin one family exactly.
  const CircuitSpec frozen_x = build_spec(0.0, 4, 5, SpatialBc::periodic);
  const auto dx =
      sampling::vortex_density(frozen_x, sampling::sample_sequential(frozen_x, cfg));
  CHECK(dx.e_mean == 0.0);
  CHECK(std::abs(dx.m_mean - 0.5) < std::max(4.0 * dx.m_stderr, 1e-12));

  const CircuitSpec frozen_zz = build_spec(0.5 * M_PI, 4, 5, SpatialBc::periodic);
  const auto dz =
      sampling::vortex_density(frozen_zz, sampling::sample_sequential(frozen_zz, cfg));
  CHECK(dz.m_mean == 0.0);
  CHECK(std::abs(dz.e_mean - 0.5) < std::max(4.0 * dz.e_stderr, 1e-12));
}

TEST_CASE("conditional chain matches the exact site-record law") {
  const CircuitSpec spec = build_spec(0.35 * M_PI, 2, 3, SpatialBc::periodic);
  const Trajectory base = sampling::sample_marginal_m_one(spec, 7);

  // Exact conditional over the 2^(L_x L_y) site records at this bond record.
  std::map<std::string, double> law;
  double total = 0.0;
  for (int mask = 0; mask < (1 << (spec.L_x * spec.L_y)); ++mask) {
    Trajectory traj = base;
    for (int y = 0; y < spec.L_y; ++y)
      for (int x = 0; x < spec.L_x; ++x)
        traj.t_signs(x, y) =
            (mask >> (y * spec.L_x + x)) & 1 ? -1 : 1;
    const double p = std::exp(dense_log_born(spec, traj));
    law[record_key(traj)] = p;
    total += p;
  }
  for (auto& [key, p] : law) p /= total;

  for (const bool sweep_mode : {false, true}) {
    sampling::SamplerConfig cfg;
    cfg.sweep_proposals = sweep_mode;
    cfg.burn_in = 0;
    cfg.sweeps = 40;
    Trajectory walker = base;
    sampling::metropolis_e_given_m(spec, walker, cfg, 100);
    cfg.sweeps = 1;
    std::map<std::string, int> counts;
    const int n_keep = 4000;
    for (int k = 0; k < n_keep; ++k) {
      sampling::metropolis_e_given_m(spec, walker, cfg, 200 + k);
      ++counts[record_key(walker)];
    }
    CHECK((walker.s_signs == base.s_signs).all());
    const Chi2Result res = frequency_test(law, counts, n_keep);
    CHECK(res.p_value > 1e-4);
  }
}

TEST_CASE("site-vortex fugacity reweights the conditional chain") {
  SpecKnobs knobs;
  knobs.p_eta = 0.25;
  const CircuitSpec spec =
      build_spec(0.35 * M_PI, 2, 3, SpatialBc::periodic, knobs);
  const double eta = sampling::fugacity(0.25);
  CHECK(eta == doctest::Approx(std::log(3.0)));
  const Trajectory base = sampling::sample_marginal_m_one(spec, 9);

  std::map<std::string, double> law;
  double total = 0.0;
  for (int mask = 0; mask < (1 << (spec.L_x * spec.L_y)); ++mask) {
    Trajectory traj = base;
    for (int y = 0; y < spec.L_y; ++y)
      for (int x = 0; x < spec.L_x; ++x)
        traj.t_signs(x, y) = (mask >> (y * spec.L_x + x)) & 1 ? -1 : 1;
    const VortexField v = vortices_of(spec, traj);
    const double p =
        std::exp(dense_log_born(spec, traj) - eta * v.e_count);
    law[record_key(traj)] = p;
    total += p;
  }
  for (auto& [key, p] : law) p /= total;

  sampling::SamplerConfig cfg;
  cfg.burn_in = 0;
  cfg.sweeps = 40;
  Trajectory walker = base;
  sampling::metropolis_e_given_m(spec, walker, cfg, 300);
  cfg.sweeps = 1;
  std::map<std::string, int> counts;
  const int n_keep = 4000;
  for (int k = 0; k < n_keep; ++k) {
    sampling::metropolis_e_given_m(spec, walker, cfg, 400 + k);
    ++counts[record_key(walker)];
  }
  const Chi2Result res = frequency_test(law, counts, n_keep);
  CHECK(res.p_value > 1e-4);

  // The target weight matches its definition.
  const VortexField v = vortices_of(spec, walker);
  CHECK(sampling::log_target_weight(spec, walker) ==
        doctest::Approx(dense_log_born(spec, walker) - eta * v.e_count)
            .epsilon(1e-8));
}

TEST_CASE("bond moves sample the site-frozen deformed ensemble") {
  SpecKnobs knobs;
  knobs.p_eta = 0.5;
  const CircuitSpec spec =
      build_spec(0.364 * M_PI, 2, 2, SpatialBc::periodic, knobs);
  const Trajectory base = all_plus_trajectory(spec);

  std::map<std::string, double> law;
  double total = 0.0;
  for (int mask = 0; mask < (1 << (spec.n_bonds() * spec.L_y)); ++mask) {
    Trajectory traj = base;
    for (int y = 0; y < spec.L_y; ++y)
      for (int b = 0; b < spec.n_bonds(); ++b)
        traj.s_signs(b, y) = (mask >> (y * spec.n_bonds() + b)) & 1 ? -1 : 1;
    const double p = std::exp(dense_log_born(spec, traj));
    law[record_key(traj)] = p;
    total += p;
  }
  for (auto& [key, p] : law) p /= total;

  for (const bool sweep_mode : {false, true}) {
    sampling::SamplerConfig cfg;
    cfg.sweep_proposals = sweep_mode;
    cfg.flip_sites = false;
    cfg.flip_bonds = true;
    cfg.burn_in = 0;
    cfg.sweeps = 40;
    Trajectory walker = base;
    sampling::metropolis_e_given_m(spec, walker, cfg, 500);
    cfg.sweeps = 1;
    std::map<std::string, int> counts;
    const int n_keep = 4000;
    for (int k = 0; k < n_keep; ++k) {
      sampling::metropolis_e_given_m(spec, walker, cfg, 600 + k);
      ++counts[record_key(walker)];
      CHECK(vortices_of(spec, walker).e_count == 0);
    }
    CHECK((walker.t_signs == 1).all());
    const Chi2Result res = frequency_test(law, counts, n_keep);
    CHECK(res.p_value > 1e-4);
  }
}

TEST_CASE("conditional chain driver composes to the Born class law") {
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 3, SpatialBc::periodic);

  // Gauge-invariant class: bond vortices, flux sector, full site record.
  const auto class_key = [&](const Trajectory& traj) {
    std::string key = vortex_key(spec, traj);
    for (int y = 0; y < spec.L_y; ++y)
      for (int x = 0; x < spec.L_x; ++x)
        key += traj.t_signs(x, y) > 0 ? '+' : '-';
    return key;
  };
  const oracle::OutcomeEnsemble ens = oracle::enumerate_outcomes(spec, 30);
  std::map<std::string, double> law;
  for (std::size_t k = 0; k < ens.trajectories.size(); ++k)
    law[class_key(ens.trajectories[k])] += ens.probabilities[k];

  sampling::SamplerConfig cfg;
  cfg.n_samples = 4000;
  cfg.seed = 19;
  cfg.sweeps = 20;
  cfg.burn_in = 40;
  const std::vector<Trajectory> records = sampling::sample_chain(spec, cfg);
  std::map<std::string, int> counts;
  for (const Trajectory& traj : records) {
    CHECK(std::isfinite(traj.log_born_prob));
    ++counts[class_key(traj)];
  }
  const Chi2Result res = frequency_test(law, counts, cfg.n_samples);
  CHECK(res.p_value > 1e-4);

  // Independent per-sample chains are bit-reproducible for any worker count.
  cfg.n_samples = 40;
  cfg.n_workers = 1;
  const std::vector<Trajectory> one = sampling::sample_chain(spec, cfg);
  cfg.n_workers = 3;
  const std::vector<Trajectory> three = sampling::sample_chain(spec, cfg);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i)
    CHECK(record_key(one[i]) == record_key(three[i]));
}

TEST_CASE("single-walk driver snapshots the joint and deformed targets") {
  // Joint chain over both move families against the full Born law.
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 2, SpatialBc::periodic);
  const oracle::OutcomeEnsemble ens = oracle::enumerate_outcomes(spec, 30);
  std::map<std::string, double> law;
  for (std::size_t k = 0; k < ens.trajectories.size(); ++k)
    law[record_key(ens.trajectories[k])] += ens.probabilities[k];

  sampling::SamplerConfig cfg;
  cfg.n_samples = 6000;
  cfg.seed = 5;
  cfg.sweeps = 3;
  cfg.flip_bonds = true;
  cfg.e_free_init = false;
  sampling::McmcStats stats;
  const std::vector<Trajectory> records =
      sampling::sample_chain(spec, cfg, &stats);
  std::map<std::string, int> counts;
  for (const Trajectory& traj : records) ++counts[record_key(traj)];
  CHECK(frequency_test(law, counts, cfg.n_samples).p_value > 1e-4);
  // burn-in (defaults to `sweeps`) plus one stretch per snapshot, with every
  // site and bond slot proposed once per sweep.
  const std::int64_t slots = (spec.L_x + spec.n_bonds()) * spec.L_y;
  CHECK(stats.proposals == (3 + 6000LL * 3) * slots);

  // Site-frozen walk at eta = infinity stays on the vortex-free record.
  SpecKnobs knobs;
  knobs.p_eta = 0.5;
  const CircuitSpec frozen =
      build_spec(0.364 * M_PI, 2, 2, SpatialBc::periodic, knobs);
  std::map<std::string, double> bond_law;
  double total = 0.0;
  for (int mask = 0; mask < (1 << (frozen.n_bonds() * frozen.L_y)); ++mask) {
    Trajectory traj = all_plus_trajectory(frozen);
    for (int y = 0; y < frozen.L_y; ++y)
      for (int b = 0; b < frozen.n_bonds(); ++b)
        traj.s_signs(b, y) = (mask >> (y * frozen.n_bonds() + b)) & 1 ? -1 : 1;
    const double p = std::exp(dense_log_born(frozen, traj));
    bond_law[record_key(traj)] = p;
    total += p;
  }
  for (auto& [key, p] : bond_law) p /= total;

  cfg = sampling::SamplerConfig{};
  cfg.n_samples = 4000;
  cfg.seed = 23;
  cfg.sweeps = 2;
  cfg.flip_sites = false;
  cfg.flip_bonds = true;
  const std::vector<Trajectory> snaps = sampling::sample_chain(frozen, cfg);
  counts.clear();
  for (const Trajectory& traj : snaps) {
    CHECK((traj.t_signs == 1).all());
    CHECK(vortices_of(frozen, traj).e_count == 0);
    ++counts[record_key(traj)];
  }
  CHECK(frequency_test(bond_law, counts, cfg.n_samples).p_value > 1e-4);
  CHECK(snaps.back().log_born_prob ==
        doctest::Approx(dense_log_born(frozen, snaps.back())).epsilon(1e-8));
}

TEST_CASE("chain driver guard rails") {
  SpecKnobs knobs;
  knobs.p_eta = 0.25;
  const CircuitSpec deformed =
      build_spec(0.3 * M_PI, 2, 2, SpatialBc::periodic, knobs);
  sampling::SamplerConfig cfg;
  CHECK_THROWS_AS(sampling::sample_chain(deformed, cfg),
                  std::invalid_argument);
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 2, SpatialBc::periodic);
  cfg.n_samples = 0;
  CHECK_THROWS_AS(sampling::sample_chain(spec, cfg), std::invalid_argument);
}

TEST_CASE("record entropy estimator agrees with the exact value") {
  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 2, SpatialBc::periodic);
  const oracle::OutcomeEnsemble ens = oracle::enumerate_outcomes(spec, 30);
  double exact = 0.0;
  for (const double p : ens.probabilities)
    if (p > 0.0) exact -= p * std::log(p);

  sampling::SamplerConfig cfg;
  cfg.n_samples = 3000;
  cfg.seed = 14;
  const auto est =
      sampling::shannon_entropy(sampling::sample_sequential(spec, cfg));
  CHECK(std::abs(est.entropy - exact) < 5.0 * est.stderr);
}

TEST_CASE("fugacity map and guard rails") {
  CHECK(sampling::fugacity(0.0) == 0.0);
  CHECK(std::isinf(sampling::fugacity(0.5)));
  CHECK_THROWS_AS(sampling::fugacity(0.6), std::invalid_argument);
  CHECK_THROWS_AS(sampling::fugacity(-0.1), std::invalid_argument);

  const CircuitSpec spec = build_spec(0.3 * M_PI, 2, 3, SpatialBc::periodic);
  Trajectory traj = all_plus_trajectory(spec);
  sampling::SamplerConfig cfg;
  cfg.flip_sites = false;
  cfg.flip_bonds = false;
  CHECK_THROWS_AS(sampling::metropolis_e_given_m(spec, traj, cfg, 1),
                  std::invalid_argument);

  const CircuitSpec proj = build_spec(0.5 * M_PI, 2, 3, SpatialBc::periodic);
  Trajectory pt = all_plus_trajectory(proj);
  sampling::SamplerConfig bond_cfg;
  bond_cfg.flip_bonds = true;
  CHECK_THROWS_AS(sampling::metropolis_e_given_m(proj, pt, bond_cfg, 1),
                  std::invalid_argument);

  // Born-sampled records have target weight equal to their Born weight.
  const Trajectory sample = sampling::sample_sequential_one(spec, 77);
  CHECK(sampling::log_target_weight(spec, sample) ==
        doctest::Approx(sample.log_born_prob).epsilon(1e-9));
}
