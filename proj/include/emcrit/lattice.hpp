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
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "emcrit/io.hpp"

namespace emcrit {

// Sign fields are dense (index, time) tables of +-1.
using SignArray = Eigen::Array<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;
using BitArray = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class SpatialBc { periodic, open };
enum class MeasurementMode { born, postselect_plus };

std::string to_string(SpatialBc bc);
std::string to_string(MeasurementMode mode);
SpatialBc bc_from_string(const std::string& s);
MeasurementMode mode_from_string(const std::string& s);

// Geometry, measurement angle, derived couplings, and the one active
// noise/deformation knob of a circuit family.
//
// Column layout, repeated for y = 0 .. L_y-1:
//   1. bond gates exp(s * beta/2 * Z_b Z_{b+1}) on every spatial bond,
//   2. site gates exp(t * beta_prime/2 * X_x) on every site,
// with the site gates of the last column at half strength (beta_prime/4 in
// the exponent), so the network closes symmetrically at the final time.
struct CircuitSpec {
  int L_x = 0;
  int L_y = 0;
  SpatialBc bc = SpatialBc::periodic;
  double theta = 0.0;

  // tanh(beta) = sin(theta), tanh(beta_prime) = cos(theta).
  double beta = 0.0;
  double beta_prime = 0.0;
  // The end points theta = pi/2 (ZZ) and theta = 0 (X) turn the weak gates
  // into exact projectors; flagged instead of storing infinite couplings.
  bool zz_projective = false;
  bool x_projective = false;

  double p_s = 0.0;      // measurement noise strength
  double p_eta = 0.0;    // e-vortex suppression knob
  double p_gamma = 0.0;  // joint e/m suppression knob
  MeasurementMode mode = MeasurementMode::born;

  int n_bonds() const { return bc == SpatialBc::periodic ? L_x : L_x - 1; }
  int n_sites() const { return L_x; }
  bool deformed() const { return p_eta > 0.0 || p_gamma > 0.0; }
};

struct SpecKnobs {
  double p_s = 0.0;
  double p_eta = 0.0;
  double p_gamma = 0.0;
  MeasurementMode mode = MeasurementMode::born;
};

// Validates inputs, derives couplings, and flags the projective end points.
// Throws std::invalid_argument on malformed input (theta outside [0, pi/2],
// L_x < 2, more than one nonzero knob, knobs out of range).
CircuitSpec build_spec(double theta, int L_x, int L_y, SpatialBc bc,
                       const SpecKnobs& knobs = {});

// One full measurement record.  s_signs is n_bonds x L_y, t_signs is
// L_x x L_y; entries are +-1.
struct Trajectory {
  SignArray s_signs;
  SignArray t_signs;
  double log_born_prob = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  // Flux through the initial cap: product of s_signs over column 0
  // (periodic bc; fixed to +1 for open bc, where there is no winding loop).
  int sector_W = +1;
};

Trajectory all_plus_trajectory(const CircuitSpec& spec);
int sector_of(const CircuitSpec& spec, const Trajectory& traj);

// Gauge-invariant defect content.  e lives on sites x time (endpoints of
// negative-t strings); m lives on plaquettes, bonds x (L_y - 1) rings.
struct VortexField {
  BitArray e;
  BitArray m;
  std::int64_t e_count = 0;
  std::int64_t m_count = 0;
};

VortexField vortices_of(const CircuitSpec& spec, const Trajectory& traj);

// Rebuilds the unique sign record with all defect strings routed straight
// toward the final time and the winding sign (if any) carried by bond 0 of
// column 0.  Preserves vortices_of and sector_W exactly.
Trajectory gauge_orbit_canonicalize(const CircuitSpec& spec, const Trajectory& traj);

// Builds the canonical trajectory directly from defect content and sector.
Trajectory trajectory_from_vortices(const CircuitSpec& spec, const VortexField& vortices,
                                    int sector_W);

// Applies a random composition of exact gauge moves: whole-row sign flips of
// the s field (pairs of rows for periodic bc, so the winding product is
// conserved).  Vortex content and sector_W are unchanged.
Trajectory random_gauge_transform(const CircuitSpec& spec, const Trajectory& traj,
                                  std::mt19937_64& rng);

struct SectorSplit {
  std::vector<std::size_t> w_plus;
  std::vector<std::size_t> w_minus;
  bool empty_sector = false;
};

// Partitions trajectory indices by sector_W; exhaustive and disjoint.
SectorSplit sector_split(const CircuitSpec& spec, const std::vector<Trajectory>& ensemble);

// --------------------------------------------------------------------------
// Serialization.  JSON fields: {L_x, L_y, bc, theta, s_signs, t_signs, seed}
// with the sign tables flattened row-major (row = spatial index, column =
// time).  The binary format is documented in detail next to the
// implementation: little-endian header followed by the two int8 tables,
// row-major.
// --------------------------------------------------------------------------

json trajectory_to_json(const CircuitSpec& spec, const Trajectory& traj);
Trajectory trajectory_from_json(const json& j, CircuitSpec* spec_out = nullptr);

void save_trajectory_binary(const std::filesystem::path& path, const CircuitSpec& spec,
                            const Trajectory& traj);
Trajectory load_trajectory_binary(const std::filesystem::path& path,
                                  CircuitSpec* spec_out = nullptr);

}  // namespace emcrit
