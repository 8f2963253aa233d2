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

#include "emcrit/lattice.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "emcrit/stats.hpp"

namespace emcrit {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
constexpr double kProjectiveTol = 1e-12;

void check_sign_table(const SignArray& a, const char* name) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 1 && a(i, j) != -1)
        throw std::invalid_argument(std::string(name) + ": entries must be +-1");
}

}  // namespace

std::string to_string(SpatialBc bc) {
  return bc == SpatialBc::periodic ? "periodic" : "open";
}

std::string to_string(MeasurementMode mode) {
  return mode == MeasurementMode::born ? "born" : "postselect_plus";
}

SpatialBc bc_from_string(const std::string& s) {
  if (s == "periodic") return SpatialBc::periodic;
  if (s == "open") return SpatialBc::open;
  throw std::invalid_argument("unknown boundary condition: " + s);
}

MeasurementMode mode_from_string(const std::string& s) {
  if (s == "born") return MeasurementMode::born;
  if (s == "postselect_plus") return MeasurementMode::postselect_plus;
  throw std::invalid_argument("unknown measurement mode: " + s);
}

CircuitSpec build_spec(double theta, int L_x, int L_y, SpatialBc bc,
                       const SpecKnobs& knobs) {
  if (!(theta >= 0.0 && theta <= kHalfPi + kProjectiveTol))
    throw std::invalid_argument("build_spec: theta must lie in [0, pi/2]");
  if (L_x < 2) throw std::invalid_argument("build_spec: L_x must be >= 2");
  if (L_y < 1) throw std::invalid_argument("build_spec: L_y must be >= 1");

  const int active = (knobs.p_s > 0.0) + (knobs.p_eta > 0.0) + (knobs.p_gamma > 0.0);
  if (active > 1)
    throw std::invalid_argument("build_spec: at most one of p_s, p_eta, p_gamma may be nonzero");
  if (knobs.p_s < 0.0 || knobs.p_s > 0.5)
    throw std::invalid_argument("build_spec: p_s must lie in [0, 1/2]");
  if (knobs.p_eta < 0.0 || knobs.p_eta > 0.5)
    throw std::invalid_argument("build_spec: p_eta must lie in [0, 1/2]");
  if (knobs.p_gamma < 0.0 || knobs.p_gamma >= 0.5)
    throw std::invalid_argument("build_spec: p_gamma must lie in [0, 1/2)");

  CircuitSpec spec;
  spec.L_x = L_x;
  spec.L_y = L_y;
  spec.bc = bc;
  spec.theta = theta;
  spec.p_s = knobs.p_s;
  spec.p_eta = knobs.p_eta;
  spec.p_gamma = knobs.p_gamma;
  spec.mode = knobs.mode;

  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);
  spec.zz_projective = sin_t >= 1.0 - kProjectiveTol;
  spec.x_projective = cos_t >= 1.0 - kProjectiveTol;
  spec.beta = spec.zz_projective ? std::numeric_limits<double>::infinity()
                                 : std::atanh(sin_t);
  spec.beta_prime = spec.x_projective ? std::numeric_limits<double>::infinity()
                                      : std::atanh(cos_t);
  // At the projective corners the dual coupling is zero up to the rounding
  // of sin/cos; snap it so the complementary gates become exact no-ops.
  if (spec.beta < 1e-12) spec.beta = 0.0;
  if (spec.beta_prime < 1e-12) spec.beta_prime = 0.0;
  return spec;
}

Trajectory all_plus_trajectory(const CircuitSpec& spec) {
  Trajectory t;
  t.s_signs = SignArray::Constant(spec.n_bonds(), spec.L_y, 1);
  t.t_signs = SignArray::Constant(spec.L_x, spec.L_y, 1);
  t.sector_W = +1;
  return t;
}

int sector_of(const CircuitSpec& spec, const Trajectory& traj) {
  if (spec.bc == SpatialBc::open) return +1;
  int w = 1;
  for (int b = 0; b < spec.n_bonds(); ++b) w *= traj.s_signs(b, 0);
  return w;
}

VortexField vortices_of(const CircuitSpec& spec, const Trajectory& traj) {
  if (traj.s_signs.rows() != spec.n_bonds() || traj.s_signs.cols() != spec.L_y ||
      traj.t_signs.rows() != spec.L_x || traj.t_signs.cols() != spec.L_y)
    throw std::invalid_argument("vortices_of: trajectory shape does not match spec");
  check_sign_table(traj.s_signs, "s_signs");
  check_sign_table(traj.t_signs, "t_signs");

  VortexField v;
  v.e = BitArray::Zero(spec.L_x, spec.L_y);
  v.m = BitArray::Zero(spec.n_bonds(), std::max(0, spec.L_y - 1));

  // An e defect sits wherever the t string status changes along a site row;
  // before the first column every t string is trivial.
  for (int x = 0; x < spec.L_x; ++x) {
    std::int8_t prev = 1;
    for (int y = 0; y < spec.L_y; ++y) {
      if (traj.t_signs(x, y) != prev) {
        v.e(x, y) = 1;
        ++v.e_count;
      }
      prev = traj.t_signs(x, y);
    }
  }

  // An m defect is a frustrated plaquette: the two bond signs bounding it
  // (same bond, consecutive columns) disagree.
  for (int b = 0; b < spec.n_bonds(); ++b)
    for (int y = 0; y + 1 < spec.L_y; ++y)
      if (traj.s_signs(b, y) != traj.s_signs(b, y + 1)) {
        v.m(b, y) = 1;
        ++v.m_count;
      }

  return v;
}

Trajectory trajectory_from_vortices(const CircuitSpec& spec, const VortexField& vortices,
                                    int sector_W) {
  if (vortices.e.rows() != spec.L_x || vortices.e.cols() != spec.L_y ||
      vortices.m.rows() != spec.n_bonds() ||
      vortices.m.cols() != std::max(0, spec.L_y - 1))
    throw std::invalid_argument("trajectory_from_vortices: field shape mismatch");
  if (sector_W != 1 && sector_W != -1)
    throw std::invalid_argument("trajectory_from_vortices: sector_W must be +-1");
  if (spec.bc == SpatialBc::open && sector_W != +1)
    throw std::invalid_argument("trajectory_from_vortices: open bc has no W = -1 sector");

  Trajectory traj;
  traj.t_signs.resize(spec.L_x, spec.L_y);
  for (int x = 0; x < spec.L_x; ++x) {
    std::int8_t t = 1;
    for (int y = 0; y < spec.L_y; ++y) {
      if (vortices.e(x, y)) t = -t;
      traj.t_signs(x, y) = t;
    }
  }

  traj.s_signs.resize(spec.n_bonds(), spec.L_y);
  for (int b = 0; b < spec.n_bonds(); ++b) {
    std::int8_t s = (b == 0 && spec.bc == SpatialBc::periodic && sector_W == -1) ? -1 : 1;
    traj.s_signs(b, 0) = s;
    for (int y = 1; y < spec.L_y; ++y) {
      if (vortices.m(b, y - 1)) s = -s;
      traj.s_signs(b, y) = s;
    }
  }

  traj.sector_W = spec.bc == SpatialBc::periodic ? sector_W : +1;
  return traj;
}

Trajectory gauge_orbit_canonicalize(const CircuitSpec& spec, const Trajectory& traj) {
  const VortexField v = vortices_of(spec, traj);
  Trajectory canon = trajectory_from_vortices(spec, v, sector_of(spec, traj));
  canon.log_born_prob = traj.log_born_prob;
  canon.seed = traj.seed;
  return canon;
}

Trajectory random_gauge_transform(const CircuitSpec& spec, const Trajectory& traj,
                                  std::mt19937_64& rng) {
  const int nb = spec.n_bonds();
  std::vector<bool> flip(nb, false);
  int parity = 0;
  for (int b = 0; b < nb; ++b) {
    flip[b] = (rng() & 1ull) != 0;
    parity ^= flip[b] ? 1 : 0;
  }
  if (spec.bc == SpatialBc::periodic && parity) {
    // Periodic rows flip in pairs; cancel the odd one out.
    flip[static_cast<std::size_t>(uniform_below(rng, nb))].flip();
  }

  Trajectory out = traj;
  for (int b = 0; b < nb; ++b)
    if (flip[b])
      for (int y = 0; y < spec.L_y; ++y) out.s_signs(b, y) = -out.s_signs(b, y);
  out.sector_W = sector_of(spec, out);
  return out;
}

SectorSplit sector_split(const CircuitSpec& spec, const std::vector<Trajectory>& ensemble) {
  SectorSplit split;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    if (sector_of(spec, ensemble[i]) == +1)
      split.w_plus.push_back(i);
    else
      split.w_minus.push_back(i);
  }
  split.empty_sector =
      !ensemble.empty() && (split.w_plus.empty() || split.w_minus.empty());
  return split;
}

// --------------------------------------------------------------------------
// Serialization
// --------------------------------------------------------------------------

namespace {

std::vector<int> flatten_row_major(const SignArray& a) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.push_back(a(i, j));
  return out;
}

SignArray unflatten_row_major(const std::vector<int>& v, Eigen::Index rows,
                              Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw std::invalid_argument("trajectory table has wrong length");
  SignArray a(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const int s = v[k++];
      if (s != 1 && s != -1) throw std::invalid_argument("trajectory entries must be +-1");
      a(i, j) = static_cast<std::int8_t>(s);
    }
  return a;
}

}  // namespace

json trajectory_to_json(const CircuitSpec& spec, const Trajectory& traj) {
  json j;
  j["L_x"] = spec.L_x;
  j["L_y"] = spec.L_y;
  j["bc"] = to_string(spec.bc);
  j["theta"] = spec.theta;
  j["s_signs"] = flatten_row_major(traj.s_signs);
  j["t_signs"] = flatten_row_major(traj.t_signs);
  j["seed"] = traj.seed;
  return j;
}

Trajectory trajectory_from_json(const json& j, CircuitSpec* spec_out) {
  const int L_x = j.at("L_x").get<int>();
  const int L_y = j.at("L_y").get<int>();
  const SpatialBc bc = bc_from_string(j.at("bc").get<std::string>());
  const double theta = j.at("theta").get<double>();
  CircuitSpec spec = build_spec(theta, L_x, L_y, bc);

  Trajectory traj;
  traj.s_signs = unflatten_row_major(j.at("s_signs").get<std::vector<int>>(),
                                     spec.n_bonds(), L_y);
  traj.t_signs = unflatten_row_major(j.at("t_signs").get<std::vector<int>>(), L_x, L_y);
  traj.seed = j.value("seed", std::uint64_t{0});
  traj.sector_W = sector_of(spec, traj);
  if (spec_out) *spec_out = spec;
  return traj;
}

// Binary layout (all integers little-endian):
//   bytes 0-3   magic "EMCT"
//   bytes 4-5   uint16 format version (1)
//   byte  6     uint8  bc (0 = periodic, 1 = open)
//   byte  7     reserved (0)
//   bytes 8-11  uint32 L_x
//   bytes 12-15 uint32 L_y
//   bytes 16-23 float64 theta (IEEE 754)
//   bytes 24-31 uint64 seed
//   then n_bonds*L_y int8 s_signs, row-major (bond index outer, time inner)
//   then L_x*L_y    int8 t_signs, row-major (site index outer, time inner)

void save_trajectory_binary(const std::filesystem::path& path, const CircuitSpec& spec,
                            const Trajectory& traj) {
  static_assert(std::endian::native == std::endian::little,
                "binary trajectory format assumes a little-endian host");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());

  const char magic[4] = {'E', 'M', 'C', 'T'};
  const std::uint16_t version = 1;
  const std::uint8_t bc = spec.bc == SpatialBc::periodic ? 0 : 1;
  const std::uint8_t pad = 0;
  const std::uint32_t lx = static_cast<std::uint32_t>(spec.L_x);
  const std::uint32_t ly = static_cast<std::uint32_t>(spec.L_y);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&version), 2);
  out.write(reinterpret_cast<const char*>(&bc), 1);
  out.write(reinterpret_cast<const char*>(&pad), 1);
  out.write(reinterpret_cast<const char*>(&lx), 4);
  out.write(reinterpret_cast<const char*>(&ly), 4);
  out.write(reinterpret_cast<const char*>(&spec.theta), 8);
  out.write(reinterpret_cast<const char*>(&traj.seed), 8);

  for (Eigen::Index i = 0; i < traj.s_signs.rows(); ++i)
    for (Eigen::Index j = 0; j < traj.s_signs.cols(); ++j)
      out.write(reinterpret_cast<const char*>(&traj.s_signs(i, j)), 1);
  for (Eigen::Index i = 0; i < traj.t_signs.rows(); ++i)
    for (Eigen::Index j = 0; j < traj.t_signs.cols(); ++j)
      out.write(reinterpret_cast<const char*>(&traj.t_signs(i, j)), 1);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trajectory load_trajectory_binary(const std::filesystem::path& path,
                                  CircuitSpec* spec_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());

  char magic[4];
  std::uint16_t version;
  std::uint8_t bc_byte, pad;
  std::uint32_t lx, ly;
  double theta;
  std::uint64_t seed;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 2);
  in.read(reinterpret_cast<char*>(&bc_byte), 1);
  in.read(reinterpret_cast<char*>(&pad), 1);
  in.read(reinterpret_cast<char*>(&lx), 4);
  in.read(reinterpret_cast<char*>(&ly), 4);
  in.read(reinterpret_cast<char*>(&theta), 8);
  in.read(reinterpret_cast<char*>(&seed), 8);
  if (!in || std::memcmp(magic, "EMCT", 4) != 0)
    throw std::runtime_error("not a trajectory file: " + path.string());
  if (version != 1) throw std::runtime_error("unsupported trajectory format version");
  if (bc_byte > 1) throw std::runtime_error("corrupt trajectory header");

  const CircuitSpec spec =
      build_spec(theta, static_cast<int>(lx), static_cast<int>(ly),
                 bc_byte == 0 ? SpatialBc::periodic : SpatialBc::open);

  Trajectory traj;
  traj.seed = seed;
  traj.s_signs.resize(spec.n_bonds(), spec.L_y);
  traj.t_signs.resize(spec.L_x, spec.L_y);
  for (Eigen::Index i = 0; i < traj.s_signs.rows(); ++i)
    for (Eigen::Index j = 0; j < traj.s_signs.cols(); ++j)
      in.read(reinterpret_cast<char*>(&traj.s_signs(i, j)), 1);
  for (Eigen::Index i = 0; i < traj.t_signs.rows(); ++i)
    for (Eigen::Index j = 0; j < traj.t_signs.cols(); ++j)
      in.read(reinterpret_cast<char*>(&traj.t_signs(i, j)), 1);
  if (!in) throw std::runtime_error("truncated trajectory file: " + path.string());
  check_sign_table(traj.s_signs, "s_signs");
  check_sign_table(traj.t_signs, "t_signs");
  traj.sector_W = sector_of(spec, traj);
  if (spec_out) *spec_out = spec;
  return traj;
}

}  // namespace emcrit
