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

#include "emcrit/fss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "emcrit/parallel.hpp"
#include "emcrit/stats.hpp"

namespace emcrit::fss {

namespace {

struct FitRow {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
};

bool all_weighted(const std::vector<FitRow>& rows) {
  return std::all_of(rows.begin(), rows.end(),
                     [](const FitRow& r) { return r.sigma > 0.0; });
}

std::uint64_t rows_hash(const std::vector<FitRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  for (const FitRow& r : rows) out << r.x << ',' << r.y << ',' << r.sigma << ';';
  return fnv1a64(out.str());
}

// y = a + b x weighted least squares with the full parameter covariance.
struct LineFit {
  double a = 0.0;
  double b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov_ab = 0.0;
  double chi2_dof = 0.0;
  bool weighted = false;
  bool ill_conditioned = false;
};

LineFit fit_line(const std::vector<FitRow>& rows, bool through_origin) {
  LineFit fit;
  fit.weighted = all_weighted(rows);
  double sw = 0.0, swx = 0.0, swxx = 0.0, swy = 0.0, swxy = 0.0;
  for (const FitRow& r : rows) {
    const double w = fit.weighted ? 1.0 / (r.sigma * r.sigma) : 1.0;
    sw += w;
    swx += w * r.x;
    swxx += w * r.x * r.x;
    swy += w * r.y;
    swxy += w * r.x * r.y;
  }
  const int n = static_cast<int>(rows.size());
  const int dof = n - (through_origin ? 1 : 2);

  if (through_origin) {
    if (!(swxx > 0.0)) {
      fit.ill_conditioned = true;
      return fit;
    }
    fit.b = swxy / swxx;
    fit.var_b = 1.0 / swxx;
  } else {
    const double det = sw * swxx - swx * swx;
    if (!(det > 1e-12 * sw * swxx) || !(swxx > 0.0)) {
      fit.ill_conditioned = true;
      return fit;
    }
    fit.a = (swxx * swy - swx * swxy) / det;
    fit.b = (sw * swxy - swx * swy) / det;
    fit.var_a = swxx / det;
    fit.var_b = sw / det;
    fit.cov_ab = -swx / det;
  }

  double chi2 = 0.0;
  for (const FitRow& r : rows) {
    const double resid = r.y - fit.a - fit.b * r.x;
    const double w = fit.weighted ? 1.0 / (r.sigma * r.sigma) : 1.0;
    chi2 += w * resid * resid;
  }
  fit.chi2_dof = dof > 0 ? chi2 / dof : 0.0;
  if (!fit.weighted) {
    // Residual-based error scale.
    const double s2 = fit.chi2_dof;
    fit.var_a *= s2;
    fit.var_b *= s2;
    fit.cov_ab *= s2;
  }
  return fit;
}

double chord_regressor(SpatialBc bc, int L_x, int cut) {
  const double chord = std::sin(std::numbers::pi * cut / L_x);
  if (bc == SpatialBc::periodic)
    return std::log(L_x / std::numbers::pi * chord) / 3.0;
  return std::log(2.0 * L_x / std::numbers::pi * chord) / 6.0;
}

bool same_order(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) < 1e-9;
}

// ----------------------------------------------------------------------------
// Collapse machinery.
// ----------------------------------------------------------------------------

struct ScaledPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
  int L = 0;
};

constexpr double kCollapsePenalty = 1e6;

// Mean squared deviation of each point from the local-linear master curve
// interpolated through the points of the other sizes, normalized by the
// combined uncertainty when errors are available.
double collapse_quality(const std::vector<observables::IcPoint>& table,
                        double theta_c, double nu, double bandwidth) {
  std::vector<ScaledPoint> pts(table.size());
  bool weighted = true;
  for (std::size_t i = 0; i < table.size(); ++i) {
    pts[i].x = (table[i].theta - theta_c) * std::pow(table[i].L_x, 1.0 / nu);
    pts[i].y = table[i].ic;
    pts[i].sigma = table[i].stderr;
    pts[i].L = table[i].L_x;
    weighted = weighted && pts[i].sigma > 0.0;
  }

  double spread = 0.0;
  {
    RunningStat xs;
    for (const ScaledPoint& p : pts) xs.push(p.x);
    spread = std::sqrt(xs.variance());
  }
  if (!(spread > 0.0)) return kCollapsePenalty;
  const double h = bandwidth > 0.0
                       ? bandwidth * spread
                       : 0.9 * spread * std::pow(pts.size(), -0.2);

  double total = 0.0;
  int used = 0;
  for (const ScaledPoint& p : pts) {
    double sw = 0.0, swx = 0.0, swxx = 0.0, swy = 0.0, swxy = 0.0;
    int support = 0;
    for (const ScaledPoint& q : pts) {
      if (q.L == p.L) continue;
      const double u = (q.x - p.x) / h;
      if (std::abs(u) > 3.0) continue;
      const double kern = std::exp(-0.5 * u * u);
      const double w = weighted ? kern / (q.sigma * q.sigma) : kern;
      const double dx = q.x - p.x;
      sw += w;
      swx += w * dx;
      swxx += w * dx * dx;
      swy += w * q.y;
      swxy += w * dx * q.y;
      ++support;
    }
    if (support < 2 || !(sw > 0.0)) continue;
    const double det = sw * swxx - swx * swx;
    double y_hat = 0.0, var_hat = 0.0;
    if (det > 1e-12 * sw * swxx) {
      y_hat = (swxx * swy - swx * swxy) / det;
      var_hat = swxx / det;
    } else {
      y_hat = swy / sw;
      var_hat = 1.0 / sw;
    }
    if (weighted) {
      total += (p.y - y_hat) * (p.y - y_hat) / (p.sigma * p.sigma + var_hat);
    } else {
      total += (p.y - y_hat) * (p.y - y_hat);
    }
    ++used;
  }
  if (2 * used < static_cast<int>(pts.size())) return kCollapsePenalty;
  return total / used;
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

struct CollapseParams {
  double theta_c = 0.0;
  double nu = 0.0;
};

CollapseParams decode(const CollapseOptions& opt, double u0, double u1) {
  CollapseParams p;
  p.theta_c =
      opt.theta_c_min + (opt.theta_c_max - opt.theta_c_min) * logistic(u0);
  p.nu = opt.nu_min * std::pow(opt.nu_max / opt.nu_min, logistic(u1));
  return p;
}

// Plain two-dimensional Nelder-Mead in the unconstrained coordinates.
std::array<double, 2> nelder_mead(
    const std::function<double(double, double)>& f, std::array<double, 2> u0,
    double step, int max_iter) {
  std::array<std::array<double, 2>, 3> simplex{
      u0, {u0[0] + step, u0[1]}, {u0[0], u0[1] + step}};
  std::array<double, 3> value{};
  for (int i = 0; i < 3; ++i) value[i] = f(simplex[i][0], simplex[i][1]);

  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[a] < value[b]; });
    const auto& best = simplex[order[0]];
    const auto& worst = simplex[order[2]];
    if (value[order[2]] - value[order[0]] < 1e-12 &&
        std::abs(best[0] - worst[0]) + std::abs(best[1] - worst[1]) < 1e-8)
      break;

    const std::array<double, 2> centroid{
        0.5 * (simplex[order[0]][0] + simplex[order[1]][0]),
        0.5 * (simplex[order[0]][1] + simplex[order[1]][1])};
    auto blend = [&](double t) {
      return std::array<double, 2>{centroid[0] + t * (centroid[0] - worst[0]),
                                   centroid[1] + t * (centroid[1] - worst[1])};
    };

    const auto reflected = blend(1.0);
    const double fr = f(reflected[0], reflected[1]);
    if (fr < value[order[0]]) {
      const auto expanded = blend(2.0);
      const double fe = f(expanded[0], expanded[1]);
      if (fe < fr) {
        simplex[order[2]] = expanded;
        value[order[2]] = fe;
      } else {
        simplex[order[2]] = reflected;
        value[order[2]] = fr;
      }
      continue;
    }
    if (fr < value[order[1]]) {
      simplex[order[2]] = reflected;
      value[order[2]] = fr;
      continue;
    }
    const auto contracted = blend(-0.5);
    const double fc = f(contracted[0], contracted[1]);
    if (fc < value[order[2]]) {
      simplex[order[2]] = contracted;
      value[order[2]] = fc;
      continue;
    }
    for (int k : {order[1], order[2]}) {
      simplex[k] = {0.5 * (simplex[k][0] + simplex[order[0]][0]),
                    0.5 * (simplex[k][1] + simplex[order[0]][1])};
      value[k] = f(simplex[k][0], simplex[k][1]);
    }
  }

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return value[a] < value[b]; });
  return simplex[order[0]];
}

std::array<double, 2> minimize_collapse(
    const std::vector<observables::IcPoint>& table,
    const CollapseOptions& options, const std::array<double, 2>* warm_start) {
  const auto objective = [&](double u0, double u1) {
    const CollapseParams p = decode(options, u0, u1);
    return collapse_quality(table, p.theta_c, p.nu, options.bandwidth);
  };
  if (warm_start != nullptr)
    return nelder_mead(objective, *warm_start, 0.4, 200);

  std::array<double, 2> best{0.0, 0.0};
  double best_value = std::numeric_limits<double>::infinity();
  for (const double u0 : {-1.2, 0.0, 1.2})
    for (const double u1 : {-1.2, 0.0, 1.2}) {
      const auto candidate = nelder_mead(objective, {u0, u1}, 0.8, 250);
      const double value = objective(candidate[0], candidate[1]);
      if (value < best_value) {
        best_value = value;
        best = candidate;
      }
    }
  return best;
}

}  // namespace

json fit_report_json(const FitReport& report) {
  return json{{"estimate", report.estimate},
              {"stderr", report.stderr},
              {"intercept", report.intercept},
              {"intercept_stderr", report.intercept_stderr},
              {"chi2_dof", report.chi2_dof},
              {"points", report.points},
              {"weighted", report.weighted},
              {"ill_conditioned", report.ill_conditioned},
              {"window", report.window},
              {"inputs_hash", hex64(report.inputs_hash)}};
}

FitReport fit_arc(const observables::ArcTable& table,
                  const ArcFitOptions& options) {
  if (options.min_cut < 1)
    throw std::invalid_argument("fit_arc: min_cut must be >= 1");

  int L_x = 0;
  std::vector<std::pair<int, const observables::ArcRow*>> selected;
  for (const observables::ArcRow& row : table.rows) {
    if (!same_order(row.renyi, options.renyi)) continue;
    if (L_x == 0) L_x = row.L_x;
    if (row.L_x != L_x)
      throw std::invalid_argument("fit_arc: mixed system sizes in one arc");
    if (row.cut < options.min_cut || row.cut > L_x - options.min_cut) continue;
    selected.emplace_back(row.cut, &row);
  }

  const observables::ArcRow* midpoint = nullptr;
  if (options.subtract_half) {
    for (auto& [cut, row] : selected)
      if (2 * cut == L_x) midpoint = row;
    if (midpoint == nullptr)
      throw std::invalid_argument("fit_arc: no midpoint row to subtract");
  }

  std::vector<FitRow> rows;
  for (auto& [cut, row] : selected) {
    if (row == midpoint) continue;
    FitRow r;
    r.x = chord_regressor(options.bc, L_x, cut);
    r.y = row->mean;
    r.sigma = row->stderr;
    if (midpoint != nullptr) {
      r.x -= chord_regressor(options.bc, L_x, midpoint->cut);
      r.y -= midpoint->mean;
      r.sigma = std::sqrt(r.sigma * r.sigma +
                          midpoint->stderr * midpoint->stderr);
    }
    rows.push_back(r);
  }
  std::set<double> distinct;
  for (const FitRow& r : rows) distinct.insert(r.x);
  if (static_cast<int>(distinct.size()) < (options.subtract_half ? 4 : 5))
    throw std::invalid_argument("fit_arc: need at least five cut lengths");

  const LineFit line = fit_line(rows, options.subtract_half);
  FitReport report;
  report.estimate = line.b;
  report.stderr = std::sqrt(std::max(line.var_b, 0.0));
  report.intercept = line.a;
  report.intercept_stderr = std::sqrt(std::max(line.var_a, 0.0));
  report.chi2_dof = line.chi2_dof;
  report.points = static_cast<int>(rows.size());
  report.weighted = line.weighted;
  report.ill_conditioned = line.ill_conditioned;
  std::ostringstream window;
  window << "arc L_x=" << L_x << " renyi=" << options.renyi << " cuts "
         << options.min_cut << ".." << L_x - options.min_cut
         << (options.bc == SpatialBc::periodic ? " periodic" : " open")
         << (options.subtract_half ? " subtracted" : "");
  report.window = window.str();
  report.inputs_hash = rows_hash(rows);
  return report;
}

FitReport fit_casimir(const std::vector<transfer::CasimirPoint>& points) {
  std::set<int> widths;
  for (const transfer::CasimirPoint& p : points) widths.insert(p.L_x);
  if (static_cast<int>(widths.size()) < 4)
    throw std::invalid_argument("fit_casimir: need at least four widths");

  std::vector<FitRow> rows;
  for (const transfer::CasimirPoint& p : points) {
    FitRow r;
    r.x = 1.0 / (static_cast<double>(p.L_x) * p.L_x);
    r.y = p.f;
    r.sigma = p.stderr;
    rows.push_back(r);
  }

  const LineFit line = fit_line(rows, false);
  FitReport report;
  // f = f_inf - (pi c / 6) x  with  x = 1 / L^2.
  report.estimate = -6.0 * line.b / std::numbers::pi;
  report.stderr = 6.0 * std::sqrt(std::max(line.var_b, 0.0)) / std::numbers::pi;
  report.intercept = line.a;
  report.intercept_stderr = std::sqrt(std::max(line.var_a, 0.0));
  report.chi2_dof = line.chi2_dof;
  report.points = static_cast<int>(rows.size());
  report.weighted = line.weighted;
  report.ill_conditioned = line.ill_conditioned;
  std::ostringstream window;
  window << "casimir L in {";
  for (auto it = widths.begin(); it != widths.end(); ++it)
    window << (it == widths.begin() ? "" : ",") << *it;
  window << "}";
  report.window = window.str();
  report.inputs_hash = rows_hash(rows);
  return report;
}

RenyiFamilyFit renyi_family_fit(const std::vector<CnPoint>& points) {
  std::set<double> orders;
  for (const CnPoint& p : points)
    orders.insert(std::isinf(p.renyi) ? 0.0 : 1.0 / p.renyi);
  if (static_cast<int>(orders.size()) < 4)
    throw std::invalid_argument("renyi_family_fit: need at least four orders");

  std::vector<FitRow> rows;
  for (const CnPoint& p : points) {
    FitRow r;
    r.x = std::isinf(p.renyi) ? 0.0 : 1.0 / p.renyi;
    r.y = p.c;
    r.sigma = p.stderr;
    rows.push_back(r);
  }

  // c(n) = c_inf + (c_vn - c_inf) / n  is linear in 1/n.
  const LineFit line = fit_line(rows, false);
  RenyiFamilyFit fit;
  fit.c_inf = line.a;
  fit.c_inf_stderr = std::sqrt(std::max(line.var_a, 0.0));
  fit.c_vn = line.a + line.b;
  fit.c_vn_stderr =
      std::sqrt(std::max(line.var_a + line.var_b + 2.0 * line.cov_ab, 0.0));
  fit.chi2_dof = line.chi2_dof;
  fit.weighted = line.weighted;
  fit.ill_conditioned = line.ill_conditioned;
  fit.points = static_cast<int>(rows.size());
  fit.inputs_hash = rows_hash(rows);

  // One-parameter unitary family c^(n) = c (1 + 1/n) / 2.
  double sgg = 0.0, sgy = 0.0;
  for (const FitRow& r : rows) {
    const double g = 0.5 * (1.0 + r.x);
    const double w = fit.weighted ? 1.0 / (r.sigma * r.sigma) : 1.0;
    sgg += w * g * g;
    sgy += w * g * r.y;
  }
  fit.cc_c = sgy / sgg;
  double chi2 = 0.0;
  for (const FitRow& r : rows) {
    const double g = 0.5 * (1.0 + r.x);
    const double w = fit.weighted ? 1.0 / (r.sigma * r.sigma) : 1.0;
    const double resid = r.y - fit.cc_c * g;
    chi2 += w * resid * resid;
  }
  const int dof = static_cast<int>(rows.size()) - 1;
  fit.cc_chi2_dof = dof > 0 ? chi2 / dof : 0.0;
  fit.cc_c_stderr = std::sqrt((fit.weighted ? 1.0 : fit.cc_chi2_dof) / sgg);
  return fit;
}

json renyi_family_json(const RenyiFamilyFit& fit) {
  return json{{"c_vn", fit.c_vn},
              {"c_vn_stderr", fit.c_vn_stderr},
              {"c_inf", fit.c_inf},
              {"c_inf_stderr", fit.c_inf_stderr},
              {"chi2_dof", fit.chi2_dof},
              {"cc_c", fit.cc_c},
              {"cc_c_stderr", fit.cc_c_stderr},
              {"cc_chi2_dof", fit.cc_chi2_dof},
              {"points", fit.points},
              {"weighted", fit.weighted},
              {"ill_conditioned", fit.ill_conditioned},
              {"inputs_hash", hex64(fit.inputs_hash)}};
}

CollapseReport collapse_nu(const std::vector<observables::IcPoint>& table,
                           const CollapseOptions& options) {
  if (!(options.theta_c_min < options.theta_c_max))
    throw std::invalid_argument("collapse_nu: empty theta_c window");
  if (!(options.nu_min > 0.0 && options.nu_min < options.nu_max))
    throw std::invalid_argument("collapse_nu: bad nu bounds");
  std::set<int> sizes;
  std::set<double> angles;
  for (const observables::IcPoint& p : table) {
    sizes.insert(p.L_x);
    angles.insert(p.theta);
  }
  if (static_cast<int>(sizes.size()) < 3)
    throw std::invalid_argument("collapse_nu: need at least three sizes");
  if (static_cast<int>(angles.size()) < 7)
    throw std::invalid_argument("collapse_nu: need at least seven angles");

  const auto best_u = minimize_collapse(table, options, nullptr);
  const CollapseParams best = decode(options, best_u[0], best_u[1]);

  CollapseReport report;
  report.theta_c = best.theta_c;
  report.nu = best.nu;
  report.quality =
      collapse_quality(table, best.theta_c, best.nu, options.bandwidth);
  report.points = static_cast<int>(table.size());
  const double f0 = logistic(best_u[0]);
  const double f1 = logistic(best_u[1]);
  report.degenerate = f0 < 0.005 || f0 > 0.995 || f1 < 0.005 || f1 > 0.995 ||
                      report.quality >= 0.5 * kCollapsePenalty;
  {
    std::ostringstream in;
    in.precision(17);
    for (const observables::IcPoint& p : table)
      in << p.L_x << ',' << p.theta << ',' << p.ic << ',' << p.stderr << ';';
    report.inputs_hash = fnv1a64(in.str());
  }

  const bool can_bootstrap =
      options.n_bootstrap > 0 &&
      std::all_of(table.begin(), table.end(),
                  [](const observables::IcPoint& p) { return p.stderr > 0.0; });
  if (can_bootstrap) {
    std::vector<double> tc(options.n_bootstrap), nu(options.n_bootstrap);
    parallel_for(
        options.n_bootstrap,
        [&](std::size_t r) {
          std::mt19937_64 rng = stream_rng(options.seed, r);
          std::normal_distribution<double> gauss;
          std::vector<observables::IcPoint> replica = table;
          for (observables::IcPoint& p : replica)
            p.ic += p.stderr * gauss(rng);
          const auto u = minimize_collapse(replica, options, &best_u);
          const CollapseParams fit = decode(options, u[0], u[1]);
          tc[r] = fit.theta_c;
          nu[r] = fit.nu;
        },
        options.n_workers);
    RunningStat stat_tc, stat_nu;
    for (int r = 0; r < options.n_bootstrap; ++r) {
      stat_tc.push(tc[r]);
      stat_nu.push(nu[r]);
    }
    report.theta_c_stderr = std::sqrt(stat_tc.variance());
    report.nu_stderr = std::sqrt(stat_nu.variance());
  }
  return report;
}

json collapse_report_json(const CollapseReport& report) {
  return json{{"theta_c", report.theta_c},
              {"theta_c_stderr", report.theta_c_stderr},
              {"nu", report.nu},
              {"nu_stderr", report.nu_stderr},
              {"quality", report.quality},
              {"points", report.points},
              {"degenerate", report.degenerate},
              {"inputs_hash", hex64(report.inputs_hash)}};
}

}  // namespace emcrit::fss
