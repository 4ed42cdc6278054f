// Copyright 2026 The kngsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kngsynth/quantile_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kngsynth/error.hpp"
#include "kngsynth/log.hpp"

namespace kngsynth {

double CheckLoss(double x, double tau) { return x * (tau - (x <= 0.0 ? 1.0 : 0.0)); }

double CheckObjective(const Matrix& x, const Vector& y, const Vector& beta, double tau) {
  const Vector r = y - x * beta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += CheckLoss(r[i], tau);
  return s;
}

namespace {

// Smoothed check loss: (H_h(r) + (2 tau - 1) r) / 2 with H_h the Huber
// approximation of |r|.
struct Smoothed {
  double tau;
  double h;

  double Loss(double r) const {
    const double a = std::abs(r);
    const double hub = a <= h ? r * r / (2.0 * h) + h / 2.0 : a;
    return 0.5 * (hub + (2.0 * tau - 1.0) * r);
  }
  double Psi(double r) const {
    const double d = std::clamp(r / h, -1.0, 1.0);
    return 0.5 * (d + 2.0 * tau - 1.0);
  }
  double Curvature(double r) const { return std::abs(r) <= h ? 1.0 / (2.0 * h) : 0.0; }

  double Objective(const Vector& r) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += Loss(r[i]);
    return s;
  }
};

void SmoothedNewton(const Matrix& x, const Vector& y, const Smoothed& sm, double ridge,
                    int max_iter, Vector& beta) {
  const Eigen::Index n = x.rows();
  Vector r = y - x * beta;
  double f = sm.Objective(r);
  double lambda = ridge;
  for (int it = 0; it < max_iter; ++it) {
    Vector psi(n);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      psi[i] = sm.Psi(r[i]);
      w[i] = sm.Curvature(r[i]);
    }
    const Vector grad = -x.transpose() * psi;
    if (grad.norm() <= 1e-12 * (1.0 + std::abs(f))) break;
    Matrix hess = x.transpose() * w.asDiagonal() * x;
    const double scale = std::max(hess.diagonal().maxCoeff(), 1e-12);
    Vector step;
    bool improved = false;
    for (int attempt = 0; attempt < 30 && !improved; ++attempt) {
      Matrix reg = hess;
      reg.diagonal().array() += lambda * scale;
      step = -reg.ldlt().solve(grad);
      if (!step.allFinite()) {
        lambda = std::max(lambda * 10.0, 1e-8);
        continue;
      }
      // Backtracking on the damped Newton direction.
      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        const Vector cand = beta + t * step;
        const Vector rc = y - x * cand;
        const double fc = sm.Objective(rc);
        if (fc < f - 1e-4 * t * std::abs(grad.dot(step))) {
          beta = cand;
          r = rc;
          const double drop = f - fc;
          f = fc;
          improved = true;
          lambda = std::max(ridge, lambda * 0.1);
          if (drop <= 1e-15 * (1.0 + std::abs(f))) return;
          break;
        }
        t *= 0.5;
      }
      if (!improved) lambda = std::max(lambda * 10.0, 1e-8);
    }
    if (!improved) return;
    if (step.norm() <= 1e-14 * (1.0 + beta.norm())) return;
  }
}

// Minimizes g(t) = sum_i rho_tau(r_i - t a_i) over t >= 0. Returns the
// smallest minimizer, its slope at 0+, and the index of the row whose kink
// is hit there (-1 when t = 0).
struct LineResult {
  double t = 0.0;
  double slope0 = 0.0;
  Eigen::Index hit = -1;
};

LineResult ExactLineSearch(const Vector& r, const Vector& a, double tau, bool flat_only) {
  const Eigen::Index n = r.size();
  LineResult res;
  double slope = 0.0;
  double mass = 0.0;
  std::vector<std::pair<double, Eigen::Index>> breaks;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    mass += std::abs(a[i]);
    // Sign of the residual just after t = 0.
    const double u = r[i] != 0.0 ? r[i] : -a[i];
    slope += -a[i] * (u > 0.0 ? tau : tau - 1.0);
    if (r[i] != 0.0) {
      const double z = r[i] / a[i];
      if (z > 0.0) breaks.emplace_back(z, i);
    }
  }
  res.slope0 = slope;
  const double tol = 1e-12 * std::max(mass, 1.0);
  if (flat_only ? slope > tol : slope >= -tol) return res;
  std::sort(breaks.begin(), breaks.end());
  for (const auto& [z, i] : breaks) {
    slope += std::abs(a[i]);
    if (flat_only ? slope > tol : slope >= -tol) {
      res.t = z;
      res.hit = i;
      return res;
    }
  }
  // Unbounded descent cannot happen for tau in (0,1) with a full-rank
  // design; a flat ray can, so stop at the last kink.
  if (!breaks.empty()) {
    res.t = breaks.back().first;
    res.hit = breaks.back().second;
  }
  return res;
}

// Picks k rows with the smallest |residual| that form a nonsingular block.
bool ChooseBasis(const Matrix& x, const Vector& r, std::vector<Eigen::Index>& basis) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(r[a]) < std::abs(r[b]); });
  basis.clear();
  Matrix rows(0, k);
  for (Eigen::Index i : order) {
    Matrix cand(rows.rows() + 1, k);
    cand.topRows(rows.rows()) = rows;
    cand.row(rows.rows()) = x.row(i);
    Eigen::FullPivLU<Matrix> lu(cand);
    lu.setThreshold(1e-10);
    if (lu.rank() == cand.rows()) {
      rows = cand;
      basis.push_back(i);
      if (static_cast<Eigen::Index>(basis.size()) == k) return true;
    }
  }
  return false;
}

Matrix BasisRows(const Matrix& x, const std::vector<Eigen::Index>& basis) {
  Matrix b(static_cast<Eigen::Index>(basis.size()), x.cols());
  for (std::size_t j = 0; j < basis.size(); ++j) b.row(static_cast<Eigen::Index>(j)) = x.row(basis[j]);
  return b;
}

// Simplex-style descent over vertices of the exact objective.
void VertexPolish(const Matrix& x, const Vector& y, double tau, Vector& beta) {
  const Eigen::Index k = x.cols();
  std::vector<Eigen::Index> basis;
  Vector r = y - x * beta;
  if (!ChooseBasis(x, r, basis)) return;
  Matrix xb = BasisRows(x, basis);
  Vector yb(k);
  for (Eigen::Index j = 0; j < k; ++j) yb[j] = y[basis[static_cast<std::size_t>(j)]];
  Vector vertex = xb.fullPivLu().solve(yb);
  if (!vertex.allFinite()) return;
  const double start_obj = CheckObjective(x, y, beta, tau);
  Vector best = beta;
  double best_obj = start_obj;

  beta = vertex;
  // Basis rows sit exactly on their kinks; rounding must not move them off.
  auto residuals = [&] {
    r = y - x * beta;
    for (Eigen::Index b : basis) r[b] = 0.0;
  };
  residuals();
  double obj = CheckObjective(x, y, beta, tau);
  int stalled = 0;
  const long max_iter = 20 * x.rows() + 200;
  for (long it = 0; it < max_iter && stalled < 50; ++it) {
    const Matrix inv = xb.fullPivLu().inverse();
    double best_rate = 0.0;
    Vector best_dir;
    Vector best_a;
    Eigen::Index leave = -1;
    for (Eigen::Index j = 0; j < k; ++j) {
      for (double sign : {1.0, -1.0}) {
        // Edge that releases basis row j and keeps the others on their kinks.
        const Vector d = sign * inv.col(j);
        Vector a = x * d;
        for (Eigen::Index m = 0; m < k; ++m) a[basis[static_cast<std::size_t>(m)]] = m == j ? sign : 0.0;
        double slope = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          if (a[i] == 0.0) continue;
          const double u = r[i] != 0.0 ? r[i] : -a[i];
          slope += -a[i] * (u > 0.0 ? tau : tau - 1.0);
        }
        const double rate = slope / d.norm();
        if (rate < best_rate - 1e-12 * (1.0 + a.cwiseAbs().sum() / d.norm())) {
          best_rate = rate;
          best_dir = d;
          best_a = std::move(a);
          leave = j;
        }
      }
    }
    if (leave < 0) break;
    const LineResult ls = ExactLineSearch(r, best_a, tau, false);
    if (ls.hit < 0 || !(ls.t > 0.0)) break;
    const Vector prev = beta;
    const std::vector<Eigen::Index> prev_basis = basis;
    beta += ls.t * best_dir;
    basis[static_cast<std::size_t>(leave)] = ls.hit;
    xb = BasisRows(x, basis);
    Eigen::FullPivLU<Matrix> lu(xb);
    lu.setThreshold(1e-12);
    if (lu.rank() < k) {
      beta = prev;
      basis = prev_basis;
      break;
    }
    // Re-anchor exactly on the new vertex to stop drift.
    for (Eigen::Index j = 0; j < k; ++j) yb[j] = y[basis[static_cast<std::size_t>(j)]];
    const Vector snapped = lu.solve(yb);
    if (snapped.allFinite()) beta = snapped;
    residuals();
    const double next = CheckObjective(x, y, beta, tau);
    if (next > obj) {
      beta = prev;
      basis = prev_basis;
      xb = BasisRows(x, basis);
      break;
    }
    stalled = next < obj - 1e-15 * std::abs(obj) ? 0 : stalled + 1;
    obj = next;
  }
  if (CheckObjective(x, y, beta, tau) > best_obj) beta = best;
}

// Lowers each coordinate while the objective stays flat.
void InfimumSweep(const Matrix& x, const Vector& y, double tau, Vector& beta) {
  const Eigen::Index k = x.cols();
  for (Eigen::Index c = 0; c < k; ++c) {
    const Vector r = y - x * beta;
    const Vector a = -x.col(c);
    const LineResult ls = ExactLineSearch(r, a, tau, true);
    if (ls.hit < 0 || !(ls.t > 0.0)) continue;
    Vector cand = beta;
    cand[c] -= ls.t;
    if (CheckObjective(x, y, cand, tau) <= CheckObjective(x, y, beta, tau)) beta = cand;
  }
}

}  // namespace

QuantileFit FitNonprivate(const Matrix& x, const Vector& y, double tau,
                          const QrSolverOptions& options) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile fit: tau must lie in (0,1)");
  if (x.rows() != y.size()) throw DataError("quantile fit: X and y row counts differ");
  if (x.cols() == 0) throw DataError("quantile fit: empty design");
  if (x.rows() < x.cols()) throw DataError("quantile fit: fewer rows than coefficients");
  if (!x.allFinite() || !y.allFinite()) throw DataError("quantile fit: non-finite input");

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  double ridge = 0.0;
  if (qr.rank() < x.cols()) {
    log::Warning("quantile fit: design matrix is rank deficient (rank " +
                 std::to_string(qr.rank()) + " < " + std::to_string(x.cols()) +
                 "); regularizing with ridge " + std::to_string(options.rank_ridge));
    ridge = options.rank_ridge;
  }

  Vector beta = qr.solve(y);
  if (!beta.allFinite()) beta = Vector::Zero(x.cols());

  std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
  const double scale = Scale(ys);
  const double h_min = options.smoothing * scale;
  for (double h = scale; ; h *= 0.1) {
    h = std::max(h, h_min);
    SmoothedNewton(x, y, Smoothed{tau, h}, ridge, options.max_newton_iterations, beta);
    if (h <= h_min) break;
  }
  if (ridge == 0.0) VertexPolish(x, y, tau, beta);
  InfimumSweep(x, y, tau, beta);
  return QuantileFit{tau, beta};
}

std::vector<Crossing> DetectCrossing(std::span<const QuantileFit> fits, const Matrix& x) {
  for (std::size_t q = 0; q < fits.size(); ++q) {
    if (fits[q].beta.size() != x.cols()) {
      throw DataError("detect crossing: fit at tau " + std::to_string(fits[q].tau) + " has " +
                      std::to_string(fits[q].beta.size()) + " coefficients, X has " +
                      std::to_string(x.cols()) + " columns");
    }
    if (q > 0 && !(fits[q].tau > fits[q - 1].tau)) {
      throw ConfigError("detect crossing: fits must be sorted by increasing tau");
    }
  }
  std::vector<Crossing> out;
  if (fits.size() < 2) return out;
  Matrix pred(x.rows(), static_cast<Eigen::Index>(fits.size()));
  for (std::size_t q = 0; q < fits.size(); ++q) pred.col(static_cast<Eigen::Index>(q)) = x * fits[q].beta;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (std::size_t q = 0; q + 1 < fits.size(); ++q) {
      if (pred(i, static_cast<Eigen::Index>(q)) > pred(i, static_cast<Eigen::Index>(q + 1))) {
        out.push_back({static_cast<std::size_t>(i), fits[q].tau, fits[q + 1].tau});
      }
    }
  }
  return out;
}

}  // namespace kngsynth
