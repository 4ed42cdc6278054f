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

#include "kngsynth/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "kngsynth/error.hpp"
#include "kngsynth/seeding.hpp"

namespace kngsynth {

std::string Penalty::ToString() const {
  switch (kind) {
    case PenaltyKind::kNone:
      return "none";
    case PenaltyKind::kRidge:
      return "ridge(" + FormatDouble(lambda) + ")";
    case PenaltyKind::kLasso:
      return "lasso(" + FormatDouble(lambda) + ")";
  }
  return "unknown";
}

GlmFit FitOls(const Matrix& x, const Vector& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (y.size() != n) throw DataError("ols: X and y row counts differ");
  if (n <= k) throw DataError("ols: need more rows than coefficients");
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < k) {
    throw DataError("ols: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(k) + ")");
  }
  GlmFit fit;
  fit.coefficients = qr.solve(y);
  const Vector resid = y - x * fit.coefficients;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - k);
  const Matrix xtx_inv = (x.transpose() * x).ldlt().solve(Matrix::Identity(k, k));
  fit.standard_errors = (sigma2 * xtx_inv.diagonal().array()).max(0.0).sqrt();
  fit.converged = fit.coefficients.allFinite();
  fit.iterations = 1;
  return fit;
}

namespace {

double Sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double Softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

void CheckLabels(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw DataError("logistic: X and y row counts differ");
  if (x.rows() == 0 || x.cols() == 0) throw DataError("logistic: empty design");
  bool has0 = false;
  bool has1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) {
      has0 = true;
    } else if (y[i] == 1.0) {
      has1 = true;
    } else {
      throw DataError("logistic: labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) throw DataError("logistic: labels contain a single class");
}

double PenaltyValue(const Vector& beta, const Penalty& p) {
  if (p.kind == PenaltyKind::kNone || beta.size() <= 1) return 0.0;
  const auto tail = beta.tail(beta.size() - 1);
  return p.kind == PenaltyKind::kRidge ? p.lambda * 0.5 * tail.squaredNorm()
                                       : p.lambda * tail.cwiseAbs().sum();
}

double PenalizedObjective(const Matrix& x, const Vector& y, const Vector& beta, const Penalty& p) {
  return -LogisticLogLik(x, y, beta) / static_cast<double>(x.rows()) + PenaltyValue(beta, p);
}

GlmFit Irls(const Matrix& x, const Vector& y, const LogisticOptions& opt) {
  const Eigen::Index k = x.cols();
  const double n = static_cast<double>(x.rows());
  GlmFit fit;
  Vector beta = Vector::Zero(k);
  const double ybar = y.mean();
  beta[0] = std::log(ybar / (1.0 - ybar));
  double ll = LogisticLogLik(x, y, beta);
  // Tolerance on the mean score, so it does not tighten with n.
  auto small = [&](const Vector& g) { return g.norm() / n <= opt.gradient_tolerance; };
  bool separated = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Vector p = PredictProbability(x, beta);
    const Vector grad = x.transpose() * (y - p);
    if (small(grad)) {
      fit.converged = true;
      break;
    }
    const Vector w = (p.array() * (1.0 - p.array())).max(1e-300);
    const Matrix h = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Matrix> ldlt(h);
    Vector step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) break;
    // Step halving keeps the log-likelihood non-decreasing up to rounding.
    const double slack = 1e-12 * std::max(1.0, std::abs(ll));
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Vector cand = beta + t * step;
      const double cl = LogisticLogLik(x, y, cand);
      if (cl >= ll - slack) {
        beta = cand;
        ll = std::max(ll, cl);
        moved = true;
        break;
      }
      t *= 0.5;
    }
    ++fit.iterations;
    fit.loglik_path.push_back(ll);
    if (!moved) break;
    // Separation: fitted probabilities saturate while coefficients run off.
    if (beta.cwiseAbs().maxCoeff() > 1e3 || ll > -1e-8) {
      separated = true;
      break;
    }
  }
  if (!separated) {
    separated = ((y - PredictProbability(x, beta)).array().abs() < 1e-6).all();
  }
  if (!fit.converged) fit.converged = small(LogisticGradient(x, y, beta)) && beta.allFinite();
  if (separated) fit.converged = false;
  fit.coefficients = beta;
  return fit;
}

double SoftThreshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

// Proximal Newton: quadratic approximation at the current point, solved by
// coordinate descent, then a backtracking step on the penalized objective.
GlmFit PenalizedCd(const Matrix& x, const Vector& y, const Penalty& pen,
                   const LogisticOptions& opt) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  GlmFit fit;
  fit.penalty = pen;
  Vector beta = Vector::Zero(k);
  const double ybar = y.mean();
  beta[0] = std::log(ybar / (1.0 - ybar));
  double obj = PenalizedObjective(x, y, beta, pen);
  for (int outer = 0; outer < opt.max_iterations; ++outer) {
    ++fit.iterations;
    const Vector eta = x * beta;
    Vector w(n);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = Sigmoid(eta[i]);
      w[i] = std::max(p * (1.0 - p), 1e-5);
      z[i] = eta[i] + (y[i] - p) / w[i];
    }
    Vector nb = beta;
    Vector r = z - x * nb;  // working residual
    Vector denom(k);
    for (Eigen::Index j = 0; j < k; ++j) denom[j] = inv_n * (w.array() * x.col(j).array().square()).sum();
    for (int sweep = 0; sweep < opt.max_cd_sweeps; ++sweep) {
      double max_move = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (denom[j] <= 0.0) continue;
        const double num = inv_n * (w.array() * x.col(j).array() * r.array()).sum() + denom[j] * nb[j];
        double next;
        if (j == 0 || pen.kind == PenaltyKind::kNone) {
          next = num / denom[j];
        } else if (pen.kind == PenaltyKind::kRidge) {
          next = num / (denom[j] + pen.lambda);
        } else {
          next = SoftThreshold(num, pen.lambda) / denom[j];
        }
        const double d = next - nb[j];
        if (d != 0.0) {
          r -= d * x.col(j);
          nb[j] = next;
          max_move = std::max(max_move, std::abs(d) * std::sqrt(denom[j]));
        }
      }
      if (max_move <= opt.cd_tolerance) break;
    }
    const Vector dir = nb - beta;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Vector cand = beta + t * dir;
      const double co = PenalizedObjective(x, y, cand, pen);
      if (co <= obj) {
        const double drop = obj - co;
        beta = cand;
        obj = co;
        moved = true;
        if (drop <= 1e-14 * (1.0 + std::abs(obj)) && t * dir.cwiseAbs().maxCoeff() <= 1e-9) {
          fit.converged = true;
        }
        break;
      }
      t *= 0.5;
    }
    if (!moved || dir.cwiseAbs().maxCoeff() <= 1e-10) {
      fit.converged = true;
      break;
    }
    if (fit.converged) break;
  }
  fit.converged = fit.converged && beta.allFinite();
  fit.coefficients = beta;
  return fit;
}

}  // namespace

Vector PredictProbability(const Matrix& x, const Vector& beta) {
  const Vector eta = x * beta;
  Vector p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = Sigmoid(eta[i]);
  return p;
}

double LogisticLogLik(const Matrix& x, const Vector& y, const Vector& beta) {
  const Vector eta = x * beta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += y[i] * eta[i] - Softplus(eta[i]);
  return s;
}

Vector LogisticGradient(const Matrix& x, const Vector& y, const Vector& beta) {
  return x.transpose() * (y - PredictProbability(x, beta));
}

GlmFit FitLogistic(const Matrix& x, const Vector& y, Penalty penalty,
                   const LogisticOptions& options) {
  CheckLabels(x, y);
  if (penalty.kind != PenaltyKind::kNone && !(penalty.lambda >= 0.0)) {
    throw ConfigError("logistic: penalty lambda must be >= 0");
  }
  if (penalty.kind == PenaltyKind::kNone) return Irls(x, y, options);
  return PenalizedCd(x, y, penalty, options);
}

GlmFit FitClassifierWithFallback(const Matrix& x, const Vector& y, std::uint64_t seed) {
  GlmFit plain = FitLogistic(x, y);
  if (plain.converged) return plain;

  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  const Vector centered = y.array() - y.mean();
  double lambda_max = 0.0;
  for (Eigen::Index j = 1; j < k; ++j) {
    lambda_max = std::max(lambda_max, std::abs(x.col(j).dot(centered)) / static_cast<double>(n));
  }
  if (!(lambda_max > 0.0)) lambda_max = 1.0;
  std::vector<double> grid(10);
  for (int g = 0; g < 10; ++g) grid[static_cast<std::size_t>(g)] = lambda_max * std::pow(1e-4, g / 9.0);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = MakeRng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) fold[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % 5);

  auto subset = [&](int f, bool held) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((fold[static_cast<std::size_t>(i)] == f) == held) rows.push_back(i);
    }
    Matrix xs(static_cast<Eigen::Index>(rows.size()), k);
    Vector ys(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
      ys[static_cast<Eigen::Index>(r)] = y[rows[r]];
    }
    return std::pair{xs, ys};
  };

  double best_dev = std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  for (double lambda : grid) {
    double dev = 0.0;
    for (int f = 0; f < 5; ++f) {
      auto [xt, yt] = subset(f, false);
      auto [xv, yv] = subset(f, true);
      if (yt.minCoeff() == yt.maxCoeff()) continue;
      const GlmFit g = PenalizedCd(xt, yt, Penalty::Lasso(lambda), {});
      dev += -2.0 * LogisticLogLik(xv, yv, g.coefficients);
    }
    if (dev < best_dev) {
      best_dev = dev;
      best_lambda = lambda;
    }
  }
  return PenalizedCd(x, y, Penalty::Lasso(best_lambda), {});
}

}  // namespace kngsynth
