#include "pcnarx/sparsereg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcnarx/errors.hpp"

namespace pcnarx {

void RegressionProblem::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw ArgumentError("regression problem needs N >= 1 and P >= 1");
  if (y.size() != A.rows())
    throw ArgumentError("regression problem: y has " + std::to_string(y.size()) +
                        " entries but A has " + std::to_string(A.rows()) + " rows");
  if (!A.allFinite() || !y.allFinite()) throw ArgumentError("regression problem has non-finite entries");
}

RegressionProblem RegressionProblem::restrict(const std::vector<Eigen::Index>& columns) const {
  RegressionProblem sub{Eigen::MatrixXd(A.rows(), static_cast<Eigen::Index>(columns.size())), y};
  for (std::size_t j = 0; j < columns.size(); ++j) sub.A.col(static_cast<Eigen::Index>(j)) = A.col(columns[j]);
  return sub;
}

Eigen::VectorXd ols_fit(const RegressionProblem& prob) {
  prob.validate();
  if (prob.rows() < prob.cols())
    throw ArgumentError("ols_fit: fewer observations (" + std::to_string(prob.rows()) +
                        ") than regressors (" + std::to_string(prob.cols()) + ")");
  Eigen::VectorXd scale = prob.A.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (scale[j] == 0.0) scale[j] = 1.0;
  const Eigen::MatrixXd scaled = prob.A * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  const auto r = qr.matrixQR().diagonal().cwiseAbs();
  const double rcond = r.maxCoeff() > 0.0 ? r.minCoeff() / r.maxCoeff() : 0.0;
  if (!(rcond >= kRcondThreshold)) {
    std::ostringstream msg;
    msg << "ols_fit: information matrix is numerically singular (reciprocal condition estimate "
        << rcond << " < " << kRcondThreshold << ")";
    throw SingularityError(msg.str(), rcond);
  }
  Eigen::VectorXd c = qr.solve(prob.y);
  return c.cwiseQuotient(scale);
}

Eigen::VectorXd leverages(const Eigen::MatrixXd& A) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return q.rowwise().squaredNorm();
}

double loo_error(const RegressionProblem& prob, const Eigen::VectorXd& coefficients) {
  prob.validate();
  if (coefficients.size() != prob.cols()) throw ArgumentError("loo_error: coefficient length mismatch");
  if (prob.rows() <= prob.cols())
    throw DegenerateLeverageError("loo_error: need more observations than regressors");
  const Eigen::VectorXd h = leverages(prob.A);
  const Eigen::VectorXd resid = prob.y - prob.A * coefficients;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h[i] >= 1.0 - kLeverageGuard)
      throw DegenerateLeverageError("loo_error: leverage of observation " + std::to_string(i) +
                                    " is numerically one");
    const double d = resid[i] / (1.0 - h[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(h.size());
}

double response_scale(const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / n;
  const double ms = y.squaredNorm() / n;
  if (var > 1e-28 * ms) return var;
  return ms > 0.0 ? ms : 1.0;
}

std::size_t LarsPath::best_step() const {
  if (steps.empty()) throw FitError("best_step: empty LARS path");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) best = std::min(best, s.relative_loo);
  const double cut = std::max(best, kExactFitLoo);
  for (std::size_t k = 0; k < steps.size(); ++k)
    if (steps[k].relative_loo <= cut) return k;
  return 0;
}

namespace {

/// Thin QR built one column at a time by twice-iterated Gram-Schmidt.
class IncrementalQr {
public:
  IncrementalQr(Eigen::Index rows, Eigen::Index capacity)
      : q_(rows, capacity), r_(Eigen::MatrixXd::Zero(capacity, capacity)) {}

  Eigen::Index size() const { return k_; }

  /// Norm of the component of `col` orthogonal to the current span,
  /// relative to the norm of `col`.
  double orthogonal_fraction(const Eigen::VectorXd& col) const {
    const double n0 = col.norm();
    if (n0 == 0.0) return 0.0;
    Eigen::VectorXd v = col;
    Eigen::VectorXd coef;
    orthogonalize(v, coef);
    return v.norm() / n0;
  }

  void append(const Eigen::VectorXd& col) {
    Eigen::VectorXd v = col;
    Eigen::VectorXd coef;
    orthogonalize(v, coef);
    const double nrm = v.norm();
    r_.col(k_).head(k_) = coef;
    r_(k_, k_) = nrm;
    q_.col(k_) = v / nrm;
    ++k_;
  }

  auto q() const { return q_.leftCols(k_); }
  auto r() const { return r_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>(); }
  Eigen::VectorXd last_column() const { return q_.col(k_ - 1); }

private:
  void orthogonalize(Eigen::VectorXd& v, Eigen::VectorXd& coef) const {
    coef = Eigen::VectorXd::Zero(k_);
    if (k_ == 0) return;
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd c = q_.leftCols(k_).transpose() * v;
      v.noalias() -= q_.leftCols(k_) * c;
      coef += c;
    }
  }

  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
  Eigen::Index k_ = 0;
};

// Columns whose component outside the active span falls below this
// fraction of their norm are treated as linearly dependent and skipped.
constexpr double kDependentColumn = 1e-10;

}  // namespace

LarsPath lars_path(const RegressionProblem& prob, const LarsOptions& options) {
  prob.validate();
  if (options.max_steps == 0) throw ArgumentError("lars_path: max_steps must be >= 1");

  const Eigen::Index n = prob.rows();
  const Eigen::Index p = prob.cols();
  LarsPath path;
  if (prob.y.cwiseAbs().maxCoeff() == 0.0) return path;

  const std::size_t limit = std::min({static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 1)),
                                      static_cast<std::size_t>(p), options.max_steps});

  // Standardized copy used for the selection itself.
  Eigen::MatrixXd xs(n, p);
  std::vector<bool> eligible(static_cast<std::size_t>(p), true);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto col = prob.A.col(j);
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    const double mag = col.cwiseAbs().maxCoeff();
    if (mag == 0.0) {
      eligible[static_cast<std::size_t>(j)] = false;
      xs.col(j).setZero();
      continue;
    }
    if (hi - lo <= 1e-14 * mag) {
      xs.col(j) = col / col.norm();  // intercept: scaled, not centred
    } else {
      Eigen::VectorXd c = col.array() - col.mean();
      const double nrm = c.norm();
      xs.col(j) = c / nrm;
    }
  }

  const double scale = response_scale(prob.y);
  const auto cap = static_cast<Eigen::Index>(limit + 1);
  IncrementalQr qr_sel(n, cap);  // standardized active columns
  IncrementalQr qr_ols(n, cap);  // raw active columns
  Eigen::VectorXd qty(cap);      // Q_ols^T y
  Eigen::VectorXd resid = prob.y;
  Eigen::VectorXd lev = Eigen::VectorXd::Zero(n);

  std::vector<Eigen::Index> active;
  std::vector<bool> is_active(static_cast<std::size_t>(p), false);
  Eigen::VectorXd signs(cap);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd corr = xs.transpose() * prob.y;
  const double c0 = corr.cwiseAbs().maxCoeff();
  double best_rel = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  auto can_enter = [&](Eigen::Index j) {
    return qr_sel.orthogonal_fraction(xs.col(j)) > kDependentColumn &&
           qr_ols.orthogonal_fraction(prob.A.col(j)) > kDependentColumn;
  };

  while (active.size() < limit) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::Index entering = -1;
    Eigen::VectorXd u;
    double gamma = 0.0;

    if (k == 0) {
      // First entry: the column most correlated with y.
      while (true) {
        double cmax = -1.0;
        for (Eigen::Index j = 0; j < p; ++j)
          if (eligible[static_cast<std::size_t>(j)] && std::abs(corr[j]) > cmax) {
            cmax = std::abs(corr[j]);
            entering = j;
          }
        if (entering < 0 || cmax <= 1e-14 * c0) return path;
        if (can_enter(entering)) break;
        eligible[static_cast<std::size_t>(entering)] = false;
        entering = -1;
      }
    } else {
      // Equiangular direction of the active set.
      double cmax = 0.0;
      for (Eigen::Index a : active) cmax = std::max(cmax, std::abs(corr[a]));
      if (cmax <= 1e-14 * c0) break;
      const Eigen::VectorXd s = signs.head(k);
      const Eigen::MatrixXd rk = qr_sel.r();
      Eigen::VectorXd g = rk.transpose().triangularView<Eigen::Lower>().solve(s);
      g = rk.triangularView<Eigen::Upper>().solve(g);
      const double aa = 1.0 / std::sqrt(s.dot(g));
      const Eigen::VectorXd w = aa * g;
      u = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < k; ++i) u.noalias() += w[i] * xs.col(active[static_cast<std::size_t>(i)]);
      const Eigen::VectorXd a = xs.transpose() * u;

      while (true) {
        entering = -1;
        gamma = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < p; ++j) {
          if (!eligible[static_cast<std::size_t>(j)] || is_active[static_cast<std::size_t>(j)]) continue;
          for (double cand : {(cmax - corr[j]) / (aa - a[j]), (cmax + corr[j]) / (aa + a[j])}) {
            if (cand > 1e-15 * (cmax / aa) && cand < gamma) {
              gamma = cand;
              entering = j;
            }
          }
        }
        if (entering < 0) break;
        if (can_enter(entering)) break;
        eligible[static_cast<std::size_t>(entering)] = false;
      }
      if (entering < 0) break;
      gamma = std::min(gamma, cmax / aa);
      mu.noalias() += gamma * u;
      corr = xs.transpose() * (prob.y - mu);
    }

    // Commit the entering column.
    signs[k] = corr[entering] >= 0.0 ? 1.0 : -1.0;
    active.push_back(entering);
    is_active[static_cast<std::size_t>(entering)] = true;
    qr_sel.append(xs.col(entering));
    qr_ols.append(prob.A.col(entering));
    const Eigen::VectorXd qk = qr_ols.last_column();
    qty[k] = qk.dot(prob.y);
    resid.noalias() -= qk * qk.dot(resid);
    lev.array() += qk.array().square();

    LarsStep step;
    step.active = active;
    step.coefficients = qr_ols.r().solve(qty.head(k + 1));
    if (k + 1 < n && lev.maxCoeff() < 1.0 - kLeverageGuard) {
      step.loo = (resid.array() / (1.0 - lev.array())).square().mean();
    } else {
      step.loo = std::numeric_limits<double>::infinity();
    }
    step.relative_loo = step.loo / scale;
    if (step.relative_loo < best_rel && !(best_rel <= kExactFitLoo)) {
      best_rel = step.relative_loo;
      since_best = 0;
    } else {
      ++since_best;
    }
    path.steps.push_back(std::move(step));
    if (options.patience > 0 && since_best >= options.patience) break;
  }
  return path;
}

}  // namespace pcnarx
