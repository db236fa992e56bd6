#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pcnarx/errors.hpp"
#include "pcnarx/sparsereg.hpp"

using namespace pcnarx;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = g(rng);
  return A;
}

Eigen::VectorXd normal_equations(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  return (A.transpose() * A).inverse() * (A.transpose() * y);
}

// Leave-one-out by N explicit refits.
double brute_force_loo(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  const Eigen::Index n = A.rows();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd Ai(n - 1, A.cols());
    Eigen::VectorXd yi(n - 1);
    for (Eigen::Index r = 0, k = 0; r < n; ++r)
      if (r != i) {
        Ai.row(k) = A.row(r);
        yi[k++] = y[r];
      }
    const Eigen::VectorXd c = normal_equations(Ai, yi);
    s += std::pow(y[i] - A.row(i).dot(c), 2);
  }
  return s / static_cast<double>(n);
}

// Zero-mean orthonormal columns, so standardization leaves them unchanged.
Eigen::MatrixXd centred_orthonormal(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  Eigen::MatrixXd A = gaussian_matrix(n, p, rng);
  A.rowwise() -= A.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
}

}  // namespace

TEST_CASE("ols on diagonal designs") {
  RegressionProblem p1{Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3)};
  CHECK((ols_fit(p1) - Eigen::Vector3d(1, 2, 3)).norm() < 1e-14);
  Eigen::Matrix2d D;
  D << 1, 0, 0, 2;
  RegressionProblem p2{D, Eigen::Vector2d(1, 2)};
  CHECK((ols_fit(p2) - Eigen::Vector2d(1, 1)).norm() < 1e-14);
}

TEST_CASE("ols matches the normal-equations oracle and leaves orthogonal residuals") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    RegressionProblem prob{gaussian_matrix(50, 5, rng), gaussian_matrix(50, 1, rng).col(0)};
    const Eigen::VectorXd c = ols_fit(prob);
    const Eigen::VectorXd ref = normal_equations(prob.A, prob.y);
    CHECK((c - ref).norm() <= 1e-10 * ref.norm());
    CHECK((prob.A.transpose() * (prob.y - prob.A * c)).cwiseAbs().maxCoeff() < 1e-8 * prob.y.norm());
  }
}

TEST_CASE("ols error handling") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd A = gaussian_matrix(20, 3, rng);
  A.col(2) = A.col(0) - 2.0 * A.col(1);
  RegressionProblem prob{A, gaussian_matrix(20, 1, rng).col(0)};
  CHECK_THROWS_AS(ols_fit(prob), SingularityError);
  try {
    ols_fit(prob);
  } catch (const SingularityError& e) {
    CHECK(e.rcond() < kRcondThreshold);
  }
  RegressionProblem wide{gaussian_matrix(2, 3, rng), Eigen::Vector2d(1, 2)};
  CHECK_THROWS_AS(ols_fit(wide), ArgumentError);
  RegressionProblem bad{Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, NAN, 2)};
  CHECK_THROWS_AS(ols_fit(bad), ArgumentError);
}

TEST_CASE("LOO shortcut equals explicit refits") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nd(10, 30), pd(1, 8);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = nd(rng), p = std::min(pd(rng), n - 2);
    RegressionProblem prob{gaussian_matrix(n, p, rng), gaussian_matrix(n, 1, rng).col(0)};
    const double loo = loo_error(prob, ols_fit(prob));
    CHECK(loo == doctest::Approx(brute_force_loo(prob.A, prob.y)).epsilon(1e-8));
  }
}

TEST_CASE("leverage and LOO identities") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd A = gaussian_matrix(10, 3, rng);
  CHECK(leverages(A).sum() == doctest::Approx(3.0).epsilon(1e-10));
  RegressionProblem exact{A, A * Eigen::Vector3d(1.0, -2.0, 0.5)};
  CHECK(loo_error(exact, ols_fit(exact)) < 1e-24);
  RegressionProblem square{gaussian_matrix(3, 3, rng), Eigen::Vector3d(1, 2, 3)};
  CHECK_THROWS_AS(loo_error(square, ols_fit(square)), DegenerateLeverageError);
  // an observation that alone determines a coefficient has leverage 1
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(5, 2);
  B.col(0).setOnes();
  B(4, 1) = 1.0;
  RegressionProblem lever{B, Eigen::VectorXd::LinSpaced(5, 0, 1)};
  CHECK_THROWS_AS(loo_error(lever, ols_fit(lever)), DegenerateLeverageError);
}

TEST_CASE("LARS on orthogonal designs enters columns by descending |A^T y|") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd A = centred_orthonormal(40, 6, rng);
    const Eigen::VectorXd y = gaussian_matrix(40, 1, rng).col(0);
    const LarsPath path = lars_path({A, y});
    REQUIRE(path.steps.size() == 6);
    const Eigen::VectorXd c = (A.transpose() * y).cwiseAbs();
    std::vector<Eigen::Index> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return c[a] > c[b]; });
    CHECK(path.steps.back().active == order);
    for (std::size_t s = 0; s < path.steps.size(); ++s) CHECK(path.steps[s].active.size() == s + 1);
  }
}

TEST_CASE("LARS steps are OLS refits and the full path ends at OLS") {
  std::mt19937_64 rng(6);
  RegressionProblem prob{gaussian_matrix(30, 7, rng), gaussian_matrix(30, 1, rng).col(0)};
  const LarsPath path = lars_path(prob);
  REQUIRE(path.steps.size() == 7);
  for (const auto& st : path.steps) {
    const RegressionProblem sub = prob.restrict(st.active);
    const Eigen::VectorXd ref = normal_equations(sub.A, sub.y);
    CHECK((st.coefficients - ref).norm() <= 1e-10 * ref.norm());
    CHECK(st.loo == doctest::Approx(brute_force_loo(sub.A, sub.y)).epsilon(1e-8));
    CHECK(st.relative_loo == doctest::Approx(st.loo / response_scale(prob.y)).epsilon(1e-14));
  }
  // full path endpoint mapped back to column order equals direct OLS
  Eigen::VectorXd full = Eigen::VectorXd::Zero(7);
  for (std::size_t i = 0; i < 7; ++i) full[path.steps.back().active[i]] = path.steps.back().coefficients[i];
  const Eigen::VectorXd ols = ols_fit(prob);
  CHECK((full - ols).norm() <= 1e-10 * ols.norm());
}

TEST_CASE("LARS edge cases") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd a = gaussian_matrix(12, 1, rng);
  RegressionProblem one{a, 2.0 * a.col(0) + 0.1 * gaussian_matrix(12, 1, rng).col(0)};
  const LarsPath p1 = lars_path(one);
  REQUIRE(p1.steps.size() == 1);
  CHECK(p1.steps[0].coefficients[0] == doctest::Approx(ols_fit(one)[0]).epsilon(1e-12));

  RegressionProblem zero{gaussian_matrix(10, 3, rng), Eigen::VectorXd::Zero(10)};
  CHECK(lars_path(zero).empty());
  LarsOptions none;
  none.max_steps = 0;
  CHECK_THROWS_AS(lars_path(one, none), ArgumentError);

  // path length bounded by N - 1
  RegressionProblem wide{gaussian_matrix(5, 9, rng), gaussian_matrix(5, 1, rng).col(0)};
  CHECK(lars_path(wide).steps.size() <= 4);
  LarsOptions two;
  two.max_steps = 2;
  CHECK(lars_path(wide, two).steps.size() == 2);
}

TEST_CASE("LARS: scaling y scales coefficients and keeps the entry order") {
  std::mt19937_64 rng(8);
  RegressionProblem prob{gaussian_matrix(25, 6, rng), gaussian_matrix(25, 1, rng).col(0)};
  RegressionProblem scaled{prob.A, -3.5 * prob.y};
  const auto a = lars_path(prob), b = lars_path(scaled);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t s = 0; s < a.steps.size(); ++s) {
    CHECK(a.steps[s].active == b.steps[s].active);
    CHECK((b.steps[s].coefficients + 3.5 * a.steps[s].coefficients).norm() <
          1e-10 * b.steps[s].coefficients.norm());
  }
  CHECK(a.best_step() == b.best_step());
  CHECK(lars_path(prob).best_step() == a.best_step());
}

TEST_CASE("LARS recovers a sparse support with the intercept") {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd A = gaussian_matrix(60, 10, rng);
  A.col(0).setOnes();
  const Eigen::VectorXd y = 1.5 * A.col(0) + 2.0 * A.col(3) - 1.0 * A.col(7);
  const LarsPath path = lars_path({A, y});
  const auto& best = path.steps[path.best_step()];
  std::vector<Eigen::Index> support = best.active;
  std::sort(support.begin(), support.end());
  CHECK(support == std::vector<Eigen::Index>{0, 3, 7});
  CHECK(best.relative_loo <= kExactFitLoo);
}
