#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "pcnarx/errors.hpp"
#include "pcnarx/orthopoly.hpp"
#include "pcnarx/probspace.hpp"

using namespace pcnarx;

namespace {

// Explicit Legendre polynomial from Bonnet's formula, unnormalized.
double legendre_p(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Orthonormal values by the textbook recurrences, independent of the library.
std::vector<double> orthonormal_values(PolyFamily fam, int n, double x) {
  std::vector<double> p(static_cast<std::size_t>(n) + 1);
  if (fam == PolyFamily::hermite) {
    // He_{k+1} = x He_k - k He_{k-1}, psi_k = He_k / sqrt(k!)
    double h0 = 1.0, h1 = x, fact = 1.0;
    p[0] = 1.0;
    if (n >= 1) p[1] = x;
    for (int k = 1; k < n; ++k) {
      const double h2 = x * h1 - k * h0;
      fact *= (k + 1);
      p[k + 1] = h2 / std::sqrt(fact);
      h0 = h1;
      h1 = h2;
    }
  } else {
    for (int k = 0; k <= n; ++k) p[k] = std::sqrt(2.0 * k + 1.0) * legendre_p(k, x);
  }
  return p;
}

// Gauss rule of the family's probability measure: nodes from the Jacobi
// matrix, weights from the Christoffel function.
void gauss_rule(PolyFamily fam, int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = fam == PolyFamily::hermite ? std::sqrt(static_cast<double>(k))
                                                : k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto p = orthonormal_values(fam, n - 1, nodes[i]);
    double s = 0.0;
    for (double v : p) s += v * v;
    weights[i] = 1.0 / s;
  }
}

}  // namespace

TEST_CASE("univariate values") {
  for (auto fam : {PolyFamily::legendre, PolyFamily::hermite}) CHECK(eval_univariate(fam, 0, 0.37) == 1.0);
  CHECK(eval_univariate(PolyFamily::legendre, 1, 0.5) == doctest::Approx(std::sqrt(3.0) * 0.5).epsilon(1e-15));
  CHECK(std::abs(eval_univariate(PolyFamily::hermite, 2, 1.0)) < 1e-15);
  CHECK(eval_univariate(PolyFamily::hermite, 3, 2.0) == doctest::Approx((8.0 - 6.0) / std::sqrt(6.0)).epsilon(1e-14));
  for (int n = 0; n <= 20; ++n)
    for (double x : {-0.9, -0.2, 0.45, 1.0})
      CHECK(eval_univariate(PolyFamily::legendre, n, x) ==
            doctest::Approx(std::sqrt(2.0 * n + 1.0) * legendre_p(n, x)).epsilon(1e-12));
  double all[8];
  eval_univariate_all(PolyFamily::hermite, 7, 0.3, all);
  for (int n = 0; n <= 7; ++n) CHECK(all[n] == eval_univariate(PolyFamily::hermite, n, 0.3));
}

TEST_CASE("Gauss quadrature orthonormality up to degree 20") {
  for (auto fam : {PolyFamily::legendre, PolyFamily::hermite}) {
    Eigen::VectorXd x, w;
    gauss_rule(fam, 30, x, w);
    double worst = 0.0;
    for (int m = 0; m <= 20; ++m)
      for (int n = 0; n <= 20; ++n) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
          s += w[i] * eval_univariate(fam, m, x[i]) * eval_univariate(fam, n, x[i]);
        worst = std::max(worst, std::abs(s - (m == n ? 1.0 : 0.0)));
      }
    CAPTURE(to_string(fam));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("multivariate products") {
  BasisFamily two{{PolyFamily::legendre, PolyFamily::legendre}};
  Eigen::Vector2d u(0.5, 0.5);
  CHECK(eval_multivariate(two, {0, 0}, u) == 1.0);
  CHECK(eval_multivariate(two, {1, 1}, u) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(eval_multivariate(two, {1, 1, 0}, u), ArgumentError);

  // Monte Carlo estimate of E[psi_a psi_b] on a mixed basis
  BasisFamily mixed{{PolyFamily::legendre, PolyFamily::hermite}};
  const auto set = generate_multi_indices(2, 2, 1.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  const int n = 100000;
  Eigen::MatrixXd pts(n, 2);
  for (int i = 0; i < n; ++i) pts.row(i) << unif(rng), gauss(rng);
  const Eigen::MatrixXd A = information_matrix(mixed, set.indices, pts);
  for (Eigen::Index a = 0; a < A.cols(); ++a)
    for (Eigen::Index b = a; b < A.cols(); ++b) {
      const Eigen::ArrayXd prod = A.col(a).array() * A.col(b).array();
      const double mean = prod.mean();
      const double sd = std::sqrt((prod - mean).square().sum() / (n - 1));
      CHECK(std::abs(mean - (a == b ? 1.0 : 0.0)) <= 4.0 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("multi-index sets") {
  auto s = generate_multi_indices(2, 2, 1.0, 2);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(s.indices == expected);

  s = generate_multi_indices(2, 2, 0.5, 2);
  CHECK(s.size() == 5);
  CHECK(std::find(s.indices.begin(), s.indices.end(), MultiIndex{1, 1}) == s.indices.end());

  CHECK(generate_multi_indices(3, 2, 1.0, 1).size() == 7);
  CHECK_THROWS_AS(generate_multi_indices(2, 2, 0.0), ArgumentError);
  CHECK_THROWS_AS(generate_multi_indices(2, 2, 1.5), ArgumentError);

  CHECK(q_norm({1, 1}, 0.5) == doctest::Approx(4.0));
  CHECK(index_rank({0, 3, 0, 1}) == 2);

  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return static_cast<std::size_t>(std::llround(r));
  };
  for (std::size_t M : {1, 2, 4, 7})
    for (int p : {0, 1, 3, 5}) CHECK(generate_multi_indices(M, p, 1.0).size() == binom(int(M) + p, p));
}

TEST_CASE("multi-index sets: brute-force membership, order and monotonicity") {
  const std::size_t M = 3;
  for (int p : {2, 4})
    for (double q : {0.4, 0.75, 1.0})
      for (int r : {1, 2, 3}) {
        const auto s = generate_multi_indices(M, p, q, r);
        std::vector<MultiIndex> brute;
        for (int a = 0; a <= p; ++a)
          for (int b = 0; b <= p; ++b)
            for (int c = 0; c <= p; ++c) {
              const MultiIndex al{a, b, c};
              const double qn = std::pow(std::pow(a, q) + std::pow(b, q) + std::pow(c, q), 1.0 / q);
              if (qn <= p + 1e-10 && (a > 0) + (b > 0) + (c > 0) <= r) brute.push_back(al);
            }
        CHECK(s.size() == brute.size());
        for (const auto& al : brute) CHECK(std::find(s.indices.begin(), s.indices.end(), al) != s.indices.end());
        CHECK(std::is_sorted(s.indices.begin(), s.indices.end(), graded_less));
        CHECK(s.indices.front() == MultiIndex{0, 0, 0});
        // monotone in every truncation parameter
        const auto bigger = generate_multi_indices(M, p + 1, std::min(1.0, q + 0.25), r + 1);
        for (const auto& al : s.indices)
          CHECK(std::find(bigger.indices.begin(), bigger.indices.end(), al) != bigger.indices.end());
      }
}

TEST_CASE("basis choice and reduced coordinates") {
  const InputModel im({"u", "g"}, {Marginal::uniform(2.0, 4.0), Marginal::gaussian(1.0, 2.0)});
  const auto basis = BasisFamily::for_input(im);
  REQUIRE(basis.dim() == 2);
  CHECK(basis.families[0] == PolyFamily::legendre);
  CHECK(basis.families[1] == PolyFamily::hermite);
  const Eigen::VectorXd r = to_reduced(im, basis, Eigen::Vector2d(3.5, 2.0));
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-12));

  Eigen::MatrixXd pts(3, 2);
  pts << 0.1, -0.4, 0.9, 1.2, -0.5, 0.0;
  const auto idx = generate_multi_indices(2, 4, 1.0).indices;
  BasisCache cache(basis, pts, 4);
  CHECK((cache.matrix(idx) - information_matrix(basis, idx, pts)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multi-index CSV round trip") {
  const auto s = generate_multi_indices(3, 3, 0.7, 2);
  std::stringstream ss;
  write_multi_indices_csv(ss, s.indices);
  CHECK(read_multi_indices_csv(ss) == s.indices);
}
