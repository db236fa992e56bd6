#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "pcnarx/errors.hpp"
#include "pcnarx/probspace.hpp"

using namespace pcnarx;

namespace {

// Composite Simpson rule; n even.
template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

struct SampleMoments {
  double mean;
  double std;
};

SampleMoments sample_moments(const Eigen::VectorXd& v) {
  const double m = v.mean();
  const double var = (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
  return {m, std::sqrt(var)};
}

}  // namespace

TEST_CASE("normal cdf and quantile agree with tabulated values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-13));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-10));
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("moment-matched native parameters") {
  SUBCASE("lognormal") {
    const double m = 0.0468, s = 0.164;
    const auto d = Marginal::lognormal(m, s);
    const double sigma2 = std::log(1.0 + s * s / (m * m));
    CHECK(d.shape_b() == doctest::Approx(std::sqrt(sigma2)).epsilon(1e-12));
    CHECK(d.shape_a() == doctest::Approx(std::log(m) - 0.5 * sigma2).epsilon(1e-12));
    CHECK(d.cdf(std::exp(d.shape_a())) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("beta on an interval") {
    const double m = 17.3, s = 9.31, lo = 5.0, hi = 45.0;
    const auto d = Marginal::beta(m, s, lo, hi);
    const double mu = (m - lo) / (hi - lo), v = std::pow(s / (hi - lo), 2);
    const double k = mu * (1.0 - mu) / v - 1.0;
    CHECK(d.shape_a() == doctest::Approx(mu * k).epsilon(1e-12));
    CHECK(d.shape_b() == doctest::Approx((1.0 - mu) * k).epsilon(1e-12));
    // E[X] = lo + integral of the survival function
    const double mean = lo + simpson([&](double x) { return d.ccdf(x); }, lo, hi);
    CHECK(mean == doctest::Approx(m).epsilon(1e-6));
    CHECK(std::isinf(d.pdf(lo)));  // shape below 1 at the lower end
    CHECK(d.pdf(hi) == 0.0);
  }
  SUBCASE("gamma") {
    const auto d = Marginal::gamma(5.87, 3.11);
    CHECK(d.shape_a() == doctest::Approx(5.87 * 5.87 / (3.11 * 3.11)).epsilon(1e-12));
    CHECK(d.shape_b() == doctest::Approx(3.11 * 3.11 / 5.87).epsilon(1e-12));
  }
  SUBCASE("truncated Laplace reproduces its target moments") {
    const double m = -0.089, s = 0.185, lo = -2.0, hi = 0.5;
    const auto d = Marginal::two_sided_exponential(m, s, lo, hi);
    const double mass = simpson([&](double x) { return d.pdf(x); }, lo, hi);
    const double mean = simpson([&](double x) { return x * d.pdf(x); }, lo, hi);
    const double second = simpson([&](double x) { return x * x * d.pdf(x); }, lo, hi);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(mean == doctest::Approx(m).epsilon(1e-5));
    CHECK(std::sqrt(second - mean * mean) == doctest::Approx(s).epsilon(1e-5));
  }
  CHECK_THROWS_AS(Marginal::beta(50.0, 1.0, 0.0, 10.0), ArgumentError);
  CHECK_THROWS_AS(Marginal::gaussian(0.0, -1.0), ArgumentError);
}

TEST_CASE("cdf, quantile and normal transforms are mutually inverse") {
  const std::vector<Marginal> ms{Marginal::gaussian(2000, 200),        Marginal::uniform(0.09, 0.11),
                                 Marginal::lognormal(0.0468, 0.164),   Marginal::beta(0.213, 0.143, 0.02, 1.0),
                                 Marginal::gamma(5.87, 3.11),
                                 Marginal::two_sided_exponential(-0.089, 0.185, -2.0, 0.5)};
  for (const auto& d : ms) {
    CAPTURE(to_string(d.kind()));
    for (double u : {1e-9, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9}) {
      const double x = d.quantile(u);
      CHECK(d.cdf(x) == doctest::Approx(u).epsilon(1e-8));
      CHECK(d.ccdf(x) == doctest::Approx(1.0 - u).epsilon(1e-8));
    }
    for (double z : {-5.0, -2.0, 0.0, 1.5, 5.0}) {
      const double x = d.from_normal(z);
      CHECK(d.in_support(x));
      CHECK(d.to_normal(x) == doctest::Approx(z).epsilon(1e-7));
    }
    // upper tail keeps relative precision
    CHECK(d.ccdf(d.quantile_upper(1e-12)) == doctest::Approx(1e-12).epsilon(1e-6));
  }
  CHECK_THROWS_AS(Marginal::uniform(0.0, 1.0).to_normal(2.0), DomainError);
  CHECK_THROWS_AS(Marginal::uniform(0.0, 1.0).quantile(1.0), DomainError);
}

TEST_CASE("sampled marginals reproduce their moments") {
  const InputModel im({"a", "b", "c"},
                      {Marginal::lognormal(2.0, 0.5), Marginal::beta(0.3, 0.1, 0.0, 1.0), Marginal::gamma(4.0, 1.0)});
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd X = im.sample_mc(40000, rng);
  const double targets[3][2] = {{2.0, 0.5}, {0.3, 0.1}, {4.0, 1.0}};
  for (int j = 0; j < 3; ++j) {
    const auto mo = sample_moments(X.col(j));
    const double se = targets[j][1] / std::sqrt(40000.0);
    CHECK(std::abs(mo.mean - targets[j][0]) < 4.0 * se);
    CHECK(mo.std == doctest::Approx(targets[j][1]).epsilon(0.03));
  }
}

TEST_CASE("Gaussian copula: correlated marginals map to independent standard normals") {
  Eigen::MatrixXd R(2, 2);
  R << 1.0, 0.6, 0.6, 1.0;
  const InputModel im({"u", "g"}, {Marginal::uniform(0.0, 2.0), Marginal::gamma(3.0, 1.0)}, R);
  CHECK_FALSE(im.independent());
  std::mt19937_64 rng(5);
  const std::size_t n = 20000;
  const Eigen::MatrixXd X = im.sample_mc(n, rng);
  Eigen::MatrixXd Z(n, 2), U(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(static_cast<Eigen::Index>(i)).transpose();
    U.row(static_cast<Eigen::Index>(i)) = im.to_standard(xi).transpose();
    Z(static_cast<Eigen::Index>(i), 0) = normal_quantile(im.marginal(0).cdf(xi[0]));
    Z(static_cast<Eigen::Index>(i), 1) = normal_quantile(im.marginal(1).cdf(xi[1]));
    const Eigen::VectorXd back = im.from_standard(im.to_standard(xi));
    CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + xi.cwiseAbs().maxCoeff()));
  }
  auto corr = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd da = a.array() - a.mean(), db = b.array() - b.mean();
    return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
  };
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(corr(Z.col(0), Z.col(1)) - 0.6) < tol);
  CHECK(std::abs(corr(U.col(0), U.col(1))) < tol);
}

TEST_CASE("Latin hypercube puts one point in every stratum") {
  std::mt19937_64 rng(3);
  const std::size_t n = 37;
  const Eigen::MatrixXd P = latin_hypercube_unit(n, 4, rng);
  REQUIRE(P.rows() == 37);
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    std::set<long> strata;
    for (Eigen::Index i = 0; i < P.rows(); ++i) strata.insert(static_cast<long>(std::floor(P(i, j) * n)));
    CHECK(strata.size() == n);
  }
  CHECK_THROWS_AS(latin_hypercube_unit(0, 2, rng), ArgumentError);
}

TEST_CASE("support checks and model validation") {
  const InputModel im({"u"}, {Marginal::uniform(1.0, 2.0)});
  Eigen::VectorXd bad(1);
  bad << 3.0;
  CHECK_THROWS_AS(im.check_support(bad), DomainError);
  CHECK_THROWS_AS(im.to_standard(Eigen::VectorXd::Zero(2)), ArgumentError);
  Eigen::MatrixXd R(2, 2);
  R << 1.0, 1.5, 1.5, 1.0;
  CHECK_THROWS_AS(InputModel({"a", "b"}, {Marginal::gaussian(0, 1), Marginal::gaussian(0, 1)}, R), ArgumentError);
}

TEST_CASE("input model survives a JSON round trip") {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3);
  R(0, 2) = R(2, 0) = -0.3;
  const InputModel im({"a", "b", "c"},
                      {Marginal::two_sided_exponential(-0.089, 0.185, -2.0, 0.5), Marginal::constant(4.0),
                       Marginal::beta(12.4, 7.44, 0.5, 40.0)},
                      R);
  const InputModel back = input_model_from_json(to_json(im));
  REQUIRE(back.dim() == 3);
  CHECK(back.names() == im.names());
  CHECK((back.correlation() - R).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.marginal(i).kind() == im.marginal(i).kind());
    CHECK(back.marginal(i).shape_a() == im.marginal(i).shape_a());
    CHECK(back.marginal(i).shape_b() == im.marginal(i).shape_b());
  }
}
