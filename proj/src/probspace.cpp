#include "pcnarx/probspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "pcnarx/errors.hpp"

namespace pcnarx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Smallest probability fed to a quantile function; keeps tails finite.
constexpr double kMinProb = 1e-300;

double clamp_prob(double p) { return std::clamp(p, kMinProb, 1.0 - 1e-16); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ArgumentError(msg);
}

struct LaplaceMoments {
  double mean;
  double std;
};

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

std::string to_string(MarginalKind kind) {
  switch (kind) {
    case MarginalKind::gaussian: return "gaussian";
    case MarginalKind::uniform: return "uniform";
    case MarginalKind::lognormal: return "lognormal";
    case MarginalKind::beta: return "beta";
    case MarginalKind::gamma: return "gamma";
    case MarginalKind::two_sided_exponential: return "two_sided_exponential";
    case MarginalKind::constant: return "constant";
  }
  return "unknown";
}

MarginalKind marginal_kind_from_string(const std::string& name) {
  static const std::array<MarginalKind, 7> all = {
      MarginalKind::gaussian,  MarginalKind::uniform,
      MarginalKind::lognormal, MarginalKind::beta,
      MarginalKind::gamma,     MarginalKind::two_sided_exponential,
      MarginalKind::constant};
  for (auto k : all)
    if (to_string(k) == name) return k;
  throw ArgumentError("unknown marginal kind '" + name + "'");
}

Marginal Marginal::gaussian(double mean, double std) {
  require(std::isfinite(mean) && std > 0.0, "gaussian: std must be > 0");
  Marginal m;
  m.kind_ = MarginalKind::gaussian;
  m.mean_ = mean;
  m.std_ = std;
  m.lower_ = -kInf;
  m.upper_ = kInf;
  m.a_ = mean;
  m.b_ = std;
  return m;
}

Marginal Marginal::uniform(double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
          "uniform: need finite lower < upper");
  Marginal m;
  m.kind_ = MarginalKind::uniform;
  m.lower_ = lower;
  m.upper_ = upper;
  m.mean_ = 0.5 * (lower + upper);
  m.std_ = (upper - lower) / std::sqrt(12.0);
  m.a_ = lower;
  m.b_ = upper;
  return m;
}

Marginal Marginal::lognormal(double mean, double std) {
  require(mean > 0.0 && std > 0.0, "lognormal: mean and std must be > 0");
  Marginal m;
  m.kind_ = MarginalKind::lognormal;
  m.mean_ = mean;
  m.std_ = std;
  m.lower_ = 0.0;
  m.upper_ = kInf;
  const double cv = std / mean;
  const double s2 = std::log1p(cv * cv);
  m.a_ = std::log(mean) - 0.5 * s2;
  m.b_ = std::sqrt(s2);
  return m;
}

Marginal Marginal::beta(double mean, double std, double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
          "beta: need finite lower < upper");
  require(mean > lower && mean < upper, "beta: mean must lie inside the support");
  require(std > 0.0, "beta: std must be > 0");
  const double width = upper - lower;
  const double mu = (mean - lower) / width;
  const double var = (std / width) * (std / width);
  const double k = mu * (1.0 - mu) / var - 1.0;
  require(k > 0.0, "beta: std too large for the support");
  Marginal m;
  m.kind_ = MarginalKind::beta;
  m.mean_ = mean;
  m.std_ = std;
  m.lower_ = lower;
  m.upper_ = upper;
  m.a_ = mu * k;
  m.b_ = (1.0 - mu) * k;
  return m;
}

Marginal Marginal::gamma(double mean, double std) {
  require(mean > 0.0 && std > 0.0, "gamma: mean and std must be > 0");
  Marginal m;
  m.kind_ = MarginalKind::gamma;
  m.mean_ = mean;
  m.std_ = std;
  m.lower_ = 0.0;
  m.upper_ = kInf;
  m.a_ = (mean / std) * (mean / std);
  m.b_ = std * std / mean;
  return m;
}

Marginal Marginal::constant(double value) {
  require(std::isfinite(value), "constant: value must be finite");
  Marginal m;
  m.kind_ = MarginalKind::constant;
  m.mean_ = value;
  m.std_ = 0.0;
  m.lower_ = value;
  m.upper_ = value;
  m.a_ = value;
  return m;
}

double Marginal::laplace_cdf(double x) const {
  const double t = (x - a_) / b_;
  return t < 0.0 ? 0.5 * std::exp(t) : 1.0 - 0.5 * std::exp(-t);
}

double Marginal::laplace_ccdf(double x) const {
  const double t = (x - a_) / b_;
  return t > 0.0 ? 0.5 * std::exp(-t) : 1.0 - 0.5 * std::exp(t);
}

double Marginal::laplace_quantile(double p) const {
  return p < 0.5 ? a_ + b_ * std::log(2.0 * p) : a_ - b_ * std::log(2.0 * (1.0 - p));
}

namespace {

LaplaceMoments truncated_laplace_moments(double loc, double scale, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  auto density = [&](double x) { return std::exp(-std::abs(x - loc) / scale); };
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  // Integrate the two smooth branches separately.
  const double split = std::clamp(loc, lo, hi);
  for (auto [a, b] : {std::pair{lo, split}, std::pair{split, hi}}) {
    if (b <= a) continue;
    z += gauss_kronrod<double, 61>::integrate(density, a, b, 8, 1e-14);
    m1 += gauss_kronrod<double, 61>::integrate(
        [&](double x) { return x * density(x); }, a, b, 8, 1e-14);
    m2 += gauss_kronrod<double, 61>::integrate(
        [&](double x) { return x * x * density(x); }, a, b, 8, 1e-14);
  }
  const double mean = m1 / z;
  return {mean, std::sqrt(std::max(m2 / z - mean * mean, 0.0))};
}

}  // namespace

Marginal Marginal::two_sided_exponential(double mean, double std, double lower,
                                         double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
          "two_sided_exponential: need finite lower < upper");
  require(mean > lower && mean < upper,
          "two_sided_exponential: mean must lie inside the support");
  require(std > 0.0 && std < upper - lower, "two_sided_exponential: bad std");

  // Newton iteration on (location, log scale) with a finite-difference
  // Jacobian; the untruncated Laplace law is the starting point.
  double loc = mean;
  double log_scale = std::log(std / std::sqrt(2.0));
  auto residual = [&](double l, double ls) {
    const auto mom = truncated_laplace_moments(l, std::exp(ls), lower, upper);
    return Eigen::Vector2d(mom.mean - mean, mom.std - std);
  };
  Eigen::Vector2d r = residual(loc, log_scale);
  for (int iter = 0; iter < 100 && r.norm() > 1e-13 * (1.0 + std::abs(mean)); ++iter) {
    const double h = 1e-7;
    Eigen::Matrix2d jac;
    jac.col(0) = (residual(loc + h, log_scale) - r) / h;
    jac.col(1) = (residual(loc, log_scale + h) - r) / h;
    Eigen::Vector2d step = jac.fullPivLu().solve(r);
    double damping = 1.0;
    for (int k = 0; k < 30; ++k) {
      const Eigen::Vector2d trial = residual(loc - damping * step[0], log_scale - damping * step[1]);
      if (trial.norm() < r.norm()) break;
      damping *= 0.5;
    }
    loc -= damping * step[0];
    log_scale -= damping * step[1];
    r = residual(loc, log_scale);
  }
  if (r.norm() > 1e-8 * (1.0 + std::abs(mean)))
    throw ArgumentError("two_sided_exponential: moment matching did not converge");

  Marginal m;
  m.kind_ = MarginalKind::two_sided_exponential;
  m.mean_ = mean;
  m.std_ = std;
  m.lower_ = lower;
  m.upper_ = upper;
  m.a_ = loc;
  m.b_ = std::exp(log_scale);
  m.mass_below_ = m.laplace_cdf(lower);
  m.mass_above_ = m.laplace_ccdf(upper);
  return m;
}

bool Marginal::in_support(double x) const {
  if (kind_ == MarginalKind::constant) return x == a_;
  return x >= lower_ && x <= upper_;
}

double Marginal::cdf(double x) const {
  namespace bm = boost::math;
  switch (kind_) {
    case MarginalKind::gaussian: return normal_cdf((x - a_) / b_);
    case MarginalKind::uniform: return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
    case MarginalKind::lognormal:
      return x <= 0.0 ? 0.0 : bm::cdf(bm::lognormal_distribution<>(a_, b_), x);
    case MarginalKind::beta: {
      const double t = std::clamp((x - lower_) / (upper_ - lower_), 0.0, 1.0);
      return bm::cdf(bm::beta_distribution<>(a_, b_), t);
    }
    case MarginalKind::gamma:
      return x <= 0.0 ? 0.0 : bm::cdf(bm::gamma_distribution<>(a_, b_), x);
    case MarginalKind::two_sided_exponential: {
      const double xc = std::clamp(x, lower_, upper_);
      const double z = 1.0 - mass_below_ - mass_above_;
      return std::clamp((laplace_cdf(xc) - mass_below_) / z, 0.0, 1.0);
    }
    case MarginalKind::constant: return x < a_ ? 0.0 : 1.0;
  }
  return 0.0;
}

double Marginal::ccdf(double x) const {
  namespace bm = boost::math;
  switch (kind_) {
    case MarginalKind::gaussian: return normal_cdf(-(x - a_) / b_);
    case MarginalKind::uniform: return std::clamp((b_ - x) / (b_ - a_), 0.0, 1.0);
    case MarginalKind::lognormal:
      return x <= 0.0 ? 1.0 : bm::cdf(bm::complement(bm::lognormal_distribution<>(a_, b_), x));
    case MarginalKind::beta: {
      const double t = std::clamp((x - lower_) / (upper_ - lower_), 0.0, 1.0);
      return bm::cdf(bm::complement(bm::beta_distribution<>(a_, b_), t));
    }
    case MarginalKind::gamma:
      return x <= 0.0 ? 1.0 : bm::cdf(bm::complement(bm::gamma_distribution<>(a_, b_), x));
    case MarginalKind::two_sided_exponential: {
      const double xc = std::clamp(x, lower_, upper_);
      const double z = 1.0 - mass_below_ - mass_above_;
      return std::clamp((laplace_ccdf(xc) - mass_above_) / z, 0.0, 1.0);
    }
    case MarginalKind::constant: return x < a_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double Marginal::pdf(double x) const {
  namespace bm = boost::math;
  if (!in_support(x)) return 0.0;
  switch (kind_) {
    case MarginalKind::gaussian: {
      const double t = (x - a_) / b_;
      return std::exp(-0.5 * t * t) / (b_ * std::sqrt(2.0 * M_PI));
    }
    case MarginalKind::uniform: return 1.0 / (b_ - a_);
    case MarginalKind::lognormal:
      return x <= 0.0 ? 0.0 : bm::pdf(bm::lognormal_distribution<>(a_, b_), x);
    case MarginalKind::beta: {
      const double w = upper_ - lower_;
      const double s = (x - lower_) / w;
      // endpoint limits (boost overflows for shapes below 1)
      if (s <= 0.0 || s >= 1.0) {
        const double shape = s <= 0.0 ? a_ : b_;
        const double other = s <= 0.0 ? b_ : a_;
        if (shape < 1.0) return kInf;
        return shape == 1.0 ? other / w : 0.0;
      }
      return bm::pdf(bm::beta_distribution<>(a_, b_), s) / w;
    }
    case MarginalKind::gamma:
      return x <= 0.0 ? 0.0 : bm::pdf(bm::gamma_distribution<>(a_, b_), x);
    case MarginalKind::two_sided_exponential: {
      const double z = 1.0 - mass_below_ - mass_above_;
      return std::exp(-std::abs(x - a_) / b_) / (2.0 * b_ * z);
    }
    case MarginalKind::constant: return kInf;
  }
  return 0.0;
}

double Marginal::quantile(double u) const {
  namespace bm = boost::math;
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0, 1)");
  switch (kind_) {
    case MarginalKind::gaussian: return a_ + b_ * normal_quantile(u);
    case MarginalKind::uniform: return a_ + u * (b_ - a_);
    case MarginalKind::lognormal: return bm::quantile(bm::lognormal_distribution<>(a_, b_), u);
    case MarginalKind::beta:
      return lower_ + (upper_ - lower_) * bm::quantile(bm::beta_distribution<>(a_, b_), u);
    case MarginalKind::gamma: return bm::quantile(bm::gamma_distribution<>(a_, b_), u);
    case MarginalKind::two_sided_exponential: {
      const double z = 1.0 - mass_below_ - mass_above_;
      return std::clamp(laplace_quantile(mass_below_ + u * z), lower_, upper_);
    }
    case MarginalKind::constant: return a_;
  }
  return 0.0;
}

double Marginal::quantile_upper(double q) const {
  namespace bm = boost::math;
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile_upper: q must lie in (0, 1)");
  switch (kind_) {
    case MarginalKind::gaussian: return a_ - b_ * normal_quantile(q);
    case MarginalKind::uniform: return b_ - q * (b_ - a_);
    case MarginalKind::lognormal:
      return bm::quantile(bm::complement(bm::lognormal_distribution<>(a_, b_), q));
    case MarginalKind::beta:
      return lower_ + (upper_ - lower_) *
                          bm::quantile(bm::complement(bm::beta_distribution<>(a_, b_), q));
    case MarginalKind::gamma:
      return bm::quantile(bm::complement(bm::gamma_distribution<>(a_, b_), q));
    case MarginalKind::two_sided_exponential: {
      const double z = 1.0 - mass_below_ - mass_above_;
      const double pc = mass_above_ + q * z;  // upper-tail Laplace mass
      const double x = pc < 0.5 ? a_ - b_ * std::log(2.0 * pc)
                                : a_ + b_ * std::log(2.0 * (1.0 - pc));
      return std::clamp(x, lower_, upper_);
    }
    case MarginalKind::constant: return a_;
  }
  return 0.0;
}

double Marginal::to_normal(double x) const {
  if (kind_ == MarginalKind::constant) return 0.0;
  if (!in_support(x) || std::isnan(x))
    throw DomainError("value " + std::to_string(x) + " outside the support of a " +
                      to_string(kind_) + " marginal");
  const double c = cdf(x);
  if (c <= 0.5) return normal_quantile(clamp_prob(c));
  return -normal_quantile(clamp_prob(ccdf(x)));
}

double Marginal::from_normal(double z) const {
  if (kind_ == MarginalKind::constant) return a_;
  if (z <= 0.0) return quantile(clamp_prob(normal_cdf(z)));
  return quantile_upper(clamp_prob(normal_cdf(-z)));
}

InputModel::InputModel(std::vector<std::string> names, std::vector<Marginal> marginals,
                       Eigen::MatrixXd correlation)
    : names_(std::move(names)), marginals_(std::move(marginals)),
      correlation_(std::move(correlation)) {
  const auto m = static_cast<Eigen::Index>(marginals_.size());
  if (m == 0) throw ArgumentError("InputModel: at least one marginal required");
  if (names_.size() != marginals_.size())
    throw ArgumentError("InputModel: names and marginals differ in length");
  if (correlation_.rows() != m || correlation_.cols() != m)
    throw ArgumentError("InputModel: correlation matrix has wrong shape");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(correlation_(i, i) - 1.0) > 1e-12)
      throw ArgumentError("InputModel: correlation diagonal must be 1");
    for (Eigen::Index j = 0; j < m; ++j)
      if (std::abs(correlation_(i, j) - correlation_(j, i)) > 1e-12)
        throw ArgumentError("InputModel: correlation must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(correlation_);
  if (llt.info() != Eigen::Success)
    throw ArgumentError("InputModel: correlation matrix is not positive definite");
  cholesky_ = llt.matrixL();
  independent_ = correlation_.isIdentity(0.0);
}

InputModel::InputModel(std::vector<std::string> names, std::vector<Marginal> marginals)
    : InputModel(names, marginals,
                 Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(marginals.size()),
                                           static_cast<Eigen::Index>(marginals.size()))) {}

bool InputModel::independent_component(std::size_t i) const {
  const auto ii = static_cast<Eigen::Index>(i);
  for (Eigen::Index j = 0; j < correlation_.cols(); ++j)
    if (j != ii && correlation_(ii, j) != 0.0) return false;
  return true;
}

void InputModel::check_support(const Eigen::VectorXd& xi) const {
  if (static_cast<std::size_t>(xi.size()) != dim())
    throw ArgumentError("sample dimension " + std::to_string(xi.size()) +
                        " does not match input dimension " + std::to_string(dim()));
  for (std::size_t i = 0; i < dim(); ++i)
    if (!marginals_[i].in_support(xi[static_cast<Eigen::Index>(i)]))
      throw DomainError("component " + std::to_string(i) + " (" + names_[i] + ") = " +
                        std::to_string(xi[static_cast<Eigen::Index>(i)]) +
                        " outside its support");
}

Eigen::VectorXd InputModel::to_standard(const Eigen::VectorXd& xi) const {
  check_support(xi);
  Eigen::VectorXd z(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    z[i] = marginals_[static_cast<std::size_t>(i)].to_normal(xi[i]);
  if (independent_) return z;
  return cholesky_.triangularView<Eigen::Lower>().solve(z);
}

Eigen::VectorXd InputModel::from_standard(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != dim())
    throw ArgumentError("standard vector has wrong dimension");
  Eigen::VectorXd z = independent_ ? u : Eigen::VectorXd(cholesky_.triangularView<Eigen::Lower>() * u);
  Eigen::VectorXd xi(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    xi[i] = marginals_[static_cast<std::size_t>(i)].from_normal(z[i]);
  return xi;
}

Eigen::MatrixXd latin_hypercube_unit(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  if (n == 0) throw ArgumentError("latin hypercube: n must be >= 1");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < n; ++k) {
      double jitter = unif(rng);
      while (jitter <= 0.0) jitter = unif(rng);
      design(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(perm[k]) + jitter) / static_cast<double>(n);
    }
  }
  return design;
}

Eigen::MatrixXd InputModel::sample_lhs(std::size_t n, std::mt19937_64& rng) const {
  const Eigen::MatrixXd unit = latin_hypercube_unit(n, dim(), rng);
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  Eigen::VectorXd u(unit.cols());
  for (Eigen::Index k = 0; k < unit.rows(); ++k) {
    for (Eigen::Index j = 0; j < unit.cols(); ++j) {
      const double p = unit(k, j);
      u[j] = p <= 0.5 ? normal_quantile(p) : -normal_quantile(1.0 - p);
    }
    out.row(k) = from_standard(u).transpose();
  }
  return out;
}

Eigen::MatrixXd InputModel::sample_mc(std::size_t n, std::mt19937_64& rng) const {
  if (n == 0) throw ArgumentError("sample_mc: n must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim()));
  Eigen::VectorXd u(static_cast<Eigen::Index>(dim()));
  for (Eigen::Index k = 0; k < out.rows(); ++k) {
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = gauss(rng);
    out.row(k) = from_standard(u).transpose();
  }
  return out;
}

namespace {

nlohmann::json bound_to_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double bound_from_json(const nlohmann::json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

}  // namespace

nlohmann::json to_json(const Marginal& m, const std::string& name) {
  nlohmann::json j;
  j["name"] = name;
  j["kind"] = to_string(m.kind());
  switch (m.kind()) {
    case MarginalKind::uniform: j["params"] = nlohmann::json::object(); break;
    case MarginalKind::constant: j["params"] = {{"value", m.mean()}}; break;
    default: j["params"] = {{"mean", m.mean()}, {"std", m.std()}}; break;
  }
  j["support"] = {bound_to_json(m.lower()), bound_to_json(m.upper())};
  return j;
}

Marginal marginal_from_json(const nlohmann::json& j) {
  const auto kind = marginal_kind_from_string(j.at("kind").get<std::string>());
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  double lo = -kInf, hi = kInf;
  if (j.contains("support")) {
    const auto& s = j.at("support");
    if (!s.is_array() || s.size() != 2) throw ArgumentError("support must be [lower, upper]");
    lo = bound_from_json(s[0], -kInf);
    hi = bound_from_json(s[1], kInf);
  }
  switch (kind) {
    case MarginalKind::gaussian:
      return Marginal::gaussian(params.at("mean").get<double>(), params.at("std").get<double>());
    case MarginalKind::uniform:
      if (params.contains("lower")) {
        lo = params.at("lower").get<double>();
        hi = params.at("upper").get<double>();
      }
      return Marginal::uniform(lo, hi);
    case MarginalKind::lognormal:
      return Marginal::lognormal(params.at("mean").get<double>(), params.at("std").get<double>());
    case MarginalKind::beta:
      return Marginal::beta(params.at("mean").get<double>(), params.at("std").get<double>(), lo, hi);
    case MarginalKind::gamma:
      return Marginal::gamma(params.at("mean").get<double>(), params.at("std").get<double>());
    case MarginalKind::two_sided_exponential:
      return Marginal::two_sided_exponential(params.at("mean").get<double>(),
                                             params.at("std").get<double>(), lo, hi);
    case MarginalKind::constant: return Marginal::constant(params.at("value").get<double>());
  }
  throw ArgumentError("unsupported marginal kind");
}

nlohmann::json to_json(const InputModel& im) {
  nlohmann::json j;
  j["marginals"] = nlohmann::json::array();
  for (std::size_t i = 0; i < im.dim(); ++i)
    j["marginals"].push_back(to_json(im.marginal(i), im.names()[i]));
  if (!im.independent()) {
    std::vector<double> flat;
    const auto& r = im.correlation();
    for (Eigen::Index a = 0; a < r.rows(); ++a)
      for (Eigen::Index b = 0; b < r.cols(); ++b) flat.push_back(r(a, b));
    j["correlation"] = flat;
  }
  return j;
}

InputModel input_model_from_json(const nlohmann::json& j) {
  std::vector<std::string> names;
  std::vector<Marginal> marginals;
  for (const auto& mj : j.at("marginals")) {
    names.push_back(mj.value("name", "xi" + std::to_string(names.size() + 1)));
    marginals.push_back(marginal_from_json(mj));
  }
  const auto m = static_cast<Eigen::Index>(marginals.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(m, m);
  if (j.contains("correlation") && !j.at("correlation").is_null()) {
    const auto flat = j.at("correlation").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != m * m)
      throw ArgumentError("correlation must hold M*M row-major entries");
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) r(a, b) = flat[static_cast<std::size_t>(a * m + b)];
  }
  return InputModel(std::move(names), std::move(marginals), std::move(r));
}

}  // namespace pcnarx
