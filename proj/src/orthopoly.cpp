#include "pcnarx/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pcnarx/errors.hpp"
#include "pcnarx/probspace.hpp"

namespace pcnarx {

std::string to_string(PolyFamily family) {
  return family == PolyFamily::legendre ? "legendre" : "hermite";
}

PolyFamily poly_family_from_string(const std::string& name) {
  if (name == "legendre") return PolyFamily::legendre;
  if (name == "hermite") return PolyFamily::hermite;
  throw ArgumentError("unknown polynomial family '" + name + "'");
}

void eval_univariate_all(PolyFamily family, int max_degree, double x, double* out) {
  if (max_degree < 0) throw ArgumentError("polynomial degree must be >= 0");
  out[0] = 1.0;
  if (max_degree == 0) return;
  // Orthonormal three-term recurrence x psi_n = b_{n+1} psi_{n+1} + b_n psi_{n-1}.
  if (family == PolyFamily::hermite) {
    out[1] = x;
    for (int n = 1; n < max_degree; ++n)
      out[n + 1] = (x * out[n] - std::sqrt(static_cast<double>(n)) * out[n - 1]) /
                   std::sqrt(static_cast<double>(n + 1));
  } else {
    auto b = [](int n) {
      const double dn = static_cast<double>(n);
      return dn / std::sqrt(4.0 * dn * dn - 1.0);
    };
    out[1] = std::sqrt(3.0) * x;
    for (int n = 1; n < max_degree; ++n)
      out[n + 1] = (x * out[n] - b(n) * out[n - 1]) / b(n + 1);
  }
}

double eval_univariate(PolyFamily family, int degree, double x) {
  if (degree < 0) throw ArgumentError("polynomial degree must be >= 0");
  std::vector<double> buf(static_cast<std::size_t>(degree) + 1);
  eval_univariate_all(family, degree, x, buf.data());
  return buf.back();
}

double q_norm(const MultiIndex& alpha, double q) {
  double s = 0.0;
  for (int a : alpha)
    if (a > 0) s += std::pow(static_cast<double>(a), q);
  return std::pow(s, 1.0 / q);
}

int index_rank(const MultiIndex& alpha) {
  return static_cast<int>(std::count_if(alpha.begin(), alpha.end(), [](int a) { return a != 0; }));
}

int total_degree(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

bool graded_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  // Same degree: larger leading entries first, e.g. (2,0) < (1,1) < (0,2).
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

namespace {

struct IndexGenerator {
  std::size_t dim;
  int p;
  double q;
  int r;
  double budget;  // p^q with a small relative slack for rounding
  std::vector<MultiIndex>* out;
  MultiIndex current;

  void recurse(std::size_t pos, double qsum, int rank) {
    if (pos == dim) {
      out->push_back(current);
      return;
    }
    current[pos] = 0;
    recurse(pos + 1, qsum, rank);
    if (rank >= r) return;
    for (int a = 1; a <= p; ++a) {
      const double s = qsum + std::pow(static_cast<double>(a), q);
      if (s > budget) break;
      current[pos] = a;
      recurse(pos + 1, s, rank + 1);
    }
    current[pos] = 0;
  }
};

}  // namespace

MultiIndexSet generate_multi_indices(std::size_t dim, int max_degree, double q, int max_rank) {
  if (dim == 0) throw ArgumentError("generate_multi_indices: M must be >= 1");
  if (max_degree < 0) throw ArgumentError("generate_multi_indices: p must be >= 0");
  if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("generate_multi_indices: q must lie in (0, 1]");
  if (max_rank < 0) throw ArgumentError("generate_multi_indices: r must be >= 0");

  MultiIndexSet set{dim, max_degree, q, max_rank, {}};
  IndexGenerator gen{dim, max_degree, q, max_rank,
                     std::pow(static_cast<double>(max_degree), q) * (1.0 + 1e-12),
                     &set.indices, MultiIndex(dim, 0)};
  gen.recurse(0, 0.0, 0);
  std::sort(set.indices.begin(), set.indices.end(), graded_less);
  return set;
}

BasisFamily BasisFamily::for_input(const InputModel& im) {
  BasisFamily b;
  for (std::size_t i = 0; i < im.dim(); ++i) {
    const bool uniform = im.marginal(i).kind() == MarginalKind::uniform;
    b.families.push_back(uniform && im.independent_component(i) ? PolyFamily::legendre
                                                                : PolyFamily::hermite);
  }
  return b;
}

Eigen::VectorXd to_reduced(const InputModel& im, const BasisFamily& basis,
                           const Eigen::VectorXd& xi) {
  if (basis.dim() != im.dim()) throw ArgumentError("basis and input model dimensions differ");
  Eigen::VectorXd u = im.to_standard(xi);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    if (basis.families[i] != PolyFamily::legendre) continue;
    const auto& m = im.marginal(i);
    const auto ii = static_cast<Eigen::Index>(i);
    // Independent uniform: linear map onto [-1, 1].
    u[ii] = 2.0 * (xi[ii] - m.lower()) / (m.upper() - m.lower()) - 1.0;
  }
  return u;
}

double eval_multivariate(const BasisFamily& basis, const MultiIndex& alpha,
                         const Eigen::VectorXd& u) {
  if (alpha.size() != basis.dim() || static_cast<std::size_t>(u.size()) != basis.dim())
    throw ArgumentError("eval_multivariate: dimension mismatch");
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] > 0)
      v *= eval_univariate(basis.families[i], alpha[i], u[static_cast<Eigen::Index>(i)]);
  return v;
}

BasisCache::BasisCache(const BasisFamily& basis, const Eigen::MatrixXd& reduced_points,
                       int max_degree)
    : max_degree_(max_degree), points_(reduced_points.rows()), dims_(basis.dim()) {
  if (static_cast<std::size_t>(reduced_points.cols()) != dims_)
    throw ArgumentError("BasisCache: point dimension mismatch");
  const auto stride = static_cast<std::size_t>(max_degree + 1);
  table_.resize(static_cast<std::size_t>(points_) * dims_ * stride);
  for (Eigen::Index k = 0; k < points_; ++k)
    for (std::size_t d = 0; d < dims_; ++d)
      eval_univariate_all(basis.families[d], max_degree,
                          reduced_points(k, static_cast<Eigen::Index>(d)),
                          &table_[(static_cast<std::size_t>(k) * dims_ + d) * stride]);
}

Eigen::MatrixXd BasisCache::matrix(const std::vector<MultiIndex>& indices) const {
  Eigen::MatrixXd a(points_, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto& alpha = indices[j];
    if (alpha.size() != dims_) throw ArgumentError("BasisCache: index dimension mismatch");
    for (int deg : alpha)
      if (deg > max_degree_) throw ArgumentError("BasisCache: degree exceeds cached maximum");
    for (Eigen::Index k = 0; k < points_; ++k) {
      double v = 1.0;
      for (std::size_t d = 0; d < dims_; ++d)
        if (alpha[d] > 0) v *= value(k, d, alpha[d]);
      a(k, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return a;
}

Eigen::MatrixXd information_matrix(const BasisFamily& basis,
                                   const std::vector<MultiIndex>& indices,
                                   const Eigen::MatrixXd& reduced_points) {
  int pmax = 0;
  for (const auto& a : indices)
    for (int d : a) pmax = std::max(pmax, d);
  return BasisCache(basis, reduced_points, pmax).matrix(indices);
}

void write_multi_indices_csv(std::ostream& os, const std::vector<MultiIndex>& indices) {
  for (const auto& alpha : indices) {
    for (std::size_t i = 0; i < alpha.size(); ++i) os << (i ? "," : "") << alpha[i];
    os << '\n';
  }
}

std::vector<MultiIndex> read_multi_indices_csv(std::istream& is) {
  std::vector<MultiIndex> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    MultiIndex alpha;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) alpha.push_back(std::stoi(cell));
    if (!out.empty() && alpha.size() != out.front().size())
      throw ArgumentError("multi-index CSV rows differ in length");
    out.push_back(std::move(alpha));
  }
  return out;
}

}  // namespace pcnarx
