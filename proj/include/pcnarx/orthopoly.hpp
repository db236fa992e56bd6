#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pcnarx {

class InputModel;

enum class PolyFamily {
  legendre,  // orthonormal w.r.t. the uniform law on [-1, 1]
  hermite,   // orthonormal w.r.t. the standard normal law
};

std::string to_string(PolyFamily family);
PolyFamily poly_family_from_string(const std::string& name);

/// psi_n(x) for the orthonormal family.
double eval_univariate(PolyFamily family, int degree, double x);

/// psi_0(x) ... psi_max_degree(x) written into out (size max_degree + 1).
void eval_univariate_all(PolyFamily family, int max_degree, double x, double* out);

using MultiIndex = std::vector<int>;

/// (sum alpha_i^q)^(1/q).
double q_norm(const MultiIndex& alpha, double q);
/// Number of nonzero entries.
int index_rank(const MultiIndex& alpha);
int total_degree(const MultiIndex& alpha);

inline constexpr int kUnboundedRank = std::numeric_limits<int>::max();

/// Truncated multi-index set {alpha : ||alpha||_q <= p, ||alpha||_0 <= r}
/// in graded order (total degree first, then reverse lexicographic).
struct MultiIndexSet {
  std::size_t dim = 0;
  int max_degree = 0;
  double q = 1.0;
  int max_rank = kUnboundedRank;
  std::vector<MultiIndex> indices;

  std::size_t size() const { return indices.size(); }
};

MultiIndexSet generate_multi_indices(std::size_t dim, int max_degree, double q,
                                     int max_rank = kUnboundedRank);

/// Sort key used for the graded ordering.
bool graded_less(const MultiIndex& a, const MultiIndex& b);

/// Per-dimension polynomial families.
struct BasisFamily {
  std::vector<PolyFamily> families;

  std::size_t dim() const { return families.size(); }
  /// Legendre for independent uniform inputs, Hermite for everything else.
  static BasisFamily for_input(const InputModel& im);
};

/// Map a physical sample to the arguments of the polynomial families:
/// 2F(xi)-1 for Legendre dimensions, the standard-normal coordinate otherwise.
Eigen::VectorXd to_reduced(const InputModel& im, const BasisFamily& basis,
                           const Eigen::VectorXd& xi);

double eval_multivariate(const BasisFamily& basis, const MultiIndex& alpha,
                         const Eigen::VectorXd& u);

/// Information matrix A_ij = psi_{alpha_j}(u_i) for reduced points (rows).
Eigen::MatrixXd information_matrix(const BasisFamily& basis,
                                   const std::vector<MultiIndex>& indices,
                                   const Eigen::MatrixXd& reduced_points);

/// Univariate evaluations cached per point and dimension; turns information
/// matrix assembly into table lookups.
class BasisCache {
public:
  BasisCache(const BasisFamily& basis, const Eigen::MatrixXd& reduced_points,
             int max_degree);
  int max_degree() const { return max_degree_; }
  Eigen::Index points() const { return points_; }
  double value(Eigen::Index point, std::size_t dim, int degree) const {
    return table_[(static_cast<std::size_t>(point) * dims_ + dim) *
                      static_cast<std::size_t>(max_degree_ + 1) +
                  static_cast<std::size_t>(degree)];
  }
  Eigen::MatrixXd matrix(const std::vector<MultiIndex>& indices) const;

private:
  int max_degree_;
  Eigen::Index points_;
  std::size_t dims_;
  std::vector<double> table_;
};

/// CSV rows of integers, one multi-index per line.
void write_multi_indices_csv(std::ostream& os, const std::vector<MultiIndex>& indices);
std::vector<MultiIndex> read_multi_indices_csv(std::istream& is);

}  // namespace pcnarx
