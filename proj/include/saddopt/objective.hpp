#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "saddopt/random.hpp"

namespace saddopt {

/// One labeled example. `features` excludes the intercept.
struct Sample {
  Eigen::VectorXd features;
  double label = 1.0;  // +1 or -1
};
using Dataset = std::vector<Sample>;

/// f(z) = 1/2 (z - center)^T q (z - center), q symmetric positive definite.
struct QuadraticCost {
  Eigen::MatrixXd q;
  Eigen::VectorXd center;
};

/// Realized stochastic gradient. `sample_index` is set for finite-sum
/// objectives and empty for the additive-noise model.
struct SfoSample {
  Eigen::VectorXd gradient;
  std::size_t node = 0;
  std::optional<std::size_t> sample_index;
};

/// Sum of local costs f_1..f_n over R^dim with F = (1/n) sum_i f_i.
///
/// Logistic costs are
///   f_i(b, c) = (1/m_i) sum_j ln(1 + exp(-y_ij (b^T x_ij + c))) + (lambda/2)||b||^2
/// with the decision vector laid out as z = (b, c): the intercept is the last
/// coordinate and is not regularized.
class Objective {
 public:
  enum class Kind { Quadratic, Logistic };

  /// `noise_sigma2` is the total variance of the additive Gaussian gradient
  /// noise (spread evenly over coordinates).
  static Objective quadratic(std::vector<QuadraticCost> costs, double noise_sigma2);
  static Objective logistic(const std::vector<Dataset>& shards, double lambda);

  Kind kind() const { return kind_; }
  std::size_t nodes() const { return n_; }
  std::size_t dim() const { return dim_; }
  double noise_sigma2() const { return noise_sigma2_; }
  double lambda() const { return lambda_; }
  std::size_t local_samples(std::size_t node) const;
  std::size_t total_samples() const;
  const QuadraticCost& quadratic_cost(std::size_t node) const { return quad_.at(node); }

  double local_value(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// F(z) = (1/n) sum_i f_i(z).
  double value(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  void exact_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                      Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd exact_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Gradient of F.
  Eigen::VectorXd full_gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// One oracle call: a uniformly drawn component for logistic costs, exact
  /// gradient plus N(0, sigma^2/dim I) noise for quadratics.
  void sfo_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                    RandomStream& rng, Eigen::Ref<Eigen::VectorXd> out) const;
  SfoSample sfo_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                         RandomStream& rng) const;

  /// Smoothness constant of f_i: lambda_max(Q_i), or for logistic costs
  /// lambda + lambda_max(X_i^T X_i) / (4 m_i) with X_i the augmented design.
  double local_smoothness(std::size_t node) const;

  /// Exact variance E||sfo - grad||^2 of the oracle at z for one node.
  double sfo_variance(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z) const;

 private:
  struct LogisticShard {
    Eigen::MatrixXd design;  // m x dim, last column all ones
    Eigen::VectorXd labels;
  };

  Kind kind_ = Kind::Quadratic;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  double noise_sigma2_ = 0.0;
  double lambda_ = 0.0;
  std::vector<QuadraticCost> quad_;
  std::vector<LogisticShard> shards_;
};

struct Curvature {
  double mu = 0.0;
  double ell = 0.0;
  double kappa = 1.0;
};

/// Strong-convexity and smoothness constants shared by every local cost.
/// Logistic: mu = lambda, ell = lambda + max_i lambda_max(X_i^T X_i) / (4 m_i).
Curvature curvature_constants(const Objective& obj);

struct ReferenceSolution {
  Eigen::VectorXd z_star;
  double f_star = 0.0;
  double residual = 0.0;  // ||grad F(z_star)||_2
  int iterations = 0;
};

/// Quadratic: direct solve. Logistic: full-gradient descent with step 1/ell
/// until ||grad F|| <= tol.
ReferenceSolution reference_solution(const Objective& obj, double tol = 1e-12,
                                     int max_iter = 2'000'000);

/// Largest per-node oracle variance at z; the sigma^2 used by the bounds.
double max_sfo_variance(const Objective& obj, const Eigen::VectorXd& z);

struct PartitionScheme {
  enum class Kind { Balanced, Unbalanced };
  Kind kind = Kind::Balanced;
  double concentration = 1.0;  // Dirichlet concentration for Unbalanced

  static PartitionScheme balanced() { return {}; }
  static PartitionScheme unbalanced(double concentration) {
    return {Kind::Unbalanced, concentration};
  }
};

/// Splits samples into n contiguous shards. Balanced: sizes differ by at most
/// one, larger shards first. Unbalanced: 1 + Dirichlet-multinomial sizes.
std::vector<Dataset> partition_dataset(const Dataset& samples, std::size_t n,
                                       const PartitionScheme& scheme, RandomStream& rng);

/// CSV with header `label,f1,...,fd`; labels must be +1 or -1.
Dataset load_csv_dataset(const std::filesystem::path& path);

}  // namespace saddopt
