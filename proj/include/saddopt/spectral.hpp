#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "saddopt/digraph.hpp"

namespace saddopt {

/// Right Perron eigenvector of a primitive column-stochastic matrix and the
/// quantities derived from it.
struct PerronData {
  Eigen::VectorXd pi;     // B pi = pi, sum(pi) = 1, pi > 0
  Eigen::MatrixXd b_inf;  // pi 1^T, the limit of B^k
  double sigma_b = 0.0;   // pi-norm of B - B_inf, in [0, 1)
  double pi_max = 0.0;
  double pi_min = 0.0;
  double residual = 0.0;  // ||B pi - pi||_2 at exit
  int iterations = 0;
};

/// Constants that quantify how far B is from doubly stochastic.
struct GraphConstants {
  double h = 1.0;        // pi_max / pi_min
  double beta = 0.0;     // sqrt(h) ||1 - n pi||_2
  double y_sup = 1.0;    // sup_k max_i y_k^i
  double y_minus = 1.0;  // sup_k max_i 1 / y_k^i
  double tau = 1.0;      // y_minus^6 y_sup^2 h (1 + beta)
  int settle_iterations = 0;
};

/// Power iteration, normalized to unit sum each step. Throws
/// ConvergenceError with the last residual if `max_iter` is exhausted.
PerronData perron_vector(const WeightMatrix& b, double tol = 1e-12, int max_iter = 1'000'000);

/// ||x||_pi = ||diag(sqrt(pi))^-1 x||_2.
double pi_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& pi);

/// Largest singular value of diag(sqrt(pi))^-1 X diag(sqrt(pi)).
double pi_matrix_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& pi);

/// Iterates y_{k+1} = B y_k from y_0 = 1 until ||y_k - n pi||_2 <= tol and
/// takes suprema over the visited iterates together with the limit n pi.
GraphConstants graph_constants(const PerronData& pd, const WeightMatrix& b, double tol = 1e-12);

struct EnvelopeCheck {
  bool pass = true;
  double min_slack = 0.0;  // min over k of beta sigma_B^k + 1e-12 - ||Y_k - Y_inf||_2
  int worst_k = 0;
};

/// Checks ||Y_k - Y_inf||_2 <= beta sigma_B^k (+1e-12) for k = 0..k_max.
EnvelopeCheck lemma1_envelope_check(const WeightMatrix& b, const PerronData& pd,
                                    const GraphConstants& gc, int k_max);

/// Weight matrix bundled with everything the engines and bounds need.
struct Network {
  WeightMatrix weights;
  PerronData perron;
  GraphConstants constants;

  static Network analyze(WeightMatrix b);
  std::size_t size() const { return weights.size(); }
};

}  // namespace saddopt
