#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "saddopt/engine.hpp"
#include "saddopt/objective.hpp"
#include "saddopt/spectral.hpp"
#include "saddopt/state.hpp"

namespace saddopt {

/// Largest constant step with a linear-rate guarantee:
///   (1 / (ell sqrt(kappa))) (1 - sigma_B^2)^2 / (51 sqrt(tau)).
double theorem1_step_bound(const GraphConstants& gc, const PerronData& pd, double mu, double ell);

/// (3/40)(1 - sigma_B^2) / mu, the precondition of the rate bound.
double corollary1_step_bound(double mu, double sigma_b);

/// 1 - alpha mu / 3. Throws std::invalid_argument when alpha exceeds
/// corollary1_step_bound or is negative.
double corollary1_rate(double alpha, double mu, double sigma_b);

struct LtiConstants {
  double q = 0, k1 = 0, k2 = 0, k3 = 0;
  double g1 = 0, g2 = 0, g3 = 0, g4 = 0, g5 = 0;
  double h1 = 0, h2 = 0, h3 = 0;
  double c1 = 0, c2 = 0, c_sigma = 0;
};

/// t_{k+1} <= A t_k + H_k s_k + c with
/// t = (agreement_pi2, opt_gap2, track_pi2) and s_k = (||x_k||_2^2, 0, 0).
struct LtiSystem {
  double alpha = 0.0;
  double sigma_b = 0.0;
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  LtiConstants constants;
  /// alpha <= (1 - sigma_B^2) / (9 ell y_- sqrt(h)), the regime in which the
  /// inequality was derived.
  bool derivation_regime = false;

  /// Only entries (2,1) and (3,1) (1-based) are nonzero; both decay as sigma_B^k.
  Eigen::Matrix3d h(std::int64_t k) const;
};

/// Builds the error system for constant step alpha. Throws
/// std::invalid_argument unless alpha^2 < k1 / (2 k2).
LtiSystem build_lti_system(double alpha, const GraphConstants& gc, const PerronData& pd, double mu,
                           double ell, double sigma2, std::size_t n);

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::Matrix3d& a);

struct ResidualBall {
  double u1 = 0.0;  // asymptotic bound on the agreement error
  double u2 = 0.0;  // asymptotic bound on the optimality gap
  double e_inf = 0.0;
};

/// Explicit asymptotic bound on limsup e_k. Throws std::invalid_argument if
/// alpha is not positive or exceeds theorem1_step_bound.
ResidualBall residual_ball_estimate(const GraphConstants& gc, const PerronData& pd, double mu,
                                    double ell, double sigma2, std::size_t n, double alpha);

struct BoundReport {
  double alpha = 0.0;
  double alpha_max_thm1 = 0.0;
  double alpha_max_cor1 = 0.0;
  double gamma_bound = 1.0;  // NaN when alpha violates the rate precondition
  double rho_a = 0.0;        // NaN when the system is not defined at alpha
  double residual_u1 = 0.0;  // NaN when alpha exceeds the step bound
  double residual_u2 = 0.0;
  double e_inf_bound = 0.0;
};

/// Every bound available at alpha; entries that do not apply are NaN.
BoundReport bound_report(const GraphConstants& gc, const PerronData& pd, double mu, double ell,
                         double sigma2, std::size_t n, double alpha);

struct LtiCheckpoint {
  std::int64_t k = 0;
  Eigen::Vector3d t_k = Eigen::Vector3d::Zero();
  Eigen::Vector3d t_next = Eigen::Vector3d::Zero();
  double s_k = 0.0;
  Eigen::Vector3d mean_excess = Eigen::Vector3d::Zero();  // mean of t_{k+1} - A t_k - H_k s_k
  Eigen::Vector3d std_error = Eigen::Vector3d::Zero();
  Eigen::Vector3d allowance = Eigen::Vector3d::Zero();  // c + 3 SE + float slack
  bool pass = true;
};

struct LtiVerification {
  std::vector<LtiCheckpoint> checkpoints;
  std::size_t replicas = 0;
  bool pass = true;
};

/// Monte-Carlo check of the error system on S-ADDOPT with the system's
/// constant step. Replica r uses the stream (seed, r). A component passes
/// when the replica mean of t_{k+1} - A t_k - H_k s_k is at most
/// c + 3 standard errors.
LtiVerification mc_verify_lti(const LtiSystem& lti, const Network& net, const Objective& obj,
                              const ReferenceSolution& ref, const StateMatrix& x0,
                              std::uint64_t seed, std::size_t replicas,
                              std::vector<std::int64_t> checkpoints, unsigned threads = 0);

struct Theorem2Inputs {
  double theta = 0.0;
  double m = 1.0;
  double mu = 0.0;
  double ell = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 1;
  double b_bound = 0.0;  // bound on E||x_k||_2^2
  double p0 = 0.0;       // initial agreement_pi2
  double q0 = 0.0;       // initial opt_gap2
  double r0 = 0.0;       // initial track_pi2
};

struct Theorem2Table {
  double c0 = 0, d1 = 0, d2 = 0, d3 = 0, d4 = 0, d5 = 0, d6 = 0;
  double e1 = 0, e2 = 0, e3 = 0, k1 = 0, k2 = 0, k3 = 0;
  double p_tilde = 0, q_tilde = 0, r_tilde = 0;
  bool m_ok = false;
  bool determinant_condition_ok = false;
  bool r_tilde_consistent = false;  // r_tilde <= d1 p_tilde
  std::int64_t s_tilde = 0;
};

/// Constants of the decaying-step analysis with alpha_k = theta / (m + k).
/// Throws std::invalid_argument when theta mu <= 1.
Theorem2Table theorem2_table(const Theorem2Inputs& in, const GraphConstants& gc,
                             const PerronData& pd);

/// Smallest k0 such that sigma_B^k <= 1 / (n (m + k)^2) for every k >= k0.
std::int64_t find_s_tilde(double sigma_b, std::size_t n, double m);

/// Smallest integer m for which both m conditions and the determinant
/// condition hold. Throws std::invalid_argument when theta mu <= 1.
double minimal_valid_m(double theta, const GraphConstants& gc, const PerronData& pd, double mu,
                       double ell, std::size_t n);

}  // namespace saddopt
