#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "saddopt/objective.hpp"
#include "saddopt/spectral.hpp"
#include "saddopt/state.hpp"

namespace saddopt {

/// The three LTI coordinates plus the network error and bookkeeping norms.
struct MetricsRow {
  double agreement_pi2 = 0.0;  // ||x - B_inf x||_pi^2
  double opt_gap2 = 0.0;       // ||xbar - z*||_2^2
  double track_pi2 = 0.0;      // ||w - B_inf w||_pi^2
  double e_k = 0.0;            // (1/n) ||z - 1 z*||_2^2
  double f_bar_gap = 0.0;      // F(xbar) - F(z*)
  double x_norm2 = 0.0;        // ||x||_2^2
};

enum class Metric { AgreementPi2, OptGap2, TrackPi2, Ek, FBarGap, XNorm2 };

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
double metric_value(const MetricsRow& row, Metric m);

/// sum_i ||X_i||^2 / pi_i with X_i the i-th row (blockwise pi-norm squared).
double blockwise_pi_norm2(const StateMatrix& x, const Eigen::VectorXd& pi);

/// X - B_inf X for stacked node vectors: row i is X_i - pi_i sum_j X_j.
StateMatrix consensus_deviation(const StateMatrix& x, const Eigen::VectorXd& pi);

MetricsRow compute_metrics(const NodeStates& s, const PerronData& pd, const ReferenceSolution& ref,
                           const Objective& obj);

/// Sampled series of one metric against iteration count.
struct Series {
  std::vector<double> k;
  std::vector<double> value;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log(value) against log(offset + k) over the points
/// with k_lo <= k <= k_hi. Throws if a value in the window is not positive.
SlopeFit fit_loglog_slope(const Series& series, double k_lo, double k_hi, double offset = 0.0);

struct Plateau {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;
  bool drifting = false;  // tail still trending; the mean is not a plateau yet
};

/// Mean and standard error over the last `tail_fraction` of the series.
/// `drifting` is set when the two halves of the tail differ by more than
/// 10% of the mean and by more than three combined standard errors.
Plateau plateau_estimate(const Series& series, double tail_fraction);

struct InequalityCheck {
  bool pass = true;
  double slack = 0.0;  // rhs - lhs
};

/// Pathwise check of
///   e_k <= psi ||x - xhat||_pi^2 + psi beta sigma_B^k ||x||_pi^2 + 2 ||xbar - z*||^2,
/// psi = 2 y_-^2 pi_max (1 + beta) / n, with tolerance 1e-9.
InequalityCheck lemma2_check(const NodeStates& s, const PerronData& pd, const GraphConstants& gc,
                             const ReferenceSolution& ref);

}  // namespace saddopt
