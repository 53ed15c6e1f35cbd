#include "saddopt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "saddopt/error.hpp"

namespace saddopt {

PerronData perron_vector(const WeightMatrix& b, double tol, int max_iter) {
  const auto& m = b.dense();
  const auto n = m.rows();
  PerronData pd;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  double residual = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    next.noalias() = m * v;
    residual = (next - v).norm();
    v = next / next.sum();
    if (residual <= tol) break;
  }
  if (residual > tol) {
    std::ostringstream msg;
    msg << "Perron power iteration did not converge in " << max_iter
        << " iterations (last residual " << residual << ")";
    throw ConvergenceError(msg.str());
  }
  // Polish toward machine precision while the residual keeps shrinking.
  for (int extra = 0; extra < max_iter && residual > 1e-15; ++extra) {
    next.noalias() = m * v;
    const double r = (next - v).norm();
    if (r >= residual) break;
    residual = r;
    v = next / next.sum();
    ++it;
  }
  if ((v.array() <= 0.0).any()) {
    throw ConvergenceError("Perron vector has non-positive entries; is B primitive?");
  }
  pd.pi = v;
  pd.residual = (m * v - v).norm();
  pd.iterations = it;
  pd.b_inf = v * Eigen::RowVectorXd::Ones(n);
  pd.pi_max = v.maxCoeff();
  pd.pi_min = v.minCoeff();
  pd.sigma_b = pi_matrix_norm(m - pd.b_inf, v);
  return pd;
}

double pi_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& pi) {
  if (x.size() != pi.size()) throw std::invalid_argument("pi_norm: dimension mismatch");
  return std::sqrt((x.array().square() / pi.array()).sum());
}

double pi_matrix_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& pi) {
  if (x.rows() != pi.size() || x.cols() != pi.size()) {
    throw std::invalid_argument("pi_matrix_norm: dimension mismatch");
  }
  const Eigen::VectorXd root = pi.array().sqrt();
  const Eigen::MatrixXd scaled = root.cwiseInverse().asDiagonal() * x * root.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  return svd.singularValues()(0);
}

GraphConstants graph_constants(const PerronData& pd, const WeightMatrix& b, double tol) {
  const auto n = static_cast<double>(pd.pi.size());
  const Eigen::VectorXd limit = n * pd.pi;
  GraphConstants gc;
  gc.h = pd.pi_max / pd.pi_min;
  gc.beta = std::sqrt(gc.h) * (Eigen::VectorXd::Ones(pd.pi.size()) - limit).norm();

  double y_sup = limit.maxCoeff();
  double y_minus = 1.0 / limit.minCoeff();
  Eigen::VectorXd y = Eigen::VectorXd::Ones(pd.pi.size());
  Eigen::VectorXd next(y.size());
  int k = 0;
  constexpr int kMaxSettle = 1'000'000;
  for (;; ++k) {
    y_sup = std::max(y_sup, y.maxCoeff());
    y_minus = std::max(y_minus, 1.0 / y.minCoeff());
    if ((y - limit).norm() <= tol) break;
    if (k >= kMaxSettle) {
      throw ConvergenceError("graph_constants: y_k did not settle to n*pi");
    }
    next.noalias() = b.dense() * y;
    y.swap(next);
  }
  gc.y_sup = y_sup;
  gc.y_minus = y_minus;
  gc.settle_iterations = k;
  gc.tau = std::pow(gc.y_minus, 6) * gc.y_sup * gc.y_sup * gc.h * (1.0 + gc.beta);
  return gc;
}

EnvelopeCheck lemma1_envelope_check(const WeightMatrix& b, const PerronData& pd,
                                    const GraphConstants& gc, int k_max) {
  const Eigen::VectorXd limit = static_cast<double>(pd.pi.size()) * pd.pi;
  Eigen::VectorXd y = Eigen::VectorXd::Ones(pd.pi.size());
  EnvelopeCheck result;
  result.min_slack = std::numeric_limits<double>::infinity();
  double envelope = gc.beta;
  for (int k = 0; k <= k_max; ++k) {
    // Y_k - Y_inf is diagonal, so its spectral norm is the largest |entry|.
    const double gap = (y - limit).cwiseAbs().maxCoeff();
    const double slack = envelope + 1e-12 - gap;
    if (slack < result.min_slack) {
      result.min_slack = slack;
      result.worst_k = k;
    }
    y = b.dense() * y;
    envelope *= pd.sigma_b;
  }
  result.pass = result.min_slack >= 0.0;
  return result;
}

Network Network::analyze(WeightMatrix b) {
  auto pd = perron_vector(b);
  auto gc = graph_constants(pd, b);
  return Network{std::move(b), std::move(pd), gc};
}

}  // namespace saddopt
