#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace saddopt {

/// Row i holds node i's p-vector.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Network-wide iterates of the push-sum engines.
///
/// For the tracking engines (S-ADDOPT, ADDOPT) `w` is the gradient tracker.
/// For SGP and GP `w` is the gradient used in the current step, which makes
/// x_{k+1} = B x_k - alpha w_k hold uniformly. `grad` caches the oracle draw
/// at z_k so each step needs exactly one new call per node.
struct NodeStates {
  StateMatrix x;
  Eigen::VectorXd y;
  StateMatrix z;
  StateMatrix w;
  StateMatrix grad;
  std::int64_t k = 0;
  std::int64_t oracle_calls = 0;  // per node, including the initial draw

  Eigen::Index nodes() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
};

}  // namespace saddopt
