#include "saddopt/analysis.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "test_support.h"

namespace saddopt {
namespace {

using testing::scalar_quadratics;
using testing::two_node_network;

// A network whose constants are set by hand (sigma_B = 0, tau = 1).
struct IdealGraph {
  GraphConstants gc;
  PerronData pd;
  explicit IdealGraph(std::size_t n) {
    pd.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
    pd.pi_max = pd.pi_min = 1.0 / static_cast<double>(n);
    pd.sigma_b = 0.0;
  }
};

TEST(StepBounds, ConstantStepExamples) {
  const IdealGraph ideal(4);
  EXPECT_NEAR(theorem1_step_bound(ideal.gc, ideal.pd, 3.0, 3.0), 1.0 / 153.0, 1e-15);
  EXPECT_NEAR(theorem1_step_bound(ideal.gc, ideal.pd, 1.0, 2.0), 1.0 / (102.0 * std::sqrt(2.0)), 1e-15);
  const auto net = two_node_network();
  EXPECT_NEAR(theorem1_step_bound(net.constants, net.perron, 1.0, 1.0),
              std::pow(35.0 / 36.0, 2) / (51.0 * std::sqrt(net.constants.tau)), 1e-12);
  EXPECT_NEAR(theorem1_step_bound(net.constants, net.perron, 1.0, 1.0), 0.00717, 5e-5);
  EXPECT_THROW(theorem1_step_bound(ideal.gc, ideal.pd, 2.0, 1.0), std::invalid_argument);
}

TEST(StepBounds, RateExamples) {
  EXPECT_NEAR(corollary1_rate(0.01, 1.0, 0.0), 1.0 - 0.01 / 3.0, 1e-15);
  EXPECT_EQ(corollary1_rate(0.0, 5.0, 0.5), 1.0);
  try {
    corollary1_rate(0.08, 1.0, 0.0);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("(3/40)"), std::string::npos);
  }
  EXPECT_NEAR(corollary1_step_bound(2.0, 0.5), 0.075 * 0.75 / 2.0, 1e-15);
}

// Second transcription of the error-system constants, kept deliberately
// literal so that a slip in either copy shows up as a mismatch.
struct LtiOracle {
  double a11, a13, a21, a22, a31, a32, a33, c2, c3, h21, h31;
};

LtiOracle lti_oracle(double al, const GraphConstants& g, const PerronData& p, double mu, double L,
                     double s2noise, double n) {
  const double sB = p.sigma_b;
  const double q = (1 + sB * sB) / (1 - sB * sB);
  const double k1 = (1 - sB * sB) / 3;
  const double k2 = 6 * L * L * q * g.y_minus * g.y_minus * g.h;
  const double k3 = (2 * k1 - 3 * k2 * al * al) / (k1 - 2 * k2 * al * al);
  const double ym = g.y_minus, y = g.y_sup, b = g.beta;
  const double g1 = (L * L * ym * ym / n) * (1 + b * sB) * p.pi_max;
  const double g2 = g1 / mu;
  const double g3 = 4 * k2;
  const double g4 = 2 * L * L * y * y * k2 * k3 * (1 + b * sB);
  const double g5 = 18 * std::pow(L, 4) * q * std::pow(ym, 4) * y * y / p.pi_min;
  const double c1 = 4 * q * n / p.pi_min;
  const double c2 = 12 * L * L * q * std::pow(ym, 4) * y * y * k3 / p.pi_min;
  const double h1 = ym * ym * b * (al * L * L / mu + al * al * L * L) * (b + 1);
  const double h2 = 24 * L * L * q * std::pow(ym, 4) * b * b / p.pi_min;
  const double h3 = 12 * std::pow(L, 4) * q * std::pow(ym, 6) * y * y * k3 * b * (b + 1) / p.pi_min;
  return {(1 + sB * sB) / 2,
          al * al * q,
          al * al * g1 + al * g2,
          1 - al * mu,
          g3 + al * al * g4,
          al * al * g5,
          (5 + sB * sB) / 6,
          al * al * s2noise / n,
          s2noise * (c1 + al * al * c2),
          h1,
          h2 + al * al * h3};
}

void expect_matches_oracle(const LtiSystem& sys, const LtiOracle& o, std::int64_t k) {
  const auto rel = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  EXPECT_TRUE(rel(sys.a(0, 0), o.a11));
  EXPECT_TRUE(rel(sys.a(0, 2), o.a13));
  EXPECT_TRUE(rel(sys.a(1, 0), o.a21));
  EXPECT_TRUE(rel(sys.a(1, 1), o.a22));
  EXPECT_TRUE(rel(sys.a(2, 0), o.a31));
  EXPECT_TRUE(rel(sys.a(2, 1), o.a32));
  EXPECT_TRUE(rel(sys.a(2, 2), o.a33));
  EXPECT_EQ(sys.a(0, 1), 0.0);
  EXPECT_EQ(sys.a(1, 2), 0.0);
  EXPECT_EQ(sys.c(0), 0.0);
  EXPECT_TRUE(rel(sys.c(1), o.c2));
  EXPECT_TRUE(rel(sys.c(2), o.c3));
  const double decay = std::pow(sys.sigma_b, static_cast<double>(k));
  const auto hk = sys.h(k);
  EXPECT_TRUE(rel(hk(1, 0), o.h21 * decay));
  EXPECT_TRUE(rel(hk(2, 0), o.h31 * decay));
  EXPECT_EQ((hk.array() != 0.0).count() <= 2, true);
}

TEST(LtiSystem, TwoNodeValues) {
  const auto net = two_node_network();
  const double alpha = theorem1_step_bound(net.constants, net.perron, 1.0, 1.0) / 2.0;
  const auto sys = build_lti_system(alpha, net.constants, net.perron, 1.0, 1.0, 0.01, 2);
  EXPECT_NEAR(sys.a(0, 0), 37.0 / 72.0, 1e-12);
  EXPECT_NEAR(sys.constants.q, 37.0 / 35.0, 1e-12);
  EXPECT_TRUE(sys.derivation_regime);
  expect_matches_oracle(sys, lti_oracle(alpha, net.constants, net.perron, 1.0, 1.0, 0.01, 2.0), 3);
  EXPECT_LT(spectral_radius(sys.a), 1.0);
}

TEST(LtiSystem, NoiseFreeHasZeroDrive) {
  const auto net = two_node_network();
  const auto sys = build_lti_system(1e-3, net.constants, net.perron, 1.0, 2.0, 0.0, 2);
  EXPECT_TRUE(sys.c.isZero(0.0));
}

TEST(LtiSystem, DoublyStochasticHasNoTransient) {
  const auto net = Network::analyze(column_stochastic_weights(build_exponential_digraph(8)));
  const auto sys = build_lti_system(1e-3, net.constants, net.perron, 1.0, 2.0, 1.0, 8);
  EXPECT_NEAR(net.constants.beta, 0.0, 1e-10);
  EXPECT_LE(sys.h(0).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(sys.h(5).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LtiSystem, RandomGraphsMatchOracle) {
  RandomStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 2 + rng.index(15);
    const auto net = Network::analyze(
        column_stochastic_weights(build_geometric_digraph(n, 0.6, 0.2, 100 + trial)));
    const double mu = 0.5 + rng.uniform();
    const double ell = mu * (1.0 + 9.0 * rng.uniform());
    const double alpha = theorem1_step_bound(net.constants, net.perron, mu, ell) * rng.uniform();
    const auto sys = build_lti_system(alpha, net.constants, net.perron, mu, ell, 0.3, n);
    expect_matches_oracle(
        sys, lti_oracle(alpha, net.constants, net.perron, mu, ell, 0.3, static_cast<double>(n)),
        trial);
  }
}

TEST(LtiSystem, RejectsInvalidStep) {
  const auto net = two_node_network();
  try {
    build_lti_system(1.0, net.constants, net.perron, 1.0, 1.0, 0.0, 2);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("k1 / (2 k2)"), std::string::npos);
  }
  EXPECT_THROW(build_lti_system(0.0, net.constants, net.perron, 1.0, 1.0, 0.0, 2),
               std::invalid_argument);
}

TEST(SpectralRadius, Examples) {
  EXPECT_NEAR(spectral_radius(Eigen::Matrix3d::Identity()), 1.0, 1e-15);
  EXPECT_NEAR(spectral_radius(Eigen::Vector3d(0.5, 0.9, 0.8).asDiagonal().toDenseMatrix()), 0.9, 1e-15);
  Eigen::Matrix3d rotation;
  rotation << 0, -1, 0, 1, 0, 0, 0, 0, 0.5;
  EXPECT_NEAR(spectral_radius(rotation), 1.0, 1e-14);
}

// For 100 random feasible configurations the system contracts, and under the
// rate precondition it contracts at least as fast as 1 - alpha mu / 3.
TEST(LtiSystem, RandomFeasibleConfigurationsContract) {
  RandomStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 2 + rng.index(15);
    const auto net = Network::analyze(
        column_stochastic_weights(build_geometric_digraph(n, 0.5 + 0.5 * rng.uniform(), 0.3, 500 + trial)));
    const double mu = 0.1 + rng.uniform();
    const double ell = mu * (1.0 + 9.0 * rng.uniform());
    const double bound = theorem1_step_bound(net.constants, net.perron, mu, ell);
    const double alpha = bound * (1.0 - rng.uniform());
    const auto sys = build_lti_system(alpha, net.constants, net.perron, mu, ell, 1.0, n);
    const double rho = spectral_radius(sys.a);
    ASSERT_LT(rho, 1.0) << "trial " << trial;
    if (alpha <= corollary1_step_bound(mu, net.perron.sigma_b)) {
      ASSERT_LE(rho, 1.0 - alpha * mu / 3.0 + 1e-12) << "trial " << trial;
    }
  }
}

struct ResidualOracle {
  double u1, u2, e;
};

ResidualOracle residual_oracle(const GraphConstants& g, const PerronData& p, double mu, double L,
                               double s2, double n, double a) {
  const double sb2 = p.sigma_b * p.sigma_b;
  const double ratio = std::pow(1 + sb2, 2) / std::pow(1 - sb2, 4);
  const double ym = g.y_minus, y = g.y_sup;
  const double term_fifth = std::pow(a, 5) * (std::pow(L, 4) * s2 / (n * mu)) * 216 *
                            std::pow(ym, 4) * y * y * ratio / p.pi_min;
  const double term_square = a * a * n * s2 * 48 * ratio / p.pi_min;
  const double inner = a * a * L * L * ym * ym * (1 + g.beta * p.sigma_b) * p.pi_max +
                       a * L * L * ym * ym * (1 + g.beta * p.sigma_b) * p.pi_max / mu;
  const double u2 = a * s2 / (n * mu) +
                    12 * a * std::pow(1 + sb2, 2) * inner * 4 * s2 * n / p.pi_min /
                        (n * mu * std::pow(1 - sb2, 4));
  const double u1 = term_fifth + term_square;
  return {u1, u2, 3 * ym * ym * p.pi_max / n * u1 + 3 * ym * ym * y * y * u2};
}

TEST(ResidualBall, NoiseFreeIsZero) {
  const auto net = two_node_network();
  const auto r = residual_ball_estimate(net.constants, net.perron, 1.0, 1.0, 0.0, 2, 1e-3);
  EXPECT_EQ(r.e_inf, 0.0);
}

TEST(ResidualBall, TwoNodeMatchesIndependentEvaluation) {
  const auto net = two_node_network();
  const auto r = residual_ball_estimate(net.constants, net.perron, 1.0, 1.0, 1.0, 2, 1e-3);
  const auto o = residual_oracle(net.constants, net.perron, 1.0, 1.0, 1.0, 2.0, 1e-3);
  EXPECT_NEAR(r.u1 / o.u1, 1.0, 1e-12);
  EXPECT_NEAR(r.u2 / o.u2, 1.0, 1e-12);
  EXPECT_NEAR(r.e_inf / o.e, 1.0, 1e-12);
}

TEST(ResidualBall, LeadingTermHalves) {
  const auto net = two_node_network();
  const auto& gc = net.constants;
  const double lead = [&](double a) {
    return a * 0.5 * 3.0 * gc.y_minus * gc.y_minus * gc.y_sup * gc.y_sup / (2.0 * 1.0);
  }(1e-4);
  const auto r = residual_ball_estimate(gc, net.perron, 1.0, 1.0, 0.5, 2, 1e-4);
  const auto r_half = residual_ball_estimate(gc, net.perron, 1.0, 1.0, 0.5, 2, 5e-5);
  EXPECT_NEAR(r.e_inf / lead, 1.0, 0.05);
  EXPECT_NEAR(r.e_inf / r_half.e_inf, 2.0, 0.1);
  EXPECT_GT(r.e_inf / r_half.e_inf, 2.0);
}

TEST(ResidualBall, DoublingStepRatio) {
  RandomStream rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = 2 + rng.index(10);
    const auto net = Network::analyze(
        column_stochastic_weights(build_geometric_digraph(n, 0.7, 0.2, 900 + trial)));
    const double mu = 0.5, ell = 0.5 + 2.0 * rng.uniform();
    const double bound = theorem1_step_bound(net.constants, net.perron, mu, ell);
    const double alpha = 0.5 * bound * (0.01 + 0.99 * rng.uniform());
    const double lo = residual_ball_estimate(net.constants, net.perron, mu, ell, 0.2, n, alpha).e_inf;
    const double hi = residual_ball_estimate(net.constants, net.perron, mu, ell, 0.2, n, 2 * alpha).e_inf;
    ASSERT_GT(hi / lo, 1.0);
    ASSERT_LT(hi / lo, 32.0);
  }
}

TEST(ResidualBall, RejectsInfeasibleStep) {
  const auto net = two_node_network();
  EXPECT_THROW(residual_ball_estimate(net.constants, net.perron, 1.0, 1.0, 1.0, 2, 0.1),
               std::invalid_argument);
  const auto rep = bound_report(net.constants, net.perron, 1.0, 1.0, 1.0, 2, 0.1);
  EXPECT_TRUE(std::isnan(rep.e_inf_bound));
  EXPECT_FALSE(std::isnan(rep.alpha_max_thm1));
}

TEST(McVerify, ConsensusAtOptimumStaysAtZero) {
  const auto net = Network::analyze(column_stochastic_weights(build_exponential_digraph(4)));
  const auto obj = scalar_quadratics({1.0, 1.0, 1.0, 1.0}, {2.0, 2.0, 2.0, 2.0}, 0.0);
  const auto ref = reference_solution(obj);
  const double alpha = theorem1_step_bound(net.constants, net.perron, 1.0, 1.0) / 2.0;
  const auto sys = build_lti_system(alpha, net.constants, net.perron, 1.0, 1.0, 0.0, 4);
  const auto v = mc_verify_lti(sys, net, obj, ref, StateMatrix::Constant(4, 1, 2.0), 1, 8, {0, 1, 5});
  EXPECT_TRUE(v.pass);
  for (const auto& c : v.checkpoints) {
    EXPECT_LE(c.t_k.cwiseAbs().maxCoeff(), 1e-28);
    EXPECT_LE(c.t_next.cwiseAbs().maxCoeff(), 1e-28);
  }
}

TEST(McVerify, SingleNodeHasOnlyOptimalityGap) {
  const auto net = Network::analyze(column_stochastic_weights(build_exponential_digraph(1)));
  const auto obj = scalar_quadratics({1.0}, {0.0}, 0.1);
  const auto ref = reference_solution(obj);
  const double alpha = theorem1_step_bound(net.constants, net.perron, 1.0, 1.0);
  const auto sys = build_lti_system(alpha, net.constants, net.perron, 1.0, 1.0, 0.1, 1);
  const auto v = mc_verify_lti(sys, net, obj, ref, StateMatrix::Constant(1, 1, 3.0), 2, 200,
                               {1, 5, 10});
  EXPECT_TRUE(v.pass);
  for (const auto& c : v.checkpoints) {
    EXPECT_LE(std::abs(c.t_k(0)), 1e-28);
    EXPECT_LE(std::abs(c.t_k(2)), 1e-28);
    EXPECT_GT(c.t_k(1), 0.0);
  }
}

TEST(McVerify, TwoNodeShortRun) {
  const auto net = two_node_network();
  const auto obj = scalar_quadratics({1.0, 1.0}, {1.0, 3.0}, 0.01);
  const auto ref = reference_solution(obj);
  const double alpha = theorem1_step_bound(net.constants, net.perron, 1.0, 1.0) / 2.0;
  const auto sys = build_lti_system(alpha, net.constants, net.perron, 1.0, 1.0, 0.01, 2);
  const auto v = mc_verify_lti(sys, net, obj, ref, StateMatrix::Zero(2, 1), 3, 200, {1, 2, 10});
  EXPECT_TRUE(v.pass);
  ASSERT_EQ(v.checkpoints.size(), 3u);
  EXPECT_EQ(v.checkpoints[1].k, 2);
}

// Second transcription of the decaying-step constants.
Theorem2Table theorem2_oracle(const Theorem2Inputs& in, const GraphConstants& g, const PerronData& p) {
  const double th = in.theta, m = in.m, mu = in.mu, L = in.ell, n = static_cast<double>(in.n);
  const double sb = p.sigma_b, s2 = sb * sb;
  const double q = (1 + s2) / (1 - s2), k1 = (1 - s2) / 3;
  const double ym = g.y_minus, y = g.y_sup, b = g.beta;
  const double k2 = 6 * L * L * q * ym * ym * g.h;
  const double frac = (2 * m * m * k1 - 3 * k2 * th * th) / (m * m * k1 - 2 * k2 * th * th);
  Theorem2Table t;
  t.e1 = (1 + b * sb) * ym * ym * p.pi_max;
  t.e2 = 4 * k2 + (2 * L * L * y * y * k2 * th * th / (m * m)) * frac * (1 + b * sb);
  t.e3 = 18 * q * std::pow(ym, 4) * y * y / p.pi_min;
  t.k3 = ym * ym * b * (b + 1);
  t.k1 = t.k3 * (th * L * L / (mu * m) + th * th * L * L / (m * m));
  t.k2 = 12 * L * L * q * std::pow(ym, 4) * b / p.pi_max *
         (2 * b + th * th * L * L * ym * ym * y * y * (b + 1) / (m * m) * frac);
  t.c0 = 4 * in.sigma2 * q / p.pi_min * (n + 3 * (th * th * L * L * std::pow(ym, 4) * y * y / (m * m)) * frac);
  t.d1 = (1 - s2) / (th * th * (1 + s2)) * ((1 - s2) / 2 - (2 * m + 1) / ((m + 1) * (m + 1)));
  t.d2 = 6 * t.e2 / (m * m * (1 - s2));
  t.d3 = 6 / (1 - s2) * (th * th * std::pow(L, 4) * t.e3 / std::pow(m, 3) * in.q0 + t.c0 + t.k2 * in.b_bound);
  t.d4 = 6 * t.e1 / (1 - s2) * (std::pow(th, 3) * std::pow(L, 6) * t.e3 / (std::pow(m, 4) * n * (th * mu - 1))) *
             (th / m + 1 / mu) + t.d2;
  t.d5 = 6 / (1 - s2) *
         (th * th * std::pow(L, 4) * t.e3 / (std::pow(m, 3) * n * (th * mu - 1)) *
              (th * th * in.sigma2 + n * m * m * t.k1 * in.b_bound) +
          t.c0 + t.k2 * in.b_bound);
  t.p_tilde = std::max({m * m * in.p0, in.r0 / t.d1, t.d3 / (t.d1 - t.d2), t.d5 / (t.d1 - t.d4)});
  t.d6 = 1 / (n * (th * mu - 1)) *
         ((th / m + 1 / mu) * (th * L * L * t.e1 / m) * t.p_tilde + th * th * in.sigma2 +
          n * m * m * t.k1 * in.b_bound);
  t.q_tilde = std::max(m * in.q0, t.d6);
  t.r_tilde = std::max(6 / (1 - s2) *
                           (t.e2 / (m * m) * t.p_tilde + th * th * std::pow(L, 4) * t.e3 / std::pow(m, 3) * t.q_tilde +
                            t.k2 * in.b_bound + t.c0),
                       in.r0);
  return t;
}

void expect_tables_match(const Theorem2Table& a, const Theorem2Table& b) {
  const auto close = [](double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y));
  };
  EXPECT_TRUE(close(a.c0, b.c0)) << a.c0 << " " << b.c0;
  EXPECT_TRUE(close(a.d1, b.d1));
  EXPECT_TRUE(close(a.d2, b.d2));
  EXPECT_TRUE(close(a.d3, b.d3));
  EXPECT_TRUE(close(a.d4, b.d4));
  EXPECT_TRUE(close(a.d5, b.d5));
  EXPECT_TRUE(close(a.d6, b.d6));
  EXPECT_TRUE(close(a.e1, b.e1));
  EXPECT_TRUE(close(a.e2, b.e2));
  EXPECT_TRUE(close(a.e3, b.e3));
  EXPECT_TRUE(close(a.k1, b.k1));
  EXPECT_TRUE(close(a.k2, b.k2));
  EXPECT_TRUE(close(a.k3, b.k3));
  EXPECT_TRUE(close(a.p_tilde, b.p_tilde));
  EXPECT_TRUE(close(a.q_tilde, b.q_tilde));
  EXPECT_TRUE(close(a.r_tilde, b.r_tilde));
}

Theorem2Inputs two_node_inputs(const Network& net) {
  Theorem2Inputs in;
  in.mu = 1.0;
  in.ell = 1.5;
  in.theta = 2.0;
  in.m = minimal_valid_m(in.theta, net.constants, net.perron, in.mu, in.ell, 2);
  in.sigma2 = 0.01;
  in.n = 2;
  in.b_bound = 12.0;
  in.p0 = 0.3;
  in.q0 = 4.0;
  in.r0 = 2.5;
  return in;
}

TEST(DecayingStepTable, TwoNodeTableMatchesOracle) {
  const auto net = two_node_network();
  const auto in = two_node_inputs(net);
  const auto t = theorem2_table(in, net.constants, net.perron);
  EXPECT_TRUE(t.m_ok);
  EXPECT_TRUE(t.determinant_condition_ok);
  EXPECT_GT(t.e1, 0.0);
  EXPECT_GT(t.e3, 0.0);
  expect_tables_match(t, theorem2_oracle(in, net.constants, net.perron));
  EXPECT_NEAR(t.k1, t.k3 * (in.theta * 2.25 / in.m + 4.0 * 2.25 / (in.m * in.m)), 1e-12 * t.k1);
  EXPECT_EQ(t.s_tilde, find_s_tilde(net.perron.sigma_b, 2, in.m));
}

TEST(DecayingStepTable, DoublyStochasticZeroesTransientConstants) {
  const auto net = Network::analyze(column_stochastic_weights(build_exponential_digraph(4)));
  Theorem2Inputs in;
  in.mu = 1.0;
  in.ell = 1.0;
  in.theta = 2.0;
  in.n = 4;
  in.m = minimal_valid_m(in.theta, net.constants, net.perron, in.mu, in.ell, in.n);
  const auto t = theorem2_table(in, net.constants, net.perron);
  EXPECT_NEAR(t.k1, 0.0, 1e-9);
  EXPECT_NEAR(t.k2, 0.0, 1e-9);
  EXPECT_NEAR(t.k3, 0.0, 1e-9);
  EXPECT_NEAR(t.e1, 0.25, 1e-12);
}

TEST(DecayingStepTable, PerfectMixingTrackingConstant) {
  // sigma_B = 0 gives q = 1, k1 = 1/3 and k2 = 6 ell^2 y_-^2 h.
  IdealGraph ideal(2);
  Theorem2Inputs in;
  in.mu = 1.0;
  in.ell = 1.0;
  in.theta = 2.0;
  in.m = 400.0;
  in.n = 2;
  const auto t = theorem2_table(in, ideal.gc, ideal.pd);
  const double k2 = 6.0;
  const double frac = (2.0 * in.m * in.m / 3.0 - 3.0 * k2 * 4.0) / (in.m * in.m / 3.0 - 2.0 * k2 * 4.0);
  EXPECT_NEAR(t.e2, 4.0 * k2 + (2.0 * k2 * 4.0 / (in.m * in.m)) * frac, 1e-12);
  EXPECT_NEAR(t.e2, 4.0 * k2, 0.01);
  EXPECT_EQ(t.s_tilde, 0);
}

TEST(DecayingStepTable, RejectsSlowSchedule) {
  const auto net = two_node_network();
  auto in = two_node_inputs(net);
  in.theta = 1.0;
  EXPECT_THROW(theorem2_table(in, net.constants, net.perron), std::invalid_argument);
  EXPECT_THROW(minimal_valid_m(0.5, net.constants, net.perron, 1.0, 1.0, 2), std::invalid_argument);
}

TEST(DecayingStepTable, MinimalMIsTight) {
  RandomStream rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 2 + rng.index(10);
    const auto net = Network::analyze(
        column_stochastic_weights(build_geometric_digraph(n, 0.7, 0.2, 300 + trial)));
    Theorem2Inputs in;
    in.mu = 0.5 + rng.uniform();
    in.ell = in.mu * (1.0 + 3.0 * rng.uniform());
    in.theta = (1.0 + 2.0 * rng.uniform()) / in.mu + 1e-3;
    in.n = n;
    in.m = minimal_valid_m(in.theta, net.constants, net.perron, in.mu, in.ell, n);
    const auto t = theorem2_table(in, net.constants, net.perron);
    ASSERT_TRUE(t.m_ok && t.determinant_condition_ok) << "trial " << trial;
    ASSERT_TRUE(std::isfinite(t.p_tilde));
    in.m -= 1.0;
    if (in.m >= 1.0) {
      const auto below = theorem2_table(in, net.constants, net.perron);
      ASSERT_FALSE(below.m_ok && below.determinant_condition_ok) << "trial " << trial;
    }
  }
}

std::int64_t scan_s_tilde(double sigma, double n, double m) {
  // Smallest k0 after which the condition never fails again, up to a far horizon.
  std::int64_t last_fail = -1;
  for (std::int64_t k = 0; k < 200000; ++k) {
    if (std::pow(sigma, static_cast<double>(k)) > 1.0 / (n * (m + k) * (m + k))) last_fail = k;
  }
  return last_fail + 1;
}

TEST(STilde, Examples) {
  EXPECT_EQ(find_s_tilde(0.5, 2, 4.0), 9);
  EXPECT_EQ(find_s_tilde(1e-9, 1, 1.0), 0);
  EXPECT_EQ(find_s_tilde(0.0, 5, 3.0), 0);
  EXPECT_EQ(find_s_tilde(0.99, 100, 10.0), scan_s_tilde(0.99, 100, 10.0));
  EXPECT_THROW(find_s_tilde(1.0, 2, 1.0), std::invalid_argument);
}

TEST(STilde, MatchesScanAndIsMonotone) {
  RandomStream rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const double sigma = 0.05 + 0.9 * rng.uniform();
    const auto n = 1 + rng.index(50);
    const double m = 1.0 + 50.0 * rng.uniform();
    ASSERT_EQ(find_s_tilde(sigma, n, m), scan_s_tilde(sigma, static_cast<double>(n), m));
  }
  std::int64_t prev = 0;
  for (double sigma = 0.01; sigma < 0.995; sigma += 0.01) {
    const auto s = find_s_tilde(sigma, 10, 5.0);
    ASSERT_GE(s, prev);
    prev = s;
  }
}

}  // namespace
}  // namespace saddopt
