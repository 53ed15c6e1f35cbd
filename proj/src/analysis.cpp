#include "saddopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "saddopt/parallel.hpp"

namespace saddopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_curvature(double mu, double ell) {
  if (!(mu > 0.0) || !(ell >= mu)) throw std::invalid_argument("need 0 < mu <= ell");
}

}  // namespace

double theorem1_step_bound(const GraphConstants& gc, const PerronData& pd, double mu, double ell) {
  check_curvature(mu, ell);
  const double s2 = pd.sigma_b * pd.sigma_b;
  const double kappa = ell / mu;
  return (1.0 / (ell * std::sqrt(kappa))) * (1.0 - s2) * (1.0 - s2) / (51.0 * std::sqrt(gc.tau));
}

double corollary1_step_bound(double mu, double sigma_b) {
  if (!(mu > 0.0)) throw std::invalid_argument("need mu > 0");
  return (3.0 / 40.0) * (1.0 - sigma_b * sigma_b) / mu;
}

double corollary1_rate(double alpha, double mu, double sigma_b) {
  const double bound = corollary1_step_bound(mu, sigma_b);
  if (alpha < 0.0) throw std::invalid_argument("corollary1_rate: alpha must be >= 0");
  if (alpha > bound) {
    throw std::invalid_argument("corollary1_rate: alpha = " + std::to_string(alpha) +
                                " exceeds the rate precondition (3/40)(1 - sigma_B^2)/mu = " +
                                std::to_string(bound));
  }
  return 1.0 - alpha * mu / 3.0;
}

Eigen::Matrix3d LtiSystem::h(std::int64_t k) const {
  Eigen::Matrix3d out = Eigen::Matrix3d::Zero();
  const double decay = std::pow(sigma_b, static_cast<double>(k));
  out(1, 0) = constants.h1 * decay;
  out(2, 0) = (constants.h2 + alpha * alpha * constants.h3) * decay;
  return out;
}

LtiSystem build_lti_system(double alpha, const GraphConstants& gc, const PerronData& pd, double mu,
                           double ell, double sigma2, std::size_t n) {
  check_curvature(mu, ell);
  if (!(alpha > 0.0)) throw std::invalid_argument("build_lti_system: alpha must be > 0");
  if (!(pd.sigma_b < 1.0)) throw std::invalid_argument("build_lti_system: sigma_B must be < 1");
  if (n == 0) throw std::invalid_argument("build_lti_system: n must be >= 1");

  const double sb = pd.sigma_b;
  const double s2 = sb * sb;
  const double nn = static_cast<double>(n);
  const double ym = gc.y_minus, ym2 = ym * ym, ym4 = ym2 * ym2, ym6 = ym4 * ym2;
  const double y2 = gc.y_sup * gc.y_sup;
  const double l2 = ell * ell, l4 = l2 * l2;
  const double a2 = alpha * alpha;
  const double beta = gc.beta;

  LtiConstants k;
  k.q = (1.0 + s2) / (1.0 - s2);
  k.k1 = (1.0 - s2) / 3.0;
  k.k2 = 6.0 * l2 * k.q * ym2 * gc.h;
  if (!(a2 < k.k1 / (2.0 * k.k2))) {
    throw std::invalid_argument("build_lti_system: alpha = " + std::to_string(alpha) +
                                " violates alpha^2 < k1 / (2 k2) = " +
                                std::to_string(k.k1 / (2.0 * k.k2)));
  }
  k.k3 = (2.0 * k.k1 - 3.0 * k.k2 * a2) / (k.k1 - 2.0 * k.k2 * a2);
  k.g1 = (l2 * ym2 / nn) * (1.0 + beta * sb) * pd.pi_max;
  k.g2 = k.g1 / mu;
  k.g3 = 4.0 * k.k2;
  k.g4 = 2.0 * l2 * y2 * k.k2 * k.k3 * (1.0 + beta * sb);
  k.g5 = 18.0 * l4 * k.q * ym4 * y2 / pd.pi_min;
  k.c1 = 4.0 * k.q * nn / pd.pi_min;
  k.c2 = 12.0 * l2 * k.q * ym4 * y2 * k.k3 / pd.pi_min;
  k.c_sigma = sigma2 * (k.c1 + a2 * k.c2);
  k.h1 = ym2 * beta * (alpha * l2 / mu + a2 * l2) * (beta + 1.0);
  k.h2 = 24.0 * l2 * k.q * ym4 * beta * beta / pd.pi_min;
  k.h3 = 12.0 * l4 * k.q * ym6 * y2 * k.k3 * beta * (beta + 1.0) / pd.pi_min;

  LtiSystem sys;
  sys.alpha = alpha;
  sys.sigma_b = sb;
  sys.constants = k;
  sys.a(0, 0) = (1.0 + s2) / 2.0;
  sys.a(0, 2) = a2 * k.q;
  sys.a(1, 0) = a2 * k.g1 + alpha * k.g2;
  sys.a(1, 1) = 1.0 - alpha * mu;
  sys.a(2, 0) = k.g3 + a2 * k.g4;
  sys.a(2, 1) = a2 * k.g5;
  sys.a(2, 2) = (5.0 + s2) / 6.0;
  sys.c = Eigen::Vector3d(0.0, a2 * sigma2 / nn, k.c_sigma);
  sys.derivation_regime = alpha <= (1.0 - s2) / (9.0 * ell * ym * std::sqrt(gc.h));
  return sys;
}

double spectral_radius(const Eigen::Matrix3d& a) {
  Eigen::EigenSolver<Eigen::Matrix3d> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

ResidualBall residual_ball_estimate(const GraphConstants& gc, const PerronData& pd, double mu,
                                    double ell, double sigma2, std::size_t n, double alpha) {
  const double bound = theorem1_step_bound(gc, pd, mu, ell);
  if (!(alpha > 0.0) || alpha > bound) {
    throw std::invalid_argument("residual_ball_estimate: alpha = " + std::to_string(alpha) +
                                " outside (0, " + std::to_string(bound) + "]");
  }
  const double s2 = pd.sigma_b * pd.sigma_b;
  const double nn = static_cast<double>(n);
  const double ym2 = gc.y_minus * gc.y_minus, ym4 = ym2 * ym2;
  const double y2 = gc.y_sup * gc.y_sup;
  const double l2 = ell * ell, l4 = l2 * l2;
  const double spread = (1.0 + s2) * (1.0 + s2) / std::pow(1.0 - s2, 4);
  const double mix = 1.0 + gc.beta * pd.sigma_b;

  ResidualBall r;
  r.u1 = std::pow(alpha, 5) * (l4 * sigma2 / (nn * mu)) * 216.0 * ym4 * y2 / pd.pi_min * spread +
         alpha * alpha * nn * sigma2 * 48.0 / pd.pi_min * spread;
  r.u2 = alpha * sigma2 / (nn * mu) +
         12.0 * alpha * (1.0 + s2) * (1.0 + s2) *
             (alpha * alpha * l2 * ym2 * mix * pd.pi_max + alpha * l2 * ym2 * mix * pd.pi_max / mu) *
             4.0 * sigma2 * nn / pd.pi_min / (nn * mu * std::pow(1.0 - s2, 4));
  r.e_inf = (3.0 * ym2 * pd.pi_max / nn) * r.u1 + 3.0 * ym2 * y2 * r.u2;
  return r;
}

BoundReport bound_report(const GraphConstants& gc, const PerronData& pd, double mu, double ell,
                         double sigma2, std::size_t n, double alpha) {
  BoundReport rep;
  rep.alpha = alpha;
  rep.alpha_max_thm1 = theorem1_step_bound(gc, pd, mu, ell);
  rep.alpha_max_cor1 = corollary1_step_bound(mu, pd.sigma_b);
  rep.gamma_bound = (alpha >= 0.0 && alpha <= rep.alpha_max_cor1) ? 1.0 - alpha * mu / 3.0 : kNaN;
  try {
    rep.rho_a = spectral_radius(build_lti_system(alpha, gc, pd, mu, ell, sigma2, n).a);
  } catch (const std::invalid_argument&) {
    rep.rho_a = kNaN;
  }
  if (alpha > 0.0 && alpha <= rep.alpha_max_thm1) {
    const auto ball = residual_ball_estimate(gc, pd, mu, ell, sigma2, n, alpha);
    rep.residual_u1 = ball.u1;
    rep.residual_u2 = ball.u2;
    rep.e_inf_bound = ball.e_inf;
  } else {
    rep.residual_u1 = rep.residual_u2 = rep.e_inf_bound = kNaN;
  }
  return rep;
}

LtiVerification mc_verify_lti(const LtiSystem& lti, const Network& net, const Objective& obj,
                              const ReferenceSolution& ref, const StateMatrix& x0,
                              std::uint64_t seed, std::size_t replicas,
                              std::vector<std::int64_t> checkpoints, unsigned threads) {
  if (replicas < 2) throw std::invalid_argument("mc_verify_lti: need at least two replicas");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.empty() || checkpoints.front() < 0) {
    throw std::invalid_argument("mc_verify_lti: checkpoints must be non-empty and >= 0");
  }
  const std::size_t cp = checkpoints.size();
  const std::int64_t last = checkpoints.back() + 1;

  // Per replica and checkpoint: t_k (3), t_{k+1} (3), s_k (1).
  std::vector<double> samples(replicas * cp * 7, 0.0);
  parallel_for(
      replicas,
      [&](std::size_t r) {
        RandomStream rng(seed, r);
        NodeStates s = init_states(obj, x0, &rng);
        std::size_t next = 0;
        double* out = &samples[r * cp * 7];
        auto capture = [&](double* dst) {
          const auto m = compute_metrics(s, net.perron, ref, obj);
          dst[0] = m.agreement_pi2;
          dst[1] = m.opt_gap2;
          dst[2] = m.track_pi2;
        };
        for (;;) {
          if (next < cp && s.k == checkpoints[next]) {
            capture(out + next * 7);
            out[next * 7 + 6] = s.x.squaredNorm();
          }
          if (next < cp && s.k == checkpoints[next] + 1) {
            capture(out + next * 7 + 3);
            ++next;
            // Adjacent checkpoints share a state.
            if (next < cp && s.k == checkpoints[next]) continue;
          }
          if (s.k >= last) break;
          saddopt_step(s, net.weights, lti.alpha, obj, rng);
        }
      },
      threads);

  LtiVerification out;
  out.replicas = replicas;
  const double rr = static_cast<double>(replicas);
  for (std::size_t c = 0; c < cp; ++c) {
    LtiCheckpoint res;
    res.k = checkpoints[c];
    const Eigen::Matrix3d hk = lti.h(res.k);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d sum_sq = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Zero();
    for (std::size_t r = 0; r < replicas; ++r) {
      const double* row = &samples[(r * cp + c) * 7];
      const Eigen::Vector3d t(row[0], row[1], row[2]);
      const Eigen::Vector3d t_next(row[3], row[4], row[5]);
      const Eigen::Vector3d s_vec(row[6], 0.0, 0.0);
      const Eigen::Vector3d pred = lti.a * t + hk * s_vec;
      const Eigen::Vector3d d = t_next - pred;
      res.t_k += t;
      res.t_next += t_next;
      res.s_k += row[6];
      sum += d;
      sum_sq += d.cwiseProduct(d);
      scale += t_next.cwiseAbs() + pred.cwiseAbs();
    }
    res.t_k /= rr;
    res.t_next /= rr;
    res.s_k /= rr;
    res.mean_excess = sum / rr;
    const Eigen::Vector3d var =
        ((sum_sq - rr * res.mean_excess.cwiseProduct(res.mean_excess)) / (rr - 1.0)).cwiseMax(0.0);
    res.std_error = (var / rr).cwiseSqrt();
    // Rounding in the replica sums is far below 1e-12 of their magnitude.
    res.allowance = lti.c + 3.0 * res.std_error + 1e-12 * scale / rr;
    res.pass = (res.mean_excess.array() <= res.allowance.array()).all();
    out.pass = out.pass && res.pass;
    out.checkpoints.push_back(res);
  }
  return out;
}

namespace {

struct DecayCore {
  double s2, q, k1, k2, ratio, e1, e2, e3, d1, d2, d4;
};

DecayCore decay_core(double theta, double m, const GraphConstants& gc, const PerronData& pd,
                     double mu, double ell, std::size_t n) {
  DecayCore c{};
  const double sb = pd.sigma_b;
  c.s2 = sb * sb;
  const double ym2 = gc.y_minus * gc.y_minus, ym4 = ym2 * ym2;
  const double y2 = gc.y_sup * gc.y_sup;
  const double l2 = ell * ell, l4 = l2 * l2, l6 = l4 * l2;
  const double t2 = theta * theta, m2 = m * m;
  const double nn = static_cast<double>(n);
  c.q = (1.0 + c.s2) / (1.0 - c.s2);
  c.k1 = (1.0 - c.s2) / 3.0;
  c.k2 = 6.0 * l2 * c.q * ym2 * gc.h;
  c.ratio = (2.0 * m2 * c.k1 - 3.0 * c.k2 * t2) / (m2 * c.k1 - 2.0 * c.k2 * t2);
  c.e1 = (1.0 + gc.beta * sb) * ym2 * pd.pi_max;
  c.e2 = 4.0 * c.k2 + (2.0 * l2 * y2 * c.k2 * t2 / m2) * c.ratio * (1.0 + gc.beta * sb);
  c.e3 = 18.0 * c.q * ym4 * y2 / pd.pi_min;
  c.d1 = ((1.0 - c.s2) / (t2 * (1.0 + c.s2))) *
         ((1.0 - c.s2) / 2.0 - (2.0 * m + 1.0) / ((m + 1.0) * (m + 1.0)));
  c.d2 = 6.0 * c.e2 / (m2 * (1.0 - c.s2));
  c.d4 = (6.0 * c.e1 / (1.0 - c.s2)) *
             (theta * t2 * l6 * c.e3 / (m2 * m2 * nn * (theta * mu - 1.0))) * (theta / m + 1.0 / mu) +
         c.d2;
  return c;
}

bool m_conditions(double theta, double m, const GraphConstants& gc, const PerronData& pd, double mu,
                  double ell) {
  const double s2 = pd.sigma_b * pd.sigma_b;
  const double first = theta * (ell + mu) / 2.0;
  const double second = 6.0 * ell * theta * gc.y_minus * std::sqrt((1.0 + s2) * gc.h) / (1.0 - s2);
  return m > first && m > second;
}

void check_theta(double theta, double mu) {
  if (!(theta * mu > 1.0)) {
    throw std::invalid_argument("decaying schedule needs theta > 1/mu (theta mu = " +
                                std::to_string(theta * mu) + ")");
  }
}

}  // namespace

Theorem2Table theorem2_table(const Theorem2Inputs& in, const GraphConstants& gc,
                             const PerronData& pd) {
  check_curvature(in.mu, in.ell);
  check_theta(in.theta, in.mu);
  if (!(in.m >= 1.0)) throw std::invalid_argument("theorem2_table: m must be >= 1");

  const double theta = in.theta, m = in.m, mu = in.mu, ell = in.ell;
  const double t2 = theta * theta, m2 = m * m, m3 = m2 * m;
  const double nn = static_cast<double>(in.n);
  const double ym2 = gc.y_minus * gc.y_minus, ym4 = ym2 * ym2;
  const double y2 = gc.y_sup * gc.y_sup;
  const double l2 = ell * ell, l4 = l2 * l2;
  const double beta = gc.beta;
  const double b = in.b_bound;
  const double excess = theta * mu - 1.0;
  const auto core = decay_core(theta, m, gc, pd, mu, ell, in.n);
  const double front = 6.0 / (1.0 - core.s2);

  Theorem2Table t;
  t.m_ok = m_conditions(theta, m, gc, pd, mu, ell);
  t.e1 = core.e1;
  t.e2 = core.e2;
  t.e3 = core.e3;
  t.c0 = 4.0 * in.sigma2 * core.q / pd.pi_min *
         (nn + 3.0 * (t2 * l2 * ym4 * y2 / m2) * core.ratio);
  t.k3 = ym2 * beta * (beta + 1.0);
  t.k1 = t.k3 * (theta * l2 / (mu * m) + t2 * l2 / m2);
  t.k2 = (12.0 * l2 * core.q * ym4 * beta / pd.pi_max) *
         (2.0 * beta + (t2 * l2 * ym2 * y2 * (beta + 1.0) / m2) * core.ratio);
  t.d1 = core.d1;
  t.d2 = core.d2;
  t.d4 = core.d4;
  t.d3 = front * ((t2 * l4 * t.e3 / m3) * in.q0 + t.c0 + t.k2 * b);
  t.d5 = front * ((t2 * l4 * t.e3 / (m3 * nn * excess)) * (t2 * in.sigma2 + nn * m2 * t.k1 * b) +
                  t.c0 + t.k2 * b);
  t.determinant_condition_ok = t.d1 > t.d4;

  const double inf = std::numeric_limits<double>::infinity();
  const double via_d2 = t.d1 > t.d2 ? t.d3 / (t.d1 - t.d2) : inf;
  const double via_d4 = t.d1 > t.d4 ? t.d5 / (t.d1 - t.d4) : inf;
  const double via_r0 = t.d1 > 0.0 ? in.r0 / t.d1 : inf;
  t.p_tilde = std::max({m2 * in.p0, via_r0, via_d2, via_d4});
  t.d6 = (1.0 / (nn * excess)) *
         ((theta / m + 1.0 / mu) * (theta * l2 * t.e1 / m) * t.p_tilde + t2 * in.sigma2 +
          nn * m2 * t.k1 * b);
  t.q_tilde = std::max(m * in.q0, t.d6);
  t.r_tilde = std::max(front * ((t.e2 / m2) * t.p_tilde + (t2 * l4 * t.e3 / m3) * t.q_tilde +
                                t.k2 * b + t.c0),
                       in.r0);
  t.r_tilde_consistent = std::isfinite(t.p_tilde) && t.r_tilde <= t.d1 * t.p_tilde;
  t.s_tilde = find_s_tilde(pd.sigma_b, in.n, m);
  return t;
}

std::int64_t find_s_tilde(double sigma_b, std::size_t n, double m) {
  if (!(sigma_b >= 0.0) || !(sigma_b < 1.0)) {
    throw std::invalid_argument("find_s_tilde: sigma_B must lie in [0, 1)");
  }
  if (n == 0) throw std::invalid_argument("find_s_tilde: n must be >= 1");
  if (sigma_b == 0.0) return 0;
  const double log_sigma = std::log(sigma_b);
  const double log_n = std::log(static_cast<double>(n));
  // g(k) = k ln sigma + ln n + 2 ln(m + k) is concave; the condition is g <= 0.
  auto violated = [&](double k) { return k * log_sigma + log_n + 2.0 * std::log(m + k) > 0.0; };
  const double peak = -2.0 / log_sigma - m;
  double k = std::max(0.0, std::ceil(peak));
  const double before = std::max(0.0, std::floor(peak));
  if (!violated(k) && !violated(before)) return 0;
  while (violated(k)) k += 1.0;
  return static_cast<std::int64_t>(k);
}

double minimal_valid_m(double theta, const GraphConstants& gc, const PerronData& pd, double mu,
                       double ell, std::size_t n) {
  check_curvature(mu, ell);
  check_theta(theta, mu);
  const double s2 = pd.sigma_b * pd.sigma_b;
  const double lower = std::max({1.0, theta * (ell + mu) / 2.0,
                                 6.0 * ell * theta * gc.y_minus * std::sqrt((1.0 + s2) * gc.h) /
                                     (1.0 - s2)});
  auto ok = [&](double m) {
    if (!m_conditions(theta, m, gc, pd, mu, ell)) return false;
    const auto core = decay_core(theta, m, gc, pd, mu, ell, n);
    return core.d1 > core.d4;
  };
  double lo = std::floor(lower);  // fails or is below the admissible range
  double hi = lo + 1.0;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) throw std::invalid_argument("minimal_valid_m: no admissible m below 1e15");
  }
  while (hi - lo > 1.0) {
    const double mid = std::floor((lo + hi) / 2.0);
    if (ok(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace saddopt
