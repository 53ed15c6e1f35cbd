#include "saddopt/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace saddopt {

namespace {

constexpr std::array<std::pair<Metric, std::string_view>, 6> kMetricNames{{
    {Metric::AgreementPi2, "agreement_pi2"},
    {Metric::OptGap2, "opt_gap2"},
    {Metric::TrackPi2, "track_pi2"},
    {Metric::Ek, "e_k"},
    {Metric::FBarGap, "F_bar_gap"},
    {Metric::XNorm2, "x_norm2"},
}};

}  // namespace

std::string_view metric_name(Metric m) {
  for (const auto& [metric, name] : kMetricNames) {
    if (metric == m) return name;
  }
  return "unknown";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (const auto& [metric, n] : kMetricNames) {
    if (n == name) return metric;
  }
  return std::nullopt;
}

double metric_value(const MetricsRow& row, Metric m) {
  switch (m) {
    case Metric::AgreementPi2: return row.agreement_pi2;
    case Metric::OptGap2: return row.opt_gap2;
    case Metric::TrackPi2: return row.track_pi2;
    case Metric::Ek: return row.e_k;
    case Metric::FBarGap: return row.f_bar_gap;
    case Metric::XNorm2: return row.x_norm2;
  }
  return 0.0;
}

double blockwise_pi_norm2(const StateMatrix& x, const Eigen::VectorXd& pi) {
  if (x.rows() != pi.size()) throw std::invalid_argument("blockwise_pi_norm2: dimension mismatch");
  return (x.rowwise().squaredNorm().array() / pi.array()).sum();
}

StateMatrix consensus_deviation(const StateMatrix& x, const Eigen::VectorXd& pi) {
  const Eigen::RowVectorXd total = x.colwise().sum();
  return x - pi * total;
}

MetricsRow compute_metrics(const NodeStates& s, const PerronData& pd, const ReferenceSolution& ref,
                           const Objective& obj) {
  MetricsRow row;
  const auto n = static_cast<double>(s.nodes());
  row.agreement_pi2 = blockwise_pi_norm2(consensus_deviation(s.x, pd.pi), pd.pi);
  row.track_pi2 = blockwise_pi_norm2(consensus_deviation(s.w, pd.pi), pd.pi);
  const Eigen::VectorXd x_bar = s.x.colwise().mean().transpose();
  row.opt_gap2 = (x_bar - ref.z_star).squaredNorm();
  row.e_k = (s.z.rowwise() - ref.z_star.transpose()).squaredNorm() / n;
  row.f_bar_gap = obj.value(x_bar) - ref.f_star;
  row.x_norm2 = s.x.squaredNorm();
  return row;
}

SlopeFit fit_loglog_slope(const Series& series, double k_lo, double k_hi, double offset) {
  if (!(k_hi > k_lo)) throw std::invalid_argument("fit_loglog_slope: need k_hi > k_lo");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < series.k.size(); ++i) {
    const double k = series.k[i];
    if (k < k_lo || k > k_hi) continue;
    const double v = series.value[i];
    if (!(v > 0.0)) {
      throw std::invalid_argument("fit_loglog_slope: non-positive value at k = " + std::to_string(k));
    }
    if (!(offset + k > 0.0)) throw std::invalid_argument("fit_loglog_slope: offset + k must be > 0");
    const double lx = std::log(offset + k);
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
    ++count;
  }
  if (count < 2) throw std::invalid_argument("fit_loglog_slope: fewer than two points in window");
  const double c = static_cast<double>(count);
  const double vxx = sxx - sx * sx / c;
  const double vxy = sxy - sx * sy / c;
  const double vyy = syy - sy * sy / c;
  if (vxx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissa");
  SlopeFit fit;
  fit.points = count;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / c;
  fit.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

namespace {

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments moments(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  Moments m;
  const auto count = end - begin;
  if (count == 0) return m;
  double sum = 0.0;
  for (auto i = begin; i < end; ++i) sum += v[i];
  m.mean = sum / static_cast<double>(count);
  if (count > 1) {
    double ss = 0.0;
    for (auto i = begin; i < end; ++i) ss += (v[i] - m.mean) * (v[i] - m.mean);
    m.std_error = std::sqrt(ss / static_cast<double>(count - 1) / static_cast<double>(count));
  }
  return m;
}

}  // namespace

Plateau plateau_estimate(const Series& series, double tail_fraction) {
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
    throw std::invalid_argument("plateau_estimate: tail_fraction must lie in (0, 1]");
  }
  const auto total = series.value.size();
  if (total == 0) throw std::invalid_argument("plateau_estimate: empty series");
  auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(total)));
  tail = std::max<std::size_t>(1, std::min(tail, total));
  const auto begin = total - tail;
  const auto all = moments(series.value, begin, total);
  Plateau p;
  p.mean = all.mean;
  p.std_error = all.std_error;
  p.points = tail;
  if (tail >= 4) {
    const auto mid = begin + tail / 2;
    const auto first = moments(series.value, begin, mid);
    const auto second = moments(series.value, mid, total);
    const double drift = std::abs(second.mean - first.mean);
    const double noise = std::hypot(first.std_error, second.std_error);
    p.drifting = drift > 0.1 * std::abs(all.mean) && drift > 3.0 * noise;
  }
  return p;
}

InequalityCheck lemma2_check(const NodeStates& s, const PerronData& pd, const GraphConstants& gc,
                             const ReferenceSolution& ref) {
  const auto n = static_cast<double>(s.nodes());
  const double psi = 2.0 * gc.y_minus * gc.y_minus * pd.pi_max * (1.0 + gc.beta) / n;
  const double e_k = (s.z.rowwise() - ref.z_star.transpose()).squaredNorm() / n;
  const double agreement = blockwise_pi_norm2(consensus_deviation(s.x, pd.pi), pd.pi);
  const double x_pi2 = blockwise_pi_norm2(s.x, pd.pi);
  const Eigen::VectorXd x_bar = s.x.colwise().mean().transpose();
  const double rhs = psi * agreement +
                     psi * gc.beta * std::pow(pd.sigma_b, static_cast<double>(s.k)) * x_pi2 +
                     2.0 * (x_bar - ref.z_star).squaredNorm();
  InequalityCheck check;
  check.slack = rhs - e_k;
  check.pass = check.slack >= -1e-9;
  return check;
}

}  // namespace saddopt
