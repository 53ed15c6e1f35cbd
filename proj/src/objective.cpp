#include "saddopt/objective.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "saddopt/error.hpp"

namespace saddopt {

namespace {

// ln(1 + exp(u)) without overflow.
double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

Objective Objective::quadratic(std::vector<QuadraticCost> costs, double noise_sigma2) {
  if (costs.empty()) throw std::invalid_argument("quadratic objective needs at least one node");
  if (!(noise_sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be >= 0");
  const auto p = costs.front().center.size();
  if (p == 0) throw std::invalid_argument("quadratic objective needs dim >= 1");
  for (const auto& c : costs) {
    if (c.center.size() != p || c.q.rows() != p || c.q.cols() != p) {
      throw std::invalid_argument("quadratic costs must share one dimension");
    }
    if (!c.q.isApprox(c.q.transpose(), 1e-12)) {
      throw std::invalid_argument("quadratic cost matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.q, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("quadratic cost matrix must be positive definite");
    }
  }
  Objective obj;
  obj.kind_ = Kind::Quadratic;
  obj.n_ = costs.size();
  obj.dim_ = static_cast<std::size_t>(p);
  obj.noise_sigma2_ = noise_sigma2;
  obj.quad_ = std::move(costs);
  return obj;
}

Objective Objective::logistic(const std::vector<Dataset>& shards, double lambda) {
  if (shards.empty()) throw std::invalid_argument("logistic objective needs at least one node");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  std::optional<Eigen::Index> features;
  Objective obj;
  obj.kind_ = Kind::Logistic;
  obj.n_ = shards.size();
  obj.lambda_ = lambda;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    const auto& data = shards[i];
    if (data.empty()) {
      throw std::invalid_argument("node " + std::to_string(i) + " has an empty local dataset");
    }
    LogisticShard shard;
    const auto m = static_cast<Eigen::Index>(data.size());
    const auto d = data.front().features.size();
    if (features && *features != d) throw std::invalid_argument("feature width differs across nodes");
    features = d;
    shard.design.resize(m, d + 1);
    shard.labels.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& s = data[static_cast<std::size_t>(j)];
      if (s.features.size() != d) throw std::invalid_argument("inconsistent feature width");
      if (s.label != 1.0 && s.label != -1.0) throw std::invalid_argument("labels must be +1 or -1");
      shard.design.row(j).head(d) = s.features.transpose();
      shard.design(j, d) = 1.0;
      shard.labels(j) = s.label;
    }
    obj.shards_.push_back(std::move(shard));
  }
  obj.dim_ = static_cast<std::size_t>(*features + 1);
  return obj;
}

std::size_t Objective::local_samples(std::size_t node) const {
  if (kind_ == Kind::Quadratic) return 1;
  return static_cast<std::size_t>(shards_.at(node).labels.size());
}

std::size_t Objective::total_samples() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < n_; ++i) total += local_samples(i);
  return total;
}

double Objective::local_value(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (kind_ == Kind::Quadratic) {
    const auto& c = quad_.at(node);
    const Eigen::VectorXd d = z - c.center;
    return 0.5 * d.dot(c.q * d);
  }
  const auto& s = shards_.at(node);
  const Eigen::VectorXd margin = (s.design * z).cwiseProduct(s.labels);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < margin.size(); ++j) loss += softplus(-margin(j));
  const auto b = z.head(z.size() - 1);
  return loss / static_cast<double>(margin.size()) + 0.5 * lambda_ * b.squaredNorm();
}

double Objective::value(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  double total = 0.0;
  for (std::size_t i = 0; i < n_; ++i) total += local_value(i, z);
  return total / static_cast<double>(n_);
}

void Objective::exact_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                               Eigen::Ref<Eigen::VectorXd> out) const {
  if (kind_ == Kind::Quadratic) {
    const auto& c = quad_[node];
    out.noalias() = c.q * (z - c.center);
    return;
  }
  const auto& s = shards_[node];
  const Eigen::Index m = s.labels.size();
  Eigen::VectorXd coef = s.design * z;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double y = s.labels(j);
    coef(j) = -y * sigmoid(-y * coef(j));
  }
  out.noalias() = s.design.transpose() * coef / static_cast<double>(m);
  const auto d = out.size() - 1;
  out.head(d) += lambda_ * z.head(d);
}

Eigen::VectorXd Objective::exact_gradient(std::size_t node,
                                          const Eigen::Ref<const Eigen::VectorXd>& z) const {
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim_));
  exact_gradient(node, z, g);
  return g;
}

Eigen::VectorXd Objective::full_gradient(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  Eigen::VectorXd g(total.size());
  for (std::size_t i = 0; i < n_; ++i) {
    exact_gradient(i, z, g);
    total += g;
  }
  return total / static_cast<double>(n_);
}

void Objective::sfo_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                             RandomStream& rng, Eigen::Ref<Eigen::VectorXd> out) const {
  if (kind_ == Kind::Quadratic) {
    exact_gradient(node, z, out);
    if (noise_sigma2_ > 0.0) {
      const double sd = std::sqrt(noise_sigma2_ / static_cast<double>(dim_));
      for (Eigen::Index c = 0; c < out.size(); ++c) out(c) += sd * rng.normal();
    }
    return;
  }
  const auto& s = shards_[node];
  const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(s.labels.size())));
  const double y = s.labels(j);
  const double coef = -y * sigmoid(-y * s.design.row(j).dot(z));
  out.noalias() = coef * s.design.row(j).transpose();
  const auto d = out.size() - 1;
  out.head(d) += lambda_ * z.head(d);
}

SfoSample Objective::sfo_gradient(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z,
                                  RandomStream& rng) const {
  SfoSample sample;
  sample.node = node;
  sample.gradient.resize(static_cast<Eigen::Index>(dim_));
  if (kind_ == Kind::Logistic) {
    // Replay the index draw on a copy so the reported index matches the draw.
    RandomStream probe = rng;
    sample.sample_index = probe.index(local_samples(node));
  }
  sfo_gradient(node, z, rng, sample.gradient);
  return sample;
}

double Objective::sfo_variance(std::size_t node, const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (kind_ == Kind::Quadratic) return noise_sigma2_;
  const auto& s = shards_.at(node);
  const Eigen::Index m = s.labels.size();
  Eigen::VectorXd coef = s.design * z;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double y = s.labels(j);
    coef(j) = -y * sigmoid(-y * coef(j));
  }
  // Component gradients are coef_j * xtilde_j; the regularizer cancels.
  const Eigen::VectorXd mean = s.design.transpose() * coef / static_cast<double>(m);
  double total = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    total += (coef(j) * s.design.row(j).transpose() - mean).squaredNorm();
  }
  return total / static_cast<double>(m);
}

double Objective::local_smoothness(std::size_t node) const {
  if (kind_ == Kind::Quadratic) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(quad_.at(node).q, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
  }
  const auto& s = shards_.at(node);
  const Eigen::MatrixXd gram = s.design.transpose() * s.design;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return lambda_ + eig.eigenvalues().maxCoeff() / (4.0 * static_cast<double>(s.labels.size()));
}

Curvature curvature_constants(const Objective& obj) {
  Curvature c;
  if (obj.kind() == Objective::Kind::Quadratic) {
    c.mu = std::numeric_limits<double>::infinity();
    c.ell = 0.0;
    for (std::size_t i = 0; i < obj.nodes(); ++i) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(obj.quadratic_cost(i).q,
                                                         Eigen::EigenvaluesOnly);
      c.mu = std::min(c.mu, eig.eigenvalues().minCoeff());
      c.ell = std::max(c.ell, obj.local_smoothness(i));
    }
  } else {
    if (obj.lambda() <= 0.0) {
      throw std::invalid_argument("logistic objective with lambda = 0 is not strongly convex");
    }
    c.mu = obj.lambda();
    c.ell = 0.0;
    for (std::size_t i = 0; i < obj.nodes(); ++i) c.ell = std::max(c.ell, obj.local_smoothness(i));
  }
  c.kappa = c.ell / c.mu;
  return c;
}

ReferenceSolution reference_solution(const Objective& obj, double tol, int max_iter) {
  ReferenceSolution ref;
  const auto p = static_cast<Eigen::Index>(obj.dim());
  if (obj.kind() == Objective::Kind::Quadratic) {
    Eigen::MatrixXd q_sum = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < obj.nodes(); ++i) {
      const auto& c = obj.quadratic_cost(i);
      q_sum += c.q;
      rhs += c.q * c.center;
    }
    ref.z_star = q_sum.ldlt().solve(rhs);
  } else {
    const double step = 1.0 / curvature_constants(obj).ell;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd g = obj.full_gradient(z);
    int it = 0;
    while (g.norm() > tol) {
      if (it >= max_iter) {
        std::ostringstream msg;
        msg << "reference solver: gradient norm " << g.norm() << " above " << tol << " after "
            << max_iter << " iterations";
        throw ConvergenceError(msg.str());
      }
      z -= step * g;
      g = obj.full_gradient(z);
      ++it;
    }
    ref.z_star = z;
    ref.iterations = it;
  }
  ref.f_star = obj.value(ref.z_star);
  ref.residual = obj.full_gradient(ref.z_star).norm();
  return ref;
}

double max_sfo_variance(const Objective& obj, const Eigen::VectorXd& z) {
  double worst = 0.0;
  for (std::size_t i = 0; i < obj.nodes(); ++i) worst = std::max(worst, obj.sfo_variance(i, z));
  return worst;
}

std::vector<Dataset> partition_dataset(const Dataset& samples, std::size_t n,
                                       const PartitionScheme& scheme, RandomStream& rng) {
  if (n == 0) throw std::invalid_argument("partition needs n >= 1");
  if (samples.size() < n) {
    throw std::invalid_argument("cannot give each of " + std::to_string(n) + " nodes a sample from " +
                                std::to_string(samples.size()) + " samples");
  }
  const std::size_t total = samples.size();
  std::vector<std::size_t> sizes(n);
  if (scheme.kind == PartitionScheme::Kind::Balanced) {
    for (std::size_t i = 0; i < n; ++i) sizes[i] = total / n + (i < total % n ? 1 : 0);
  } else {
    if (!(scheme.concentration > 0.0)) throw std::invalid_argument("concentration must be > 0");
    std::vector<double> weights(n);
    for (auto& w : weights) w = rng.gamma(scheme.concentration);
    double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weight_sum <= 0.0) {  // every gamma draw underflowed
      std::fill(weights.begin(), weights.end(), 1.0);
      weight_sum = static_cast<double>(n);
    }
    // Sequential binomials give a multinomial over the samples left after one per node.
    std::uint64_t remaining = total - n;
    double mass_left = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = weights[i] / weight_sum;
      std::uint64_t draw = 0;
      if (i + 1 == n) {
        draw = remaining;
      } else if (mass_left > 0.0) {
        draw = rng.binomial(remaining, std::min(1.0, pi / mass_left));
      }
      sizes[i] = 1 + draw;
      remaining -= draw;
      mass_left -= pi;
    }
  }
  std::vector<Dataset> shards(n);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].assign(samples.begin() + static_cast<std::ptrdiff_t>(offset),
                     samples.begin() + static_cast<std::ptrdiff_t>(offset + sizes[i]));
    offset += sizes[i];
  }
  return shards;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": missing header row");
  const auto header = split_commas(line);
  if (header.size() < 2 || trim(header.front()) != "label") {
    throw ConfigError(path.string() + ": header must be label,f1,...,fd");
  }
  const std::size_t width = header.size() - 1;
  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != width + 1) {
      throw ConfigError(where + ": expected " + std::to_string(width + 1) + " fields, found " +
                        std::to_string(fields.size()));
    }
    Sample s;
    if (!parse_double(fields[0], s.label)) throw ConfigError(where + ": malformed label");
    if (s.label != 1.0 && s.label != -1.0) throw ConfigError(where + ": label must be +1 or -1");
    s.features.resize(static_cast<Eigen::Index>(width));
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_double(fields[c + 1], s.features(static_cast<Eigen::Index>(c)))) {
        throw ConfigError(where + ": malformed value in column " + std::to_string(c + 2));
      }
    }
    data.push_back(std::move(s));
  }
  if (data.empty()) throw ConfigError(path.string() + ": dataset has no rows");
  return data;
}

}  // namespace saddopt
