#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace saddopt {

/// Seeded random stream. Every stochastic operation takes one explicitly;
/// there is no global generator.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  /// Independent stream derived from (seed, stream_id), e.g. one per replica.
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  double normal();
  double uniform();
  /// Uniform integer in [0, size).
  std::size_t index(std::size_t size);
  double gamma(double shape);
  std::uint64_t binomial(std::uint64_t trials, double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace saddopt
