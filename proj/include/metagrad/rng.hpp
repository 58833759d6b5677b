#pragma once

#include <cstdint>
#include <vector>

#include "metagrad/numerics.hpp"

namespace metagrad {

// Labels for the randomness consumers inside one iteration.
enum class Purpose : std::uint64_t {
  kTaskBatch = 1,
  kInner = 2,
  kOuter = 3,
  kHessian = 4,
  kStepsizeBatch = 5,
  kStepsize = 6,
  kTest = 7,
  kHessianProbe = 8,
  kSampling = 9,
  kTaskSlot = 10,
};

// Counter-based random stream keyed by (base_seed, path). Draws are a pure
// function of the key and a counter, so streams can be derived and consumed in
// any order or on any thread with identical results.
class RngStream {
 public:
  explicit RngStream(std::uint64_t base_seed);

  RngStream derive(std::uint64_t label) const;
  RngStream derive(Purpose purpose) const { return derive(static_cast<std::uint64_t>(purpose)); }

  std::uint64_t base_seed() const { return base_seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }
  std::uint64_t key() const { return key_; }

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform in [0, 1).
  double uniform(std::uint64_t counter) const;
  // Standard normal; consumes counters 2*index and 2*index+1.
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t base_seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
};

// i.i.d. N(0, stddev^2) entries.
Vec gaussian(const RngStream& rng, std::size_t dim, double stddev);

}  // namespace metagrad
