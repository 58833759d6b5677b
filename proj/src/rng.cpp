#include "metagrad/rng.hpp"

#include <cmath>
#include <numbers>

namespace metagrad {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed) : base_seed_(base_seed), key_(mix(base_seed ^ 0x6A09E667F3BCC909ULL)) {}

RngStream RngStream::derive(std::uint64_t label) const {
  RngStream child = *this;
  child.path_.push_back(label);
  child.key_ = mix(key_ ^ (mix(label + kGolden) + 0x3C6EF372FE94F82BULL));
  return child;
}

std::uint64_t RngStream::bits(std::uint64_t counter) const {
  return mix(key_ + (counter + 1) * kGolden);
}

double RngStream::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double RngStream::normal(std::uint64_t index) const {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec gaussian(const RngStream& rng, std::size_t dim, double stddev) {
  Vec out(dim);
  if (stddev == 0.0) return out;
  for (std::size_t i = 0; i < dim; ++i) out[i] = stddev * rng.normal(i);
  return out;
}

}  // namespace metagrad
