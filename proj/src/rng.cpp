#include "mcx/rng.hpp"

#include <cmath>

#include "mcx/common.hpp"

namespace mcx {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 output finalizer
inline uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t absorb(uint64_t h, uint64_t v) { return mix((h + kGolden) ^ v); }

}  // namespace

RngStream::RngStream(uint64_t master_seed, uint64_t sample_id, uint64_t layer_id,
                     uint64_t substream_id) {
  uint64_t h = mix(master_seed + kGolden);
  h = absorb(h, sample_id);
  h = absorb(h, layer_id);
  h = absorb(h, substream_id);
  key_ = h;
}

uint64_t RngStream::next_u64() {
  counter_ += 1;
  return mix(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; 1-u keeps the log argument in (0,1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(th);
  has_cached_normal_ = true;
  return r * std::cos(th);
}

uint64_t RngStream::poisson_small(double mean) {
  // Knuth product method, fine for mean <= ~16
  double limit = std::exp(-mean);
  uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > limit);
  return k - 1;
}

uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw ArgumentError("poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  // Poisson is infinitely divisible: split large means into chunks so the
  // product method never underflows.
  uint64_t total = 0;
  while (mean > 16.0) {
    total += poisson_small(16.0);
    mean -= 16.0;
  }
  return total + poisson_small(mean);
}

}  // namespace mcx
