#pragma once

#include <cstdint>

namespace mcx {

// Counter-based random stream.  The key is a strong mix of the path
// (master_seed, sample_id, layer_id, substream_id) and each draw hashes
// key + counter, so draws are random-access, bit-reproducible for a given
// path, and streams on different paths are statistically independent.
// Output mixing is the splitmix64 finalizer.
class RngStream {
 public:
  RngStream(uint64_t master_seed, uint64_t sample_id, uint64_t layer_id,
            uint64_t substream_id);

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double a, double b);    // [a, b)
  double normal();                       // N(0,1), Box-Muller pair cached
  uint64_t poisson(double mean);

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;

  uint64_t poisson_small(double mean);
};

}  // namespace mcx
