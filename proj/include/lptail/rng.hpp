#pragma once

#include <cstdint>

namespace lptail {

// Counter-based RNG: every variate is a pure function of
// (seed, replica, stream, epoch, site, draw). No generator state is carried
// between draws, so parallel execution order cannot change results and
// checkpoint/resume only has to store the integer counters.

inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct RngKey {
  uint64_t seed = 0;
  uint64_t replica = 0;
};

// Distinct lanes so independent consumers of the same (sweep, site) counters
// can never collide.
enum class Stream : uint64_t {
  sweep = 1,
  region = 2,
  oracle = 3,
  free_chain = 4,
  calib = 5,
  ppp = 6,
  box_gibbs = 7,
  metrics = 8,
  bench = 9,
  shape = 10,
  init = 11,
};

inline uint64_t hash_counters(RngKey key, uint64_t stream, uint64_t epoch,
                              uint64_t site, uint64_t draw) {
  uint64_t h = mix64(key.seed);
  h = mix64(h ^ key.replica);
  h = mix64(h ^ stream);
  h = mix64(h ^ epoch);
  h = mix64(h ^ site);
  h = mix64(h ^ draw);
  return h;
}

// Map to the open interval (0,1); never returns an exact 0 or 1.
inline double u01(uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_at(RngKey key, Stream s, uint64_t epoch, uint64_t site,
                         uint64_t draw) {
  return u01(hash_counters(key, static_cast<uint64_t>(s), epoch, site, draw));
}

// Draw cursor for one (stream, epoch, site) cell. Samplers that consume a
// variable number of uniforms (rejection loops etc.) advance the draw counter.
class SiteRng {
 public:
  SiteRng(RngKey key, Stream s, uint64_t epoch, uint64_t site = 0)
      : key_(key), stream_(static_cast<uint64_t>(s)), epoch_(epoch),
        site_(site) {}

  double next() {
    return u01(hash_counters(key_, stream_, epoch_, site_, draw_++));
  }
  uint64_t next_u64() {
    return hash_counters(key_, stream_, epoch_, site_, draw_++);
  }
  uint64_t draws() const { return draw_; }

 private:
  RngKey key_;
  uint64_t stream_;
  uint64_t epoch_;
  uint64_t site_;
  uint64_t draw_ = 0;
};

}  // namespace lptail
