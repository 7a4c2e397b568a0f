#pragma once

#include <cstdint>

namespace qmwalk {

// Stream purposes live in the top byte of the stream id so that streams
// derived from unrelated quantities (trial indices, word hashes, ...)
// can never collide.
enum class StreamPurpose : std::uint64_t {
  trial = 1,
  psi_mc = 2,
  ray = 3,
  pair_draw = 4,
  noise = 5,
  defect_probe = 6,
  generic = 7,
  distortion_mc = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t payload) {
  return (static_cast<std::uint64_t>(purpose) << 56) ^ (splitmix64(payload) >> 8);
}

// Counter-based generator (Philox4x32-10, Salmon et al. SC'11). The key is
// derived from the master seed, the stream id occupies the two upper counter
// words, and draws advance the lower 64 counter bits. Streams with distinct
// ids are independent regardless of scheduling, which is what makes walk
// output reproducible across any number of worker threads.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t sid) {
    std::uint64_t k = splitmix64(master_seed ^ 0xA02BDBF7BB3C0A7Eull);
    key0_ = static_cast<std::uint32_t>(k);
    key1_ = static_cast<std::uint32_t>(k >> 32);
    c2_ = static_cast<std::uint32_t>(sid);
    c3_ = static_cast<std::uint32_t>(sid >> 32);
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform in [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t bound = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= bound);
    return v % n;
  }

 private:
  void refill() {
    std::uint32_t x0 = static_cast<std::uint32_t>(ctr_);
    std::uint32_t x1 = static_cast<std::uint32_t>(ctr_ >> 32);
    std::uint32_t x2 = c2_, x3 = c3_;
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ull * x0;
      std::uint64_t p1 = 0xCD9E8D57ull * x2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t y0 = hi1 ^ x1 ^ k0;
      std::uint32_t y1 = lo1;
      std::uint32_t y2 = hi0 ^ x3 ^ k1;
      std::uint32_t y3 = lo0;
      x0 = y0; x1 = y1; x2 = y2; x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = x0; buf_[1] = x1; buf_[2] = x2; buf_[3] = x3;
    ++ctr_;
    pos_ = 0;
  }

  std::uint32_t key0_ = 0, key1_ = 0;
  std::uint32_t c2_ = 0, c3_ = 0;
  std::uint64_t ctr_ = 0;
  std::uint32_t buf_[4] = {0, 0, 0, 0};
  int pos_ = 4;
};

}  // namespace qmwalk
