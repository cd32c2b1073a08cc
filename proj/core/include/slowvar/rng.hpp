#pragma once

#include <cstdint>
#include <random>

namespace slowvar {

// One independent random stream. The pair (seed, stream) fully determines
// the draw sequence, so per-task streams make parallel runs reproducible.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Uniform on the open interval (0,1).
  double uniform() {
    for (;;) {
      const double u = double(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double normal() { return normal_(engine_); }

  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_, stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace slowvar
