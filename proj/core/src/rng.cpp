#include "slowvar/rng.hpp"

namespace slowvar {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32), 0x5eedu};
  engine_.seed(seq);
}

}  // namespace slowvar
