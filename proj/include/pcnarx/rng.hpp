#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace pcnarx {

/// Generator for run `run` of a campaign seeded with `seed`; independent of
/// how many runs the campaign has.
inline std::mt19937_64 run_stream(std::uint64_t seed, std::size_t run) {
  const auto r = static_cast<std::uint64_t>(run);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace pcnarx
