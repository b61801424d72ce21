#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace sqmag {

/// Derives an independent 64-bit seed from a master seed and a path of
/// stream identifiers (channel, chunk, average index, ...).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

using Engine = std::mt19937_64;
/// Ziggurat sampler; call reset() when reseeding mid-stream.
using StandardNormal = boost::random::normal_distribution<double>;

// Stream identifiers used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kShot = 1;
inline constexpr std::uint64_t kElectronic = 2;
inline constexpr std::uint64_t kSpin = 3;
inline constexpr std::uint64_t kLock = 4;
inline constexpr std::uint64_t kScan = 5;
inline constexpr std::uint64_t kMagnetometry = 6;
}  // namespace stream

}  // namespace sqmag
