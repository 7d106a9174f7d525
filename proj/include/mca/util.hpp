#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace mca {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

/// Shortest text that round-trips a double exactly (printf %.17g).
std::string format_double(double x);

std::string to_hex(std::uint64_t x);

}  // namespace mca
