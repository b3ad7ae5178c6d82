#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

namespace efcast {

/// Formats a real with 9 significant digits, the precision used by every CSV export.
std::string format_real(double value);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Deterministic randomness. std::mt19937_64's output sequence is fixed by the
// standard; the distributions are not, so the helpers below are hand-rolled.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent sub-seed for a named stream (e.g. init vs shuffle).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept;

/// Uniform in [0, 1) with 53 bits of randomness.
double uniform01(Rng& rng) noexcept;
double uniform(Rng& rng, double lo, double hi) noexcept;

/// Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept;

/// 64-bit FNV-1a, used for config hashes in run metadata.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

} // namespace efcast
