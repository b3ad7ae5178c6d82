#include "efcast/util.hpp"

#include "efcast/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace efcast {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
  case Errc::MissingColumn: return "MissingColumn";
  case Errc::NonNumericCell: return "NonNumericCell";
  case Errc::EmptyFile: return "EmptyFile";
  case Errc::DegenerateSplit: return "DegenerateSplit";
  case Errc::ZeroVariance: return "ZeroVariance";
  case Errc::InvalidSpec: return "InvalidSpec";
  case Errc::ShapeMismatch: return "ShapeMismatch";
  case Errc::EmptyBatch: return "EmptyBatch";
  case Errc::EmptySegment: return "EmptySegment";
  case Errc::LengthMismatch: return "LengthMismatch";
  case Errc::NoTrainWindows: return "NoTrainWindows";
  case Errc::NoValWindows: return "NoValWindows";
  case Errc::AccumLengthMismatch: return "AccumLengthMismatch";
  case Errc::NonFiniteBlock: return "NonFiniteBlock";
  case Errc::InsufficientTruth: return "InsufficientTruth";
  case Errc::NoTestWindows: return "NoTestWindows";
  case Errc::ModeMismatch: return "ModeMismatch";
  case Errc::UnmatchedCell: return "UnmatchedCell";
  case Errc::HorizonExceedsData: return "HorizonExceedsData";
  case Errc::ShortInput: return "ShortInput";
  case Errc::Io: return "Io";
  case Errc::Config: return "Config";
  }
  return "Unknown";
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) noexcept {
  return splitmix64(seed ^ fnv1a64(stream));
}

double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(Rng& rng, double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01(rng);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace efcast
