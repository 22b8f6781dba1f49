#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsgc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a whole field; throws Error on trailing garbage or overflow.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string_view trim(std::string_view text);

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Seedable, splittable generator handle. `split(tag)` yields a child whose
/// stream depends only on (parent seed, tag), never on draws already made.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  SeedStream split(std::uint64_t tag) const { return SeedStream(mix64(seed_ ^ mix64(tag + 1))); }
  SeedStream split(std::string_view tag) const;
  Rng rng() const { return Rng(mix64(seed_)); }

 private:
  std::uint64_t seed_;
};

}  // namespace tsgc
