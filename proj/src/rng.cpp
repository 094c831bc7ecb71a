#include "cellfree/rng.hpp"

#include <cmath>
#include <numbers>

namespace cellfree {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t fmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t drop, Stream stream) {
  std::uint64_t k = fmix64(seed + kGolden);
  k = fmix64(k ^ (drop * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
  key_ = fmix64(k ^ (static_cast<std::uint64_t>(stream) * 0x8CB92BA72F3D8DD7ULL));
}

CounterRng::result_type CounterRng::operator()() {
  const std::uint64_t x = key_ + (counter_++) * kGolden;
  return fmix64(fmix64(x) ^ key_);
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

cplx CounterRng::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

}  // namespace cellfree
