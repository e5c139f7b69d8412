#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace t3s {

// Input data or configuration violated a contract check.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or file-format failure while reading or writing artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

// splitmix64 finalizer; used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t z);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t sub = 0, std::uint64_t sub2 = 0);
inline std::uint64_t stream_id(std::string_view tag) { return fnv1a64(tag); }

// Deterministic RNG. mt19937_64 output is pinned by the standard and the
// distribution code lives here, so streams are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive on both ends
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  // Box-Muller, no cached spare
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

// Stable float formatting for deterministic text outputs.
std::string fmt_g(double v);            // "%.9g"
std::string fmt_f(double v, int prec);  // "%.*f"

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace t3s
