#ifndef GCAP_COMMON_HPP_
#define GCAP_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gcap {

// Bad inputs or malformed files. CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values, singular systems, diverged training. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic random stream. Distributions are implemented by hand so that
// identical seeds give identical streams on every platform and compiler;
// byte-identical artifacts across runs depend on this.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  // xorshift64* core
  uint64_t next_u64() {
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0, 1)
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  // uniform integer in [0, n)
  uint64_t next_index(uint64_t n) { return n ? next_u64() % n : 0; }

  // standard normal via Box-Muller; one value per call, pair cached
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    while (u1 <= 1e-300) u1 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gcap

#endif  // GCAP_COMMON_HPP_
