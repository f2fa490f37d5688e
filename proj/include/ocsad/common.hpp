#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocsad {

// Failure modes of the public operations. The CLI maps these onto exit codes.
enum class ErrorKind {
  parse,
  length,
  vocab,
  config,
  size,
  bounds,
  capacity,
  state,
  shape,
  strategy,
  usage,
  numeric,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

// Deterministic random source. The engine is mt19937_64 (fully specified by
// the standard); the distributions are hand-rolled so that generated streams
// do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

  uint64_t u64() { return engine_(); }

  // Uniform in [0, n). Rejection sampling keeps the draw unbiased.
  uint64_t below(uint64_t n) {
    if (n == 0) fail(ErrorKind::usage, "Rng::below(0)");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  int index(size_t n) { return static_cast<int>(below(n)); }

  // Uniform in [0, 1) with 53 bits of precision.
  double real01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

  double normal() {
    // Box-Muller, cosine branch only.
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = real01();
    double u2 = real01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) fail(ErrorKind::bounds, "sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      size_t j = i + below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  // Independent child stream; distinct tags give distinct streams.
  Rng derive(uint64_t tag) const {
    uint64_t x = seed_ + 0x2545f4914f6cdd1dULL + tag * 0x9e3779b97f4a7c15ULL;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::mt19937_64 engine_;
  uint64_t seed_;
};

// Deterministic per-purpose substream from a base seed.
inline Rng substream(uint64_t seed, uint64_t tag) {
  return Rng(seed).derive(tag);
}

// Overflow-safe softplus log(1 + e^z).
inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace ocsad
