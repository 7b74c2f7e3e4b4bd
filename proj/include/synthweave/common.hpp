#pragma once

// Shared primitives: error types, deterministic RNG, stable hashing.
//
// Everything that feeds randomness or identifiers in this library goes
// through Rng / hash64 below.  std::mt19937 + std::*_distribution are
// deliberately avoided: the distributions are implementation-defined and
// would break byte-identical reruns across standard libraries.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synthweave {

// ---------------------------------------------------------------- errors

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input that was supposed to match a documented format
// (JSONL records, concept blocks, <Qn> blocks, score tags, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Caller passed an out-of-domain argument (bad level, empty series, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Internal consistency violation (dangling node ids, misaligned
// batches, manifest hash mismatch).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Remote (or mock) completion/embedding backend failed after retries.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Optimizer could not produce a usable fit.
class FitError : public Error {
 public:
  using Error::Error;
};

// Stage-level failure in the end-to-end pipeline driver.
class PipelineError : public Error {
 public:
  using Error::Error;
};

// ------------------------------------------------------------------ rng

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Small deterministic generator.  Identical sequences on every platform
// for a given seed; good enough statistically for sampling/bootstrap work.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {
    // Warm up so that small seeds do not produce correlated first draws.
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform double in [0, 1).  53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).  n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::uniform_int: n must be > 0");
    // Multiply-shift rejection-free mapping; bias is < 2^-64 * n which is
    // irrelevant for the corpus sizes handled here, and it keeps the
    // draw count per call fixed (important for reproducibility).
    __uint128_t wide = static_cast<__uint128_t>(next_u64()) *
                       static_cast<__uint128_t>(n);
    return static_cast<std::uint64_t>(wide >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.  Consumes exactly two draws per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ----------------------------------------------------------------- hash

// Stable 64-bit content hash (FNV-1a folded through the splitmix
// finalizer).  Used for ids, per-item seeds and manifest digests; NOT a
// cryptographic hash.
inline std::uint64_t hash64(std::string_view data, std::uint64_t seed = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : data) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = h;
  return splitmix64(s);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ------------------------------------------------------------- file io

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open file for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ArgumentError("short write: " + path);
}

}  // namespace synthweave
