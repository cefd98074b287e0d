#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slak {

enum class ErrorKind {
  Io,          // file missing, unreadable, malformed container
  Parse,       // syntax error in a text format (carries line/position)
  Validation,  // input violates a schema or type constraint
  Invalid,     // bad argument / precondition failure
  Runtime,     // numeric failure, remote failure, internal invariant broken
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// 64-bit FNV-1a, used to fan a root seed out to named stages.
uint64_t fnv1a64(std::string_view s);

// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::string& path);

// Deterministic RNG. Wraps mt19937_64 with hand-rolled distributions so a
// given seed produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Independent stream for a named stage of a run.
  static Rng fanout(uint64_t root_seed, std::string_view stage) {
    return Rng(root_seed ^ fnv1a64(stage));
  }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (consumes two uniforms per draw).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform index in [0, n), rejection-sampled to avoid modulo bias.
  size_t index(size_t n);

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

// --- small string/file helpers -------------------------------------------

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

// Little-endian binary I/O primitives for the checkpoint/embedding formats.
void put_u16(std::string& out, uint16_t v);
void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_f64(std::string& out, double v);

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  double f64();
  std::string bytes(size_t n);
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t n);
  std::string_view data_;
  std::string origin_;
  size_t pos_ = 0;
};

}  // namespace slak
