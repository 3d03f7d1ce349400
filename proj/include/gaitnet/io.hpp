#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gaitnet/errors.hpp"

namespace gaitnet {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw data_error("cannot open for writing: " + path);
  }

  void magic(const char m[4]) { raw(m, 4); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void f64s(const double* p, std::size_t n) { raw(p, 8 * n); }
  void f32s(const float* p, std::size_t n) { raw(p, 4 * n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  void close() {
    out_.close();
    if (!out_) throw data_error("write failed: " + path_);
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw data_error("write failed: " + path_);
  }
  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw data_error("cannot open: " + path);
  }

  void expect_magic(const char m[4], const std::string& kind) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, m, 4) != 0)
      throw data_error(path_ + ": not a " + kind + " file (bad magic at byte 0)");
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  void f64s(double* p, std::size_t n) { raw(p, 8 * n); }
  void f32s(float* p, std::size_t n) { raw(p, 4 * n); }
  std::string str() {
    std::uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  std::uint64_t offset() const { return offset_; }

  void expect_eof() {
    char c;
    in_.read(&c, 1);
    if (!in_.eof())
      throw data_error(path_ + ": trailing bytes at offset " + std::to_string(offset_));
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw data_error(path_ + ": truncated or corrupt (wanted " + std::to_string(n) +
                       " bytes at offset " + std::to_string(offset_) + ")");
    offset_ += n;
  }
  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

// FNV-1a, used for schema and parameter digests.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gaitnet
