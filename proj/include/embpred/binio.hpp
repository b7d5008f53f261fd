#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "embpred/error.hpp"

namespace embpred {

// CRC-32 (IEEE 802.3) over a byte range.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

std::string crc32_hex(const void* data, std::size_t len);
std::string crc32_hex(const std::string& bytes);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);
std::string file_crc32_hex(const std::string& path);

// Little-endian append-only byte buffer for the binary file formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f32(float v) { raw(&v, 4); }

  void bytes(const void* p, std::size_t n) { raw(p, n); }
  void str(const std::string& s) { raw(s.data(), s.size()); }

  template <typename T>
  void array(const T* p, std::size_t count) {
    raw(p, count * sizeof(T));
  }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    static_assert(std::endian::native == std::endian::little,
                  "serialization assumes a little-endian host");
    buf_.append(static_cast<const char*>(p), n);
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : data_(bytes) {}

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  float f32() { return get<float>(); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
  void array(T* out, std::size_t count) {
    need(count * sizeof(T));
    std::memcpy(out, data_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw IoError("truncated file: unexpected end of data");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace embpred
