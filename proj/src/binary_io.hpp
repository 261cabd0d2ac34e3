#pragma once

// Little-endian primitive encoding shared by the checkpoint and feature formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr::binary {

template <class UInt>
void put_uint(std::ostream& out, UInt v) {
  std::array<char, sizeof(UInt)> buf{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

inline void put_u8(std::ostream& out, std::uint8_t v) { put_uint(out, v); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v); }
inline void put_i32(std::ostream& out, std::int32_t v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

/// Reads fixed-width little-endian fields, tracking the byte offset for errors.
class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::uint64_t offset() const { return offset_; }

  void read_bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(what_ + ": truncated at byte offset " +
                        std::to_string(offset_ + static_cast<std::uint64_t>(in_.gcount())));
    }
    offset_ += n;
  }

  template <class UInt>
  UInt get_uint() {
    std::array<char, sizeof(UInt)> buf{};
    read_bytes(buf.data(), buf.size());
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
  }

  std::uint8_t u8() { return get_uint<std::uint8_t>(); }
  std::uint32_t u32() { return get_uint<std::uint32_t>(); }
  std::int32_t i32() { return std::bit_cast<std::int32_t>(get_uint<std::uint32_t>()); }
  float f32() { return std::bit_cast<float>(get_uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }

  [[noreturn]] void fail(const std::string& msg, std::uint64_t at) const {
    throw FormatError(what_ + ": " + msg + " at byte offset " + std::to_string(at));
  }

 private:
  std::istream& in_;
  std::string what_;
  std::uint64_t offset_ = 0;
};

}  // namespace cgmcr::binary
