#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "desireme/errors.hpp"

// Explicit little-endian encoding, independent of host byte order.
namespace desireme::binary {

template <class UInt>
void write_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class UInt>
UInt read_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw InputError("truncated input while reading " + std::string(what));
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

inline void write_f32(std::ostream& out, float value) {
  write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value));
}

inline float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}

inline void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (in.gcount() != static_cast<std::streamsize>(got.size()) || got != magic) {
    throw InputError(std::string(what) + ": bad magic, expected \"" + std::string(magic) + "\"");
  }
}

inline void expect_eof(std::istream& in, std::string_view what) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(std::string(what) + ": trailing bytes after payload");
  }
}

}  // namespace desireme::binary
