#pragma once

#include "nbv/core/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace nbv::io {

// Little-endian scalar helpers shared by the binary formats.

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) fail(ErrorKind::io, "unexpected end of binary stream");
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const auto n = get<std::uint32_t>(in);
  if (n > max_len) fail(ErrorKind::io, "string field too long");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) fail(ErrorKind::io, "unexpected end of binary stream");
  return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) fail(ErrorKind::io, "bad magic in " + what);
}

}  // namespace nbv::io
