#pragma once

// Internal little-endian binary helpers shared by the file containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace slelab::binio {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return __builtin_bswap64(v);
  }
}

inline void put_u64(std::ofstream& out, std::uint64_t v) {
  const std::uint64_t le = to_le(v);
  out.write(reinterpret_cast<const char*>(&le), 8);
}

inline void put_f64(std::ofstream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

inline std::uint64_t get_u64(std::ifstream& in, const char* who) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw std::runtime_error(std::string(who) + ": truncated file");
  return to_le(v);
}

inline double get_f64(std::ifstream& in, const char* who) {
  const std::uint64_t bits = get_u64(in, who);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace slelab::binio
