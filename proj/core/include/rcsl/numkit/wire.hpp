#pragma once

// Little-endian byte packing shared by the binary container formats
// (parameter checkpoints, trajectory datasets). Integers are fixed-width LE;
// doubles travel as their IEEE-754 bit pattern, so round trips are bit-exact.

#include <bit>
#include <cstdint>
#include <string>

#include "rcsl/error.hpp"

namespace rcsl::numkit::wire {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double d) { put_u64(buf, std::bit_cast<std::uint64_t>(d)); }

inline void put_str(std::string& buf, const std::string& s) {
  put_u32(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

// Cursor over an in-memory file image. `what` names the format in errors.
struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const char* what;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw RuntimeError(std::string(what) + ": truncated file");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  std::string str() { return bytes(u32()); }
};

// Whole-file read/write. Binary mode, error text carries the format name.
std::string slurp(const std::string& path, const char* what);
void spit(const std::string& path, const std::string& buf, const char* what);

// crc32 (zlib polynomial) of the first `len` bytes.
std::uint32_t crc_of(const std::string& buf, std::size_t len);

}  // namespace rcsl::numkit::wire
