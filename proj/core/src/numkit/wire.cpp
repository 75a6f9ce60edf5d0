#include "rcsl/numkit/wire.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace rcsl::numkit::wire {

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError(std::string(what) + ": cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

void spit(const std::string& path, const std::string& buf, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError(std::string(what) + ": cannot write '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeError(std::string(what) + ": short write to '" + path + "'");
}

std::uint32_t crc_of(const std::string& buf, std::size_t len) {
  return static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(len)));
}

}  // namespace rcsl::numkit::wire
