#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rcsl/numkit/param_store.hpp"

namespace rcsl::numkit {

// Binary parameter container, format version 1.
//
//   "RCKP" | u32 version | u64 record count
//   per record: u32 name length | name bytes | u32 rank | u64 extents...
//               | row-major f64 payload, little endian
//   trailing u32 crc32 over everything before it
//
// Round trips are bit exact. Loading verifies magic, version and checksum and
// rejects any mismatch before handing data out.

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& sections);

// Loads into existing stores; every record must match a destination parameter
// by full name ("section/param") with identical shape, and vice versa.
void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, ParamStore*>>& sections);

// Raw listing in file order.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

}  // namespace rcsl::numkit
