#include "rcsl/numkit/checkpoint.hpp"

#include <cstdint>
#include <cstring>

#include "rcsl/error.hpp"
#include "rcsl/numkit/wire.hpp"

namespace rcsl::numkit {

namespace {

constexpr char kMagic[4] = {'R', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

std::string full_name(const std::string& section, const std::string& param) {
  return section.empty() ? param : section + "/" + param;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ParamStore*>>& sections) {
  std::string buf;
  buf.append(kMagic, 4);
  wire::put_u32(buf, kVersion);
  std::uint64_t records = 0;
  for (const auto& [_, store] : sections) records += store->count();
  wire::put_u64(buf, records);
  for (const auto& [section, store] : sections) {
    for (std::size_t i = 0; i < store->count(); ++i) {
      const std::string name = full_name(section, store->name(i));
      const Tensor& t = store->tensor(i);
      wire::put_str(buf, name);
      wire::put_u32(buf, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t ax = 0; ax < t.rank(); ++ax) wire::put_u64(buf, t.extent(ax));
      for (std::size_t j = 0; j < t.size(); ++j) wire::put_f64(buf, t[j]);
    }
  }
  wire::put_u32(buf, wire::crc_of(buf, buf.size()));
  wire::spit(path, buf, "checkpoint");
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
  const std::string buf = wire::slurp(path, "checkpoint");
  if (buf.size() < 4 + 4 + 8 + 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw RuntimeError("checkpoint: '" + path + "' is not a parameter container");
  }
  wire::Reader r{buf, 4, "checkpoint"};
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw RuntimeError("checkpoint: '" + path + "' has unsupported format version " +
                       std::to_string(version) + " (expected " + std::to_string(kVersion) + ")");
  }
  const std::size_t body_len = buf.size() - 4;
  wire::Reader tail{buf, body_len, "checkpoint"};
  const std::uint32_t stored = tail.u32();
  if (stored != wire::crc_of(buf, body_len)) {
    throw RuntimeError("checkpoint: '" + path + "' failed checksum verification");
  }
  const std::uint64_t records = r.u64();
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(records);
  for (std::uint64_t rec = 0; rec < records; ++rec) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t ax = 0; ax < rank; ++ax) shape[ax] = r.u64();
    const std::size_t numel = shape_numel(shape);
    Tensor t(shape);
    for (std::size_t j = 0; j < numel; ++j) t[j] = r.f64();
    out.emplace_back(std::move(name), std::move(t));
  }
  if (r.pos != body_len) {
    throw RuntimeError("checkpoint: '" + path + "' has trailing bytes");
  }
  return out;
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, ParamStore*>>& sections) {
  auto records = read_checkpoint(path);
  std::size_t expected = 0;
  for (const auto& [_, store] : sections) expected += store->count();
  if (records.size() != expected) {
    throw RuntimeError("checkpoint: '" + path + "' holds " + std::to_string(records.size()) +
                       " records, expected " + std::to_string(expected));
  }
  std::size_t rec = 0;
  for (const auto& [section, store] : sections) {
    for (std::size_t i = 0; i < store->count(); ++i, ++rec) {
      const std::string want = full_name(section, store->name(i));
      auto& [name, tensor] = records[rec];
      if (name != want) {
        throw RuntimeError("checkpoint: '" + path + "' record '" + name +
                           "' does not match expected parameter '" + want + "'");
      }
      if (!tensor.same_shape(store->tensor(i))) {
        throw RuntimeError("checkpoint: '" + path + "' parameter '" + name + "' has shape " +
                           tensor.shape_str() + ", expected " + store->tensor(i).shape_str());
      }
      store->tensor(i) = std::move(tensor);
    }
  }
}

}  // namespace rcsl::numkit
