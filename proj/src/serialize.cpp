#include "urveda/serialize.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace urveda {

namespace {

constexpr char kMagic[8] = {'U', 'R', 'V', 'P', 'A', 'R', 'A', 'M'};

class Writer {
 public:
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw DataError("parameter container truncated at byte " + std::to_string(pos_) +
                      " (needed " + std::to_string(n) + " more bytes, have " +
                      std::to_string(in_.size() - pos_) + ")");
    }
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_container(const ParameterContainer& container) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(container.metadata.size()));
  w.bytes(container.metadata.data(), container.metadata.size());
  w.u32(static_cast<std::uint32_t>(container.records.size()));
  for (const auto& r : container.records) {
    if (shape_numel(r.shape) != r.values.size()) {
      throw ShapeError("parameter '" + r.name + "' has " + std::to_string(r.values.size()) +
                       " values for shape " + shape_str(r.shape));
    }
    w.u32(static_cast<std::uint32_t>(r.name.size()));
    w.bytes(r.name.data(), r.name.size());
    w.u32(static_cast<std::uint32_t>(r.shape.size()));
    for (std::size_t e : r.shape) w.u64(e);
    for (double v : r.values) w.f64(v);
  }
  return w.take();
}

ParameterContainer decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw DataError("not a parameter container (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw DataError("unsupported parameter container version " + std::to_string(version));
  }
  ParameterContainer c;
  c.metadata = r.str(r.u32());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    ParameterRecord rec;
    rec.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    for (std::uint32_t k = 0; k < rank; ++k) rec.shape.push_back(static_cast<std::size_t>(r.u64()));
    const std::size_t n = shape_numel(rec.shape);
    if (n > bytes.size() / 8) throw DataError("parameter '" + rec.name + "' payload truncated");
    rec.values.resize(n);
    for (auto& v : rec.values) v = r.f64();
    c.records.push_back(std::move(rec));
  }
  if (!r.done()) throw DataError("trailing bytes after parameter container");
  return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

void save_container(const std::filesystem::path& path, const ParameterContainer& container) {
  write_file_bytes(path, encode_container(container));
}

ParameterContainer load_container(const std::filesystem::path& path) {
  return decode_container(read_file_bytes(path));
}

ParameterContainer snapshot_parameters(const ParameterList& params, std::string metadata) {
  ParameterContainer c;
  c.metadata = std::move(metadata);
  for (const auto& p : params) {
    auto d = p.tensor.data();
    c.records.push_back({p.name, p.tensor.shape(), std::vector<double>(d.begin(), d.end())});
  }
  return c;
}

void restore_parameters(ParameterList& params, const ParameterContainer& container) {
  std::map<std::string, const ParameterRecord*> by_name;
  for (const auto& r : container.records) by_name[r.name] = &r;
  if (by_name.size() != params.size() || container.records.size() != params.size()) {
    throw DataError("parameter count mismatch: model has " + std::to_string(params.size()) +
                    ", container has " + std::to_string(container.records.size()));
  }
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DataError("parameter '" + p.name + "' missing from container");
    if (it->second->shape != p.tensor.shape()) {
      throw DataError("parameter '" + p.name + "' has shape " + shape_str(it->second->shape) +
                      " in container but " + shape_str(p.tensor.shape()) + " in model");
    }
  }
  for (auto& p : params) {
    const auto& values = by_name[p.name]->values;
    std::copy(values.begin(), values.end(), p.tensor.mutable_data().begin());
  }
}

}  // namespace urveda
