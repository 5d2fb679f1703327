#pragma once

// Flat binary parameter container. All integers little-endian.
//
//   offset  size  field
//   0       8     magic "URVPARAM"
//   8       4     u32 format version (currently 1)
//   12      4     u32 metadata length M
//   16      M     metadata, UTF-8 (JSON for checkpoints, empty otherwise)
//   16+M    4     u32 record count N
//   then N records:
//           4     u32 name length L
//           L     name, UTF-8
//           4     u32 rank R
//           8·R   u64 extents
//           8·Π   f64 values, IEEE-754 binary64, row-major

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "urveda/nn.h"

namespace urveda {

inline constexpr std::uint32_t kContainerVersion = 1;

struct ParameterRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct ParameterContainer {
  std::string metadata;
  std::vector<ParameterRecord> records;
};

std::vector<std::uint8_t> encode_container(const ParameterContainer& container);
// Throws DataError on bad magic, unknown version or truncation.
ParameterContainer decode_container(std::span<const std::uint8_t> bytes);

void save_container(const std::filesystem::path& path, const ParameterContainer& container);
ParameterContainer load_container(const std::filesystem::path& path);

ParameterContainer snapshot_parameters(const ParameterList& params, std::string metadata = {});
// Copies values into `params`; names and shapes must match one-to-one.
void restore_parameters(ParameterList& params, const ParameterContainer& container);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace urveda
