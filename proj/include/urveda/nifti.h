#pragma once

// Reader (and fixture writer) for uncompressed single-file NIfTI-1 volumes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "urveda/errors.h"

namespace urveda {

enum class NiftiDatatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kFloat32 = 16,
  kFloat64 = 64,
};

struct Volume {
  std::vector<std::size_t> dims;  // nx, ny, nz[, nt, ...]; at least three entries
  std::vector<double> spacing;    // mm per voxel along each dim, > 0
  std::vector<double> data;       // x fastest, then y, then z, ...
  NiftiDatatype datatype = NiftiDatatype::kFloat64;

  std::size_t nx() const { return dims[0]; }
  std::size_t ny() const { return dims[1]; }
  // Number of 2D planes (product of every extent past y).
  std::size_t planes() const;
};

class NiftiError : public DataError {
 public:
  enum class Kind { kTruncated, kBadMagic, kUnsupportedDatatype, kCompressed, kInvalidHeader };
  NiftiError(Kind kind, const std::string& message) : DataError(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::size_t kNiftiHeaderSize = 348;

// Decodes a complete .nii byte image. The byte order is taken from dim[0]
// (1..7 when read little-endian, else the file is big-endian). Intensity
// scaling is applied when scl_slope is nonzero.
Volume read_nifti1(std::span<const std::uint8_t> bytes);
Volume read_nifti1_file(const std::filesystem::path& path);

struct NiftiWriteOptions {
  NiftiDatatype datatype = NiftiDatatype::kFloat64;
  bool big_endian = false;
  float scl_slope = 0.0f;  // 0 disables scaling
  float scl_inter = 0.0f;
};

// Encodes `volume.data` verbatim as stored (pre-scaling) values. Integer
// datatypes require integral values within range.
std::vector<std::uint8_t> encode_nifti1(const Volume& volume, const NiftiWriteOptions& options = {});
void write_nifti1_file(const std::filesystem::path& path, const Volume& volume,
                       const NiftiWriteOptions& options = {});

}  // namespace urveda
