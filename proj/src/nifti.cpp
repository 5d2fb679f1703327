#include "urveda/nifti.h"

#include <bit>
#include <cmath>
#include <cstring>

#include "urveda/serialize.h"

namespace urveda {

namespace {

// Header field offsets.
constexpr std::size_t kSizeofHdr = 0;
constexpr std::size_t kDim = 40;
constexpr std::size_t kDatatype = 70;
constexpr std::size_t kBitpix = 72;
constexpr std::size_t kPixdim = 76;
constexpr std::size_t kVoxOffset = 108;
constexpr std::size_t kSclSlope = 112;
constexpr std::size_t kSclInter = 116;
constexpr std::size_t kMagic = 344;
constexpr std::size_t kDefaultVoxOffset = 352;

class ByteView {
 public:
  ByteView(std::span<const std::uint8_t> bytes, bool big_endian)
      : bytes_(bytes), big_endian_(big_endian) {}

  std::uint64_t raw(std::size_t offset, std::size_t n) const {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = big_endian_ ? offset + i : offset + n - 1 - i;
      v = (v << 8) | bytes_[src];
    }
    return v;
  }
  std::int16_t i16(std::size_t o) const { return static_cast<std::int16_t>(raw(o, 2)); }
  std::int32_t i32(std::size_t o) const { return static_cast<std::int32_t>(raw(o, 4)); }
  float f32(std::size_t o) const { return std::bit_cast<float>(static_cast<std::uint32_t>(raw(o, 4))); }
  double f64(std::size_t o) const { return std::bit_cast<double>(raw(o, 8)); }

 private:
  std::span<const std::uint8_t> bytes_;
  bool big_endian_;
};

class ByteSink {
 public:
  ByteSink(std::vector<std::uint8_t>& out, bool big_endian) : out_(out), big_endian_(big_endian) {}
  void raw(std::size_t offset, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t dst = big_endian_ ? offset + n - 1 - i : offset + i;
      out_[dst] = static_cast<std::uint8_t>(v >> (8 * i));
    }
  }
  void i16(std::size_t o, std::int16_t v) { raw(o, static_cast<std::uint16_t>(v), 2); }
  void i32(std::size_t o, std::int32_t v) { raw(o, static_cast<std::uint32_t>(v), 4); }
  void f32(std::size_t o, float v) { raw(o, std::bit_cast<std::uint32_t>(v), 4); }
  void f64(std::size_t o, double v) { raw(o, std::bit_cast<std::uint64_t>(v), 8); }

 private:
  std::vector<std::uint8_t>& out_;
  bool big_endian_;
};

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (static_cast<NiftiDatatype>(datatype)) {
    case NiftiDatatype::kUint8: return 1;
    case NiftiDatatype::kInt16: return 2;
    case NiftiDatatype::kFloat32: return 4;
    case NiftiDatatype::kFloat64: return 8;
  }
  return 0;
}

}  // namespace

std::size_t Volume::planes() const {
  std::size_t n = 1;
  for (std::size_t i = 2; i < dims.size(); ++i) n *= dims[i];
  return n;
}

Volume read_nifti1(std::span<const std::uint8_t> bytes) {
  using Kind = NiftiError::Kind;
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    throw NiftiError(Kind::kCompressed,
                     "gzip-compressed NIfTI is not supported; decompress the .nii.gz first");
  }
  if (bytes.size() < kNiftiHeaderSize) {
    throw NiftiError(Kind::kTruncated, "NIfTI header truncated: expected " +
                                           std::to_string(kNiftiHeaderSize) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data() + kMagic, "n+1\0", 4) != 0) {
    const bool pair = std::memcmp(bytes.data() + kMagic, "ni1\0", 4) == 0;
    throw NiftiError(Kind::kBadMagic, pair ? "NIfTI .hdr/.img pairs are not supported (magic 'ni1')"
                                           : "bad NIfTI-1 magic (expected 'n+1')");
  }

  const std::int16_t dim0_le = ByteView(bytes, false).i16(kDim);
  const bool big_endian = dim0_le < 1 || dim0_le > 7;
  const ByteView in(bytes, big_endian);
  if (in.i32(kSizeofHdr) != static_cast<std::int32_t>(kNiftiHeaderSize)) {
    throw NiftiError(Kind::kInvalidHeader, "sizeof_hdr is " + std::to_string(in.i32(kSizeofHdr)) +
                                               ", expected 348");
  }
  const std::int16_t ndim = in.i16(kDim);
  if (ndim < 1 || ndim > 7) {
    throw NiftiError(Kind::kInvalidHeader, "dim[0] = " + std::to_string(ndim) + " out of range");
  }

  const std::int16_t datatype = in.i16(kDatatype);
  const std::size_t voxel_bytes = bytes_per_voxel(datatype);
  if (voxel_bytes == 0) {
    throw NiftiError(Kind::kUnsupportedDatatype,
                     "unsupported NIfTI datatype code " + std::to_string(datatype) +
                         " (supported: 2 uint8, 4 int16, 16 float32, 64 float64)");
  }
  if (in.i16(kBitpix) != static_cast<std::int16_t>(8 * voxel_bytes)) {
    throw NiftiError(Kind::kInvalidHeader, "bitpix " + std::to_string(in.i16(kBitpix)) +
                                               " does not match datatype " +
                                               std::to_string(datatype));
  }

  Volume v;
  v.datatype = static_cast<NiftiDatatype>(datatype);
  for (std::int16_t i = 1; i <= ndim; ++i) {
    const std::int16_t extent = in.i16(kDim + 2 * static_cast<std::size_t>(i));
    if (extent < 1) {
      throw NiftiError(Kind::kInvalidHeader, "dim[" + std::to_string(i) + "] = " +
                                                 std::to_string(extent) + " is not positive");
    }
    v.dims.push_back(static_cast<std::size_t>(extent));
    const float spacing = in.f32(kPixdim + 4 * static_cast<std::size_t>(i));
    v.spacing.push_back(std::isfinite(spacing) && spacing > 0.0f ? static_cast<double>(spacing) : 1.0);
  }
  while (v.dims.size() < 3) {
    v.dims.push_back(1);
    v.spacing.push_back(1.0);
  }

  const float vox_offset_f = in.f32(kVoxOffset);
  if (!std::isfinite(vox_offset_f) || vox_offset_f < static_cast<float>(kNiftiHeaderSize)) {
    throw NiftiError(Kind::kInvalidHeader, "vox_offset " + std::to_string(vox_offset_f) +
                                               " points inside the header");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
  std::size_t count = 1;
  for (std::size_t d : v.dims) count *= d;
  const std::size_t expected = vox_offset + count * voxel_bytes;
  if (bytes.size() < expected) {
    throw NiftiError(Kind::kTruncated, "NIfTI payload truncated: expected " +
                                           std::to_string(expected) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }

  v.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t o = vox_offset + i * voxel_bytes;
    switch (v.datatype) {
      case NiftiDatatype::kUint8: v.data[i] = bytes[o]; break;
      case NiftiDatatype::kInt16: v.data[i] = in.i16(o); break;
      case NiftiDatatype::kFloat32: v.data[i] = in.f32(o); break;
      case NiftiDatatype::kFloat64: v.data[i] = in.f64(o); break;
    }
  }
  const double slope = in.f32(kSclSlope);
  const double inter = in.f32(kSclInter);
  if (slope != 0.0 && std::isfinite(slope) && std::isfinite(inter)) {
    for (double& x : v.data) x = x * slope + inter;
  }
  return v;
}

Volume read_nifti1_file(const std::filesystem::path& path) {
  try {
    return read_nifti1(read_file_bytes(path));
  } catch (const NiftiError& e) {
    throw NiftiError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_nifti1(const Volume& volume, const NiftiWriteOptions& options) {
  if (volume.dims.empty() || volume.dims.size() > 7) {
    throw DataError("NIfTI volumes need between 1 and 7 dimensions");
  }
  std::size_t count = 1;
  for (std::size_t d : volume.dims) {
    if (d == 0 || d > 32767) throw DataError("NIfTI extent out of range: " + std::to_string(d));
    count *= d;
  }
  if (count != volume.data.size()) throw DataError("volume dims do not match its data length");
  const std::size_t voxel_bytes = bytes_per_voxel(static_cast<std::int16_t>(options.datatype));

  std::vector<std::uint8_t> out(kDefaultVoxOffset + count * voxel_bytes, 0);
  ByteSink sink(out, options.big_endian);
  sink.i32(kSizeofHdr, static_cast<std::int32_t>(kNiftiHeaderSize));
  sink.i16(kDim, static_cast<std::int16_t>(volume.dims.size()));
  for (std::size_t i = 0; i < 7; ++i) {
    const std::size_t extent = i < volume.dims.size() ? volume.dims[i] : 1;
    sink.i16(kDim + 2 * (i + 1), static_cast<std::int16_t>(extent));
  }
  sink.i16(kDatatype, static_cast<std::int16_t>(options.datatype));
  sink.i16(kBitpix, static_cast<std::int16_t>(8 * voxel_bytes));
  sink.f32(kPixdim, 1.0f);  // qfac
  for (std::size_t i = 0; i < 7; ++i) {
    const double s = i < volume.spacing.size() ? volume.spacing[i] : 1.0;
    sink.f32(kPixdim + 4 * (i + 1), static_cast<float>(s));
  }
  sink.f32(kVoxOffset, static_cast<float>(kDefaultVoxOffset));
  sink.f32(kSclSlope, options.scl_slope);
  sink.f32(kSclInter, options.scl_inter);
  std::memcpy(out.data() + kMagic, "n+1\0", 4);

  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t o = kDefaultVoxOffset + i * voxel_bytes;
    const double x = volume.data[i];
    auto check_integral = [&](double lo, double hi) {
      if (x != std::floor(x) || x < lo || x > hi) {
        throw DataError("value " + std::to_string(x) + " not representable in the integer datatype");
      }
    };
    switch (options.datatype) {
      case NiftiDatatype::kUint8:
        check_integral(0, 255);
        out[o] = static_cast<std::uint8_t>(x);
        break;
      case NiftiDatatype::kInt16:
        check_integral(-32768, 32767);
        sink.i16(o, static_cast<std::int16_t>(x));
        break;
      case NiftiDatatype::kFloat32: sink.f32(o, static_cast<float>(x)); break;
      case NiftiDatatype::kFloat64: sink.f64(o, x); break;
    }
  }
  return out;
}

void write_nifti1_file(const std::filesystem::path& path, const Volume& volume,
                       const NiftiWriteOptions& options) {
  write_file_bytes(path, encode_nifti1(volume, options));
}

}  // namespace urveda
