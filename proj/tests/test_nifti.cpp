#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>

#include "urveda/nifti.h"

namespace urveda {
namespace {

// Builds a single-file NIfTI-1 image field by field, independently of the
// library encoder.
class FixtureBuilder {
 public:
  explicit FixtureBuilder(bool big_endian) : big_(big_endian), bytes_(352, 0) {
    put<std::int32_t>(0, 348);
    put<float>(108, 352.0f);
    std::memcpy(bytes_.data() + 344, "n+1\0", 4);
  }
  // d[0] is the NIfTI rank, followed by the extents.
  FixtureBuilder& dims(std::vector<std::int16_t> d) {
    for (std::size_t i = 0; i < d.size(); ++i) put<std::int16_t>(40 + 2 * i, d[i]);
    return *this;
  }
  FixtureBuilder& pixdim(std::size_t i, float v) {
    put<float>(76 + 4 * i, v);
    return *this;
  }
  FixtureBuilder& type(std::int16_t datatype, std::int16_t bitpix) {
    put<std::int16_t>(70, datatype);
    put<std::int16_t>(72, bitpix);
    return *this;
  }
  FixtureBuilder& scaling(float slope, float inter) {
    put<float>(112, slope);
    put<float>(116, inter);
    return *this;
  }
  template <typename T>
  FixtureBuilder& data(const std::vector<T>& values) {
    for (const T& v : values) {
      const std::size_t at = bytes_.size();
      bytes_.resize(at + sizeof(T));
      put<T>(at, v);
    }
    return *this;
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  template <typename T>
  void put(std::size_t offset, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if (big_) std::reverse(raw, raw + sizeof(T));
    std::memcpy(bytes_.data() + offset, raw, sizeof(T));
  }
  bool big_;
  std::vector<std::uint8_t> bytes_;
};

std::vector<float> ramp32() {
  std::vector<float> v(32);
  for (std::size_t i = 0; i < 32; ++i) v[i] = static_cast<float>(i);
  return v;
}

TEST(NiftiReadTest, Float32BothEndiannesses) {
  for (bool big : {false, true}) {
    FixtureBuilder f(big);
    f.dims({3, 4, 4, 2}).type(16, 32).pixdim(1, 1.5f).pixdim(2, 1.5f).pixdim(3, 8.0f).data(ramp32());
    const Volume v = read_nifti1(f.bytes());
    EXPECT_EQ(v.dims, (std::vector<std::size_t>{4, 4, 2}));
    EXPECT_EQ(v.planes(), 2u);
    EXPECT_EQ(v.datatype, NiftiDatatype::kFloat32);
    EXPECT_EQ(v.spacing, (std::vector<double>{1.5, 1.5, 8.0}));
    ASSERT_EQ(v.data.size(), 32u);
    for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(v.data[i], static_cast<double>(i)) << big;
  }
}

TEST(NiftiReadTest, IntegerAndDoubleDatatypes) {
  for (bool big : {false, true}) {
    {
      FixtureBuilder f(big);
      f.dims({2, 3, 1}).type(2, 8).data(std::vector<std::uint8_t>{0, 1, 255});
      EXPECT_EQ(read_nifti1(f.bytes()).data, (std::vector<double>{0, 1, 255}));
    }
    {
      FixtureBuilder f(big);
      f.dims({2, 2, 2}).type(4, 16).data(std::vector<std::int16_t>{-300, 0, 7, 32767});
      const Volume v = read_nifti1(f.bytes());
      EXPECT_EQ(v.data, (std::vector<double>{-300, 0, 7, 32767}));
      EXPECT_EQ(v.dims, (std::vector<std::size_t>{2, 2, 1}));
    }
    {
      FixtureBuilder f(big);
      f.dims({3, 1, 1, 2}).type(64, 64).data(std::vector<double>{0.1, -2.5});
      EXPECT_EQ(read_nifti1(f.bytes()).data, (std::vector<double>{0.1, -2.5}));
    }
  }
}

TEST(NiftiReadTest, AppliesSlopeAndIntercept) {
  FixtureBuilder f(false);
  f.dims({3, 2, 2, 1}).type(4, 16).scaling(2.0f, 1.0f).data(std::vector<std::int16_t>{0, 3, -1, 10});
  EXPECT_EQ(read_nifti1(f.bytes()).data, (std::vector<double>{1, 7, -1, 21}));
  FixtureBuilder g(true);
  g.dims({3, 2, 1, 1}).type(2, 8).scaling(0.0f, 5.0f).data(std::vector<std::uint8_t>{3, 4});
  EXPECT_EQ(read_nifti1(g.bytes()).data, (std::vector<double>{3, 4}));
}

TEST(NiftiReadTest, DefaultsNonPositiveSpacing) {
  FixtureBuilder f(false);
  f.dims({3, 2, 2, 1}).type(16, 32).pixdim(1, 0.0f).pixdim(2, -1.0f).pixdim(3, 2.0f).data(std::vector<float>(4, 0));
  EXPECT_EQ(read_nifti1(f.bytes()).spacing, (std::vector<double>{1.0, 1.0, 2.0}));
}

NiftiError::Kind error_kind(std::span<const std::uint8_t> bytes) {
  try {
    read_nifti1(bytes);
  } catch (const NiftiError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no NiftiError thrown";
  return NiftiError::Kind::kInvalidHeader;
}

TEST(NiftiReadTest, ErrorKinds) {
  FixtureBuilder f(false);
  f.dims({3, 4, 4, 2}).type(16, 32).data(ramp32());
  auto good = f.bytes();

  auto bad_magic = good;
  std::memcpy(bad_magic.data() + 344, "xx1\0", 4);
  EXPECT_EQ(error_kind(bad_magic), NiftiError::Kind::kBadMagic);
  auto pair_magic = good;
  std::memcpy(pair_magic.data() + 344, "ni1\0", 4);
  EXPECT_EQ(error_kind(pair_magic), NiftiError::Kind::kBadMagic);

  EXPECT_EQ(error_kind(std::span(good).first(good.size() - 1)), NiftiError::Kind::kTruncated);
  EXPECT_EQ(error_kind(std::span(good).first(200)), NiftiError::Kind::kTruncated);
  try {
    read_nifti1(std::span(good).first(good.size() - 4));
  } catch (const NiftiError& e) {
    EXPECT_NE(std::string(e.what()).find(std::to_string(352 + 128)), std::string::npos) << e.what();
  }

  auto unsupported = good;
  unsupported[70] = 128;  // RGB24
  unsupported[72] = 24;
  EXPECT_EQ(error_kind(unsupported), NiftiError::Kind::kUnsupportedDatatype);

  auto inconsistent = good;
  inconsistent[72] = 64;
  EXPECT_EQ(error_kind(inconsistent), NiftiError::Kind::kInvalidHeader);

  std::vector<std::uint8_t> gz = {0x1f, 0x8b, 8, 0};
  gz.resize(400, 0);
  EXPECT_EQ(error_kind(gz), NiftiError::Kind::kCompressed);
}

TEST(NiftiWriteTest, RoundTripsThroughOwnReader) {
  Volume v;
  v.dims = {3, 2, 2};
  v.spacing = {0.5, 0.75, 4.0};
  for (int i = 0; i < 12; ++i) v.data.push_back(i * 3 - 5);
  for (NiftiDatatype t : {NiftiDatatype::kInt16, NiftiDatatype::kFloat32, NiftiDatatype::kFloat64})
    for (bool big : {false, true}) {
      const Volume back = read_nifti1(encode_nifti1(v, {.datatype = t, .big_endian = big}));
      EXPECT_EQ(back.dims, v.dims);
      EXPECT_EQ(back.data, v.data);
      EXPECT_EQ(back.spacing, v.spacing);
      EXPECT_EQ(back.datatype, t);
    }
  EXPECT_THROW(encode_nifti1(v, {.datatype = NiftiDatatype::kUint8}), DataError);
  v.data[0] = 0.5;
  EXPECT_THROW(encode_nifti1(v, {.datatype = NiftiDatatype::kInt16}), DataError);
}

TEST(NiftiWriteTest, MatchesFixtureLayout) {
  Volume v;
  v.dims = {4, 4, 2};
  v.spacing = {1.5, 1.5, 8.0};
  for (float x : ramp32()) v.data.push_back(x);
  FixtureBuilder f(true);
  f.dims({3, 4, 4, 2}).type(16, 32).pixdim(1, 1.5f).pixdim(2, 1.5f).pixdim(3, 8.0f).data(ramp32());
  const auto encoded = encode_nifti1(v, {.datatype = NiftiDatatype::kFloat32, .big_endian = true});
  ASSERT_EQ(encoded.size(), f.bytes().size());
  const Volume a = read_nifti1(encoded), b = read_nifti1(f.bytes());
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(std::vector<std::uint8_t>(encoded.begin() + 352, encoded.end()),
            std::vector<std::uint8_t>(f.bytes().begin() + 352, f.bytes().end()));
}

TEST(NiftiWriteTest, FileErrorsNamePath) {
  const auto path = std::filesystem::temp_directory_path() / "urveda_missing_volume.nii";
  std::filesystem::remove(path);
  try {
    read_nifti1_file(path);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("urveda_missing_volume.nii"), std::string::npos);
  }
}

}  // namespace
}  // namespace urveda
