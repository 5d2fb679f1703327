#pragma once

// 2D training samples, k-fold splitting and the on-disk dataset layout:
//   <root>/manifest.json
//   <root>/images/<id>.nii     float64 image in [0,1]
//   <root>/masks/<id>_gt.nii   uint8 labels
//   <root>/previews/<id>.pgm   8-bit grayscale copy for inspection

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "urveda/metrics.h"
#include "urveda/tensor.h"

namespace urveda {

struct Provenance {
  std::string volume_id;
  std::size_t slice_index = 0;
  std::string phase;  // "ED", "ES" or free-form
};

struct SliceSample {
  std::string id;
  Tensor image;  // 1×H×W, values in [0,1]
  SegmentationMask mask;
  Provenance provenance;

  // Throws DataError when extents disagree or values leave their ranges.
  void validate() const;
};

struct Fold {
  std::vector<std::size_t> train;       // ascending
  std::vector<std::size_t> validation;  // ascending
};

// Seeded shuffle of 0..count-1 cut into k contiguous validation blocks whose
// sizes differ by at most one.
std::vector<Fold> kfold_split(std::size_t count, std::size_t k, std::uint64_t seed);

struct IdFold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};
std::vector<IdFold> kfold_split(const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed);

struct ManifestEntry {
  std::string id;
  std::string image;  // path relative to the manifest directory
  std::string mask;
  Provenance provenance;
  std::optional<PixelSpacing> spacing;
};

struct DatasetManifest {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = kCardiacClasses;
  std::vector<ManifestEntry> entries;
  // Default split recorded for reference (empty when fewer samples than k).
  std::size_t fold_k = 0;
  std::uint64_t fold_seed = 0;
  std::vector<std::vector<std::string>> fold_validation;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
// Throws DataError on malformed content.
DatasetManifest read_manifest(const std::filesystem::path& path);

// Writes samples, previews and a manifest under `root` (created if needed).
DatasetManifest write_dataset(const std::filesystem::path& root, const std::vector<SliceSample>& samples,
                              std::size_t fold_k, std::uint64_t fold_seed);
SliceSample load_sample(const std::filesystem::path& manifest_dir, const DatasetManifest& manifest,
                        const ManifestEntry& entry);
std::vector<SliceSample> load_dataset(const std::filesystem::path& manifest_path);

// Reads a label map stored as NIfTI (.nii) or 8-bit PGM (.pgm).
SegmentationMask read_mask_file(const std::filesystem::path& path, std::size_t classes);
void write_mask_nifti(const std::filesystem::path& path, const SegmentationMask& mask);

}  // namespace urveda
