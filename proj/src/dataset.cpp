#include "urveda/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "urveda/errors.h"
#include "urveda/imaging.h"
#include "urveda/nifti.h"
#include "urveda/random.h"
#include "urveda/serialize.h"

namespace urveda {

namespace fs = std::filesystem;
using nlohmann::json;

void SliceSample::validate() const {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw DataError(id + ": image must be 1xHxW, got " + shape_str(image.shape()));
  }
  if (image.dim(1) != mask.height || image.dim(2) != mask.width) {
    throw DataError(id + ": image " + shape_str(image.shape()) + " and mask " +
                    std::to_string(mask.height) + "x" + std::to_string(mask.width) + " differ");
  }
  for (double v : image.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(id + ": image value " + std::to_string(v) + " outside [0,1]");
  }
  mask.validate();
}

std::vector<Fold> kfold_split(std::size_t count, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold split needs k >= 2, got " + std::to_string(k));
  if (k > count) {
    throw ConfigError("k-fold split with k = " + std::to_string(k) + " needs at least k samples, got " +
                      std::to_string(count));
  }
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t begin = f * count / k;
    const std::size_t end = (f + 1) * count / k;
    for (std::size_t i = 0; i < count; ++i) {
      (i >= begin && i < end ? folds[f].validation : folds[f].train).push_back(order[i]);
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
    std::sort(folds[f].validation.begin(), folds[f].validation.end());
  }
  return folds;
}

std::vector<IdFold> kfold_split(const std::vector<std::string>& ids, std::size_t k, std::uint64_t seed) {
  std::vector<IdFold> out;
  for (const Fold& f : kfold_split(ids.size(), k, seed)) {
    IdFold idf;
    for (std::size_t i : f.train) idf.train.push_back(ids[i]);
    for (std::size_t i : f.validation) idf.validation.push_back(ids[i]);
    out.push_back(std::move(idf));
  }
  return out;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json samples = json::array();
  for (const auto& e : manifest.entries) {
    json s = {{"id", e.id},
              {"image", e.image},
              {"mask", e.mask},
              {"volume_id", e.provenance.volume_id},
              {"slice_index", e.provenance.slice_index},
              {"phase", e.provenance.phase}};
    if (e.spacing) s["spacing_mm"] = {e.spacing->row_mm, e.spacing->col_mm};
    samples.push_back(std::move(s));
  }
  json doc = {{"format", "urveda-dataset"},
              {"version", 1},
              {"height", manifest.height},
              {"width", manifest.width},
              {"classes", manifest.classes},
              {"samples", std::move(samples)}};
  if (manifest.fold_k > 0) {
    doc["folds"] = {{"k", manifest.fold_k}, {"seed", manifest.fold_seed}, {"validation", manifest.fold_validation}};
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("format").get<std::string>() != "urveda-dataset") {
      throw DataError(path.string() + ": not a dataset manifest");
    }
    DatasetManifest m;
    m.height = doc.at("height").get<std::size_t>();
    m.width = doc.at("width").get<std::size_t>();
    m.classes = doc.at("classes").get<std::size_t>();
    for (const auto& s : doc.at("samples")) {
      ManifestEntry e;
      e.id = s.at("id").get<std::string>();
      e.image = s.at("image").get<std::string>();
      e.mask = s.at("mask").get<std::string>();
      e.provenance.volume_id = s.value("volume_id", e.id);
      e.provenance.slice_index = s.value("slice_index", std::size_t{0});
      e.provenance.phase = s.value("phase", std::string{});
      if (s.contains("spacing_mm")) {
        const auto sp = s.at("spacing_mm").get<std::vector<double>>();
        if (sp.size() != 2 || !(sp[0] > 0.0) || !(sp[1] > 0.0)) {
          throw DataError(path.string() + ": sample " + e.id + " has invalid spacing_mm");
        }
        e.spacing = PixelSpacing{sp[0], sp[1]};
      }
      m.entries.push_back(std::move(e));
    }
    if (doc.contains("folds")) {
      const auto& f = doc.at("folds");
      m.fold_k = f.at("k").get<std::size_t>();
      m.fold_seed = f.at("seed").get<std::uint64_t>();
      m.fold_validation = f.at("validation").get<std::vector<std::vector<std::string>>>();
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
}

void write_mask_nifti(const fs::path& path, const SegmentationMask& mask) {
  Volume v;
  v.dims = {mask.width, mask.height, 1};
  v.spacing = {mask.spacing ? mask.spacing->col_mm : 1.0, mask.spacing ? mask.spacing->row_mm : 1.0, 1.0};
  v.data.assign(mask.labels.begin(), mask.labels.end());
  v.datatype = NiftiDatatype::kUint8;
  write_nifti1_file(path, v, {.datatype = NiftiDatatype::kUint8});
}

SegmentationMask read_mask_file(const fs::path& path, std::size_t classes) {
  try {
    if (path.extension() == ".pgm") {
      const Gray8 g = decode_pgm(read_file_bytes(path));
      Image2D img{g.height, g.width, {g.pixels.begin(), g.pixels.end()}};
      return mask_from_image(img, classes);
    }
    const Volume v = read_nifti1_file(path);
    if (v.planes() != 1) throw DataError("expected a single 2D plane, got " + std::to_string(v.planes()));
    SegmentationMask m = mask_from_image(slice_volume(v).front().image, classes);
    m.spacing = PixelSpacing{v.spacing[1], v.spacing[0]};
    return m;
  } catch (const NiftiError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

DatasetManifest write_dataset(const fs::path& root, const std::vector<SliceSample>& samples,
                              std::size_t fold_k, std::uint64_t fold_seed) {
  DatasetManifest m;
  if (!samples.empty()) {
    m.height = samples.front().mask.height;
    m.width = samples.front().mask.width;
    m.classes = samples.front().mask.classes;
  }
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  fs::create_directories(root / "previews");
  for (const SliceSample& s : samples) {
    s.validate();
    if (s.mask.height != m.height || s.mask.width != m.width) {
      throw DataError(s.id + ": extents differ from the rest of the dataset");
    }
    ManifestEntry e{s.id, "images/" + s.id + ".nii", "masks/" + s.id + "_gt.nii", s.provenance, s.mask.spacing};
    Volume v;
    v.dims = {m.width, m.height, 1};
    v.spacing = {s.mask.spacing ? s.mask.spacing->col_mm : 1.0, s.mask.spacing ? s.mask.spacing->row_mm : 1.0, 1.0};
    v.data.assign(s.image.data().begin(), s.image.data().end());
    write_nifti1_file(root / e.image, v);
    write_mask_nifti(root / e.mask, s.mask);
    write_file_bytes(root / "previews" / (s.id + ".pgm"), encode_pgm(to_gray8(s.image)));
    m.entries.push_back(std::move(e));
  }
  if (fold_k >= 2 && samples.size() >= fold_k) {
    std::vector<std::string> ids;
    for (const auto& e : m.entries) ids.push_back(e.id);
    m.fold_k = fold_k;
    m.fold_seed = fold_seed;
    for (const IdFold& f : kfold_split(ids, fold_k, fold_seed)) m.fold_validation.push_back(f.validation);
  }
  write_manifest(root / "manifest.json", m);
  return m;
}

SliceSample load_sample(const fs::path& manifest_dir, const DatasetManifest& manifest, const ManifestEntry& entry) {
  SliceSample s;
  s.id = entry.id;
  s.provenance = entry.provenance;
  const Volume v = read_nifti1_file(manifest_dir / entry.image);
  if (v.planes() != 1) throw DataError(entry.image + ": expected a single 2D plane");
  const Image2D img = slice_volume(v).front().image;
  if (img.height != manifest.height || img.width != manifest.width) {
    throw DataError(entry.image + ": extents " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                    " differ from the manifest's " + std::to_string(manifest.height) + "x" +
                    std::to_string(manifest.width));
  }
  s.image = Tensor({1, img.height, img.width}, img.pixels);
  s.mask = read_mask_file(manifest_dir / entry.mask, manifest.classes);
  s.mask.spacing = entry.spacing;
  s.validate();
  return s;
}

std::vector<SliceSample> load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const fs::path dir = manifest_path.parent_path();
  std::vector<SliceSample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(dir, m, e));
  return out;
}

}  // namespace urveda
