#pragma once

// Overlap and contour-distance metrics for label maps.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace urveda {

// Label integers follow the cardiac convention 0 background, 1 RV, 2 LMyo, 3 LV.
inline constexpr std::size_t kCardiacClasses = 4;

struct PixelSpacing {
  double row_mm = 1.0;
  double col_mm = 1.0;
};

struct SegmentationMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = kCardiacClasses;
  std::vector<std::uint8_t> labels;  // row-major
  std::optional<PixelSpacing> spacing;

  static SegmentationMask zeros(std::size_t height, std::size_t width,
                                std::size_t classes = kCardiacClasses);
  std::uint8_t at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return labels[row * width + col]; }
  // Throws DataError if a label is >= classes or the buffer size is wrong.
  void validate() const;
  bool operator==(const SegmentationMask& other) const {
    return height == other.height && width == other.width && labels == other.labels;
  }
};

struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  static BinaryMask zeros(std::size_t height, std::size_t width);
  bool at(std::size_t row, std::size_t col) const { return bits[row * width + col] != 0; }
  std::size_t count() const;
};

BinaryMask binarize(const SegmentationMask& mask, std::uint8_t label);

struct Point {
  std::int64_t row = 0;
  std::int64_t col = 0;
  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};
using PointSet = std::vector<Point>;

// 2|X∩Y| / (|X|+|Y|); 1 when both are empty, 0 when exactly one is.
double dsc(const BinaryMask& x, const BinaryMask& y);

enum class HausdorffMode { kDirected, kSymmetric };

// Directed: max over x∈X of min over y∈Y of ‖x−y‖. Symmetric: max of both
// directions. Distances are scaled by `spacing` when given. Returns nullopt
// (undefined) if either set is empty.
std::optional<double> hausdorff(const PointSet& x, const PointSet& y,
                                HausdorffMode mode = HausdorffMode::kSymmetric,
                                const std::optional<PixelSpacing>& spacing = std::nullopt);

// Foreground pixels with a 4-neighbour that is background or outside the image.
PointSet boundary_points(const BinaryMask& mask);

struct ClassMetrics {
  std::uint8_t label = 0;
  std::string name;
  double dsc = 0.0;
  std::optional<double> hd_px;  // undefined when either contour is empty
  std::optional<double> hd_mm;  // only when pixel spacing is known
};

struct MetricReport {
  std::vector<ClassMetrics> per_class;  // foreground classes in label order
  double mean_dsc = 0.0;
  std::optional<double> mean_hd_px;  // over classes with a defined distance
  std::optional<double> mean_hd_mm;
  bool spacing_known = false;

  const ClassMetrics& for_label(std::uint8_t label) const;
};

std::string class_name(std::uint8_t label, std::size_t classes);

// Per-class DSC and symmetric contour Hausdorff for every non-background class.
MetricReport evaluate(const SegmentationMask& pred, const SegmentationMask& truth);

// Aggregated report over many samples, grouped by cardiac phase.
struct SampleMetrics {
  std::string id;
  std::string phase;  // "ED", "ES" or anything else
  MetricReport metrics;
};

struct ReportTable {
  struct Row {
    std::string group;
    std::size_t samples = 0;
    std::vector<double> dsc;                // per class, column order
    std::vector<std::optional<double>> hd;  // per class, column order
    double mean_dsc = 0.0;
    std::optional<double> mean_hd;
  };
  std::vector<std::uint8_t> column_labels;  // LV, RV, LMyo for cardiac masks
  std::vector<std::string> column_names;
  bool hd_in_mm = false;
  std::vector<Row> rows;  // one per phase present, then "Average"
};

// Column order of reports: LV, RV, LMyo for 4-class cardiac masks, else label order.
std::vector<std::uint8_t> report_column_order(std::size_t classes);

ReportTable aggregate_report(const std::vector<SampleMetrics>& samples, std::size_t classes);
// Tab-separated table: group, DSC per class, HD per class, mean DSC, mean HD.
void write_report_table(std::ostream& out, const ReportTable& table);

}  // namespace urveda
