#include "urveda/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

#include "urveda/errors.h"

namespace urveda {

namespace {

void check_extents(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2) {
  if (h1 != h2 || w1 != w2) {
    throw ShapeError("mask extents differ: " + std::to_string(h1) + "x" + std::to_string(w1) +
                     " vs " + std::to_string(h2) + "x" + std::to_string(w2));
  }
}

double directed(const PointSet& from, const PointSet& to, double sr, double sc) {
  double worst = 0.0;
  for (const Point& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& b : to) {
      const double dr = static_cast<double>(a.row - b.row) * sr;
      const double dc = static_cast<double>(a.col - b.col) * sc;
      best = std::min(best, dr * dr + dc * dc);
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

std::optional<double> mean_of_defined(const std::vector<std::optional<double>>& values) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      total += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

}  // namespace

SegmentationMask SegmentationMask::zeros(std::size_t height, std::size_t width,
                                         std::size_t classes) {
  SegmentationMask m;
  m.height = height;
  m.width = width;
  m.classes = classes;
  m.labels.assign(height * width, 0);
  return m;
}

void SegmentationMask::validate() const {
  if (labels.size() != height * width) {
    throw DataError("mask buffer holds " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) +
                      " is outside [0, " + std::to_string(classes) + ")");
    }
  }
}

BinaryMask BinaryMask::zeros(std::size_t height, std::size_t width) {
  return {height, width, std::vector<std::uint8_t>(height * width, 0)};
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BinaryMask binarize(const SegmentationMask& mask, std::uint8_t label) {
  BinaryMask b = BinaryMask::zeros(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.labels.size(); ++i) b.bits[i] = mask.labels[i] == label;
  return b;
}

double dsc(const BinaryMask& x, const BinaryMask& y) {
  check_extents(x.height, x.width, y.height, y.width);
  std::size_t nx = 0, ny = 0, both = 0;
  for (std::size_t i = 0; i < x.bits.size(); ++i) {
    nx += x.bits[i];
    ny += y.bits[i];
    both += x.bits[i] & y.bits[i];
  }
  if (nx + ny == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

std::optional<double> hausdorff(const PointSet& x, const PointSet& y, HausdorffMode mode,
                                const std::optional<PixelSpacing>& spacing) {
  if (x.empty() || y.empty()) return std::nullopt;
  const double sr = spacing ? spacing->row_mm : 1.0;
  const double sc = spacing ? spacing->col_mm : 1.0;
  const double forward = directed(x, y, sr, sc);
  if (mode == HausdorffMode::kDirected) return forward;
  return std::max(forward, directed(y, x, sr, sc));
}

PointSet boundary_points(const BinaryMask& mask) {
  PointSet points;
  const auto h = static_cast<std::int64_t>(mask.height);
  const auto w = static_cast<std::int64_t>(mask.width);
  auto fg = [&](std::int64_t r, std::int64_t c) {
    return r >= 0 && r < h && c >= 0 && c < w &&
           mask.bits[static_cast<std::size_t>(r * w + c)] != 0;
  };
  for (std::int64_t r = 0; r < h; ++r) {
    for (std::int64_t c = 0; c < w; ++c) {
      if (!fg(r, c)) continue;
      if (!fg(r - 1, c) || !fg(r + 1, c) || !fg(r, c - 1) || !fg(r, c + 1)) points.push_back({r, c});
    }
  }
  return points;
}

std::string class_name(std::uint8_t label, std::size_t classes) {
  if (classes == kCardiacClasses) {
    static const char* kNames[] = {"background", "RV", "LMyo", "LV"};
    return kNames[label];
  }
  return "class" + std::to_string(label);
}

const ClassMetrics& MetricReport::for_label(std::uint8_t label) const {
  for (const auto& c : per_class)
    if (c.label == label) return c;
  throw std::out_of_range("no metrics for label " + std::to_string(label));
}

MetricReport evaluate(const SegmentationMask& pred, const SegmentationMask& truth) {
  check_extents(pred.height, pred.width, truth.height, truth.width);
  pred.validate();
  truth.validate();
  const std::size_t classes = std::max(pred.classes, truth.classes);
  const std::optional<PixelSpacing> spacing = truth.spacing ? truth.spacing : pred.spacing;
  MetricReport report;
  report.spacing_known = spacing.has_value();
  std::vector<std::optional<double>> hd_px, hd_mm;
  double dsc_total = 0.0;
  for (std::size_t label = 1; label < classes; ++label) {
    const auto l = static_cast<std::uint8_t>(label);
    const BinaryMask p = binarize(pred, l);
    const BinaryMask t = binarize(truth, l);
    ClassMetrics m;
    m.label = l;
    m.name = class_name(l, classes);
    m.dsc = dsc(p, t);
    const PointSet bp = boundary_points(p);
    const PointSet bt = boundary_points(t);
    m.hd_px = hausdorff(bp, bt, HausdorffMode::kSymmetric);
    if (spacing) m.hd_mm = hausdorff(bp, bt, HausdorffMode::kSymmetric, spacing);
    dsc_total += m.dsc;
    hd_px.push_back(m.hd_px);
    hd_mm.push_back(m.hd_mm);
    report.per_class.push_back(std::move(m));
  }
  if (!report.per_class.empty()) report.mean_dsc = dsc_total / static_cast<double>(report.per_class.size());
  report.mean_hd_px = mean_of_defined(hd_px);
  if (spacing) report.mean_hd_mm = mean_of_defined(hd_mm);
  return report;
}

std::vector<std::uint8_t> report_column_order(std::size_t classes) {
  if (classes == kCardiacClasses) return {3, 1, 2};
  std::vector<std::uint8_t> order;
  for (std::size_t l = 1; l < classes; ++l) order.push_back(static_cast<std::uint8_t>(l));
  return order;
}

ReportTable aggregate_report(const std::vector<SampleMetrics>& samples, std::size_t classes) {
  ReportTable table;
  table.column_labels = report_column_order(classes);
  for (auto l : table.column_labels) table.column_names.push_back(class_name(l, classes));
  table.hd_in_mm = !samples.empty() && std::all_of(samples.begin(), samples.end(), [](const auto& s) {
    return s.metrics.spacing_known;
  });

  // ED and ES first (the conventional phases), then any other tags alphabetically.
  std::vector<std::string> groups;
  for (const char* phase : {"ED", "ES"}) {
    if (std::any_of(samples.begin(), samples.end(), [&](const auto& s) { return s.phase == phase; }))
      groups.emplace_back(phase);
  }
  std::map<std::string, bool> others;
  for (const auto& s : samples)
    if (s.phase != "ED" && s.phase != "ES") others[s.phase] = true;
  for (const auto& [phase, _] : others) groups.push_back(phase);

  auto build_row = [&](const std::string& name, auto&& include) {
    ReportTable::Row row;
    row.group = name;
    const std::size_t n_cols = table.column_labels.size();
    std::vector<double> dsc_sum(n_cols, 0.0);
    std::vector<double> hd_sum(n_cols, 0.0);
    std::vector<std::size_t> hd_count(n_cols, 0);
    for (const auto& s : samples) {
      if (!include(s)) continue;
      ++row.samples;
      for (std::size_t c = 0; c < n_cols; ++c) {
        const auto& m = s.metrics.for_label(table.column_labels[c]);
        dsc_sum[c] += m.dsc;
        const auto& hd = table.hd_in_mm ? m.hd_mm : m.hd_px;
        if (hd) {
          hd_sum[c] += *hd;
          ++hd_count[c];
        }
      }
    }
    double dsc_total = 0.0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double d = row.samples ? dsc_sum[c] / static_cast<double>(row.samples) : 0.0;
      row.dsc.push_back(d);
      dsc_total += d;
      row.hd.push_back(hd_count[c] ? std::optional<double>(hd_sum[c] / static_cast<double>(hd_count[c]))
                                   : std::nullopt);
    }
    row.mean_dsc = n_cols ? dsc_total / static_cast<double>(n_cols) : 0.0;
    row.mean_hd = mean_of_defined(row.hd);
    return row;
  };

  for (const auto& g : groups)
    table.rows.push_back(build_row(g, [&](const SampleMetrics& s) { return s.phase == g; }));
  table.rows.push_back(build_row("Average", [](const SampleMetrics&) { return true; }));
  return table;
}

void write_report_table(std::ostream& out, const ReportTable& table) {
  const char* unit = table.hd_in_mm ? "mm" : "px";
  out << "group\tsamples";
  for (const auto& n : table.column_names) out << "\tDSC_" << n;
  for (const auto& n : table.column_names) out << "\tHD_" << n << '(' << unit << ')';
  out << "\tDSC_mean\tHD_mean(" << unit << ")\n";
  auto put = [&](const std::optional<double>& v) {
    if (v) {
      out << '\t' << std::fixed << std::setprecision(4) << *v;
    } else {
      out << "\tundefined";
    }
  };
  for (const auto& row : table.rows) {
    out << row.group << '\t' << row.samples;
    for (double d : row.dsc) put(d);
    for (const auto& h : row.hd) put(h);
    put(row.mean_dsc);
    put(row.mean_hd);
    out << '\n';
  }
}

}  // namespace urveda
