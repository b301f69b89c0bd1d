#pragma once

// Segmentation scoring: confusion matrices, per-class / mean IoU and result
// tables (CSV, Markdown, JSON).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "equiproj/raster.hpp"

namespace equiproj {

/// Ordered list of scored classes.
class ClassSet {
 public:
  ClassSet(std::vector<std::string> names, std::vector<std::uint8_t> ids,
           std::uint8_t ignore_id = kIgnoreId);

  /// roads, buildings, vegetation, sky, pedestrians, cars with ids 0..5.
  static ClassSet default_six();
  /// Either ["roads", "buildings", ...] (ids are positions) or
  /// {"classes": [{"id": 0, "name": "roads"}, ...], "ignore": 255}.
  static ClassSet from_json(const std::string& text);
  static ClassSet load(const std::filesystem::path& path);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::uint8_t>& ids() const { return ids_; }
  std::uint8_t ignore_id() const { return ignore_id_; }
  /// Position of a class id in the list, if declared.
  std::optional<std::size_t> index_of(std::uint8_t id) const;

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint8_t> ids_;
  std::uint8_t ignore_id_;
};

/// Rows are ground truth, columns are predictions; the extra last column
/// counts pixels predicted as the ignore id ("none").
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(ClassSet classes);

  const ClassSet& classes() const { return classes_; }
  std::uint64_t count(std::size_t gt, std::size_t pred) const {
    return counts_[gt * (classes_.size() + 1) + pred];
  }
  /// Column index of the "predicted ignore" bucket.
  std::size_t none_column() const { return classes_.size(); }
  std::uint64_t total() const;

  /// Counts every pixel where the mask (if any) is set and gt is not the
  /// ignore id. Throws DomainError on size mismatch or undeclared ids.
  void accumulate(const LabelMap& pred, const LabelMap& gt,
                  const ValidMask* mask = nullptr);

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  ClassSet classes_;
  std::vector<std::uint64_t> counts_;
};

/// Functional form of ConfusionMatrix::accumulate.
ConfusionMatrix accumulate(const LabelMap& pred, const LabelMap& gt,
                           const ValidMask* mask, ConfusionMatrix cm);

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

struct IoUReport {
  std::vector<std::string> classes;
  /// Percentages; empty when the class has zero union.
  std::vector<std::optional<double>> per_class;
  std::vector<ClassCounts> counts;
  /// Mean over all declared classes, zero-union classes counted as 0.
  double mean = 0.0;
};

IoUReport iou(const ConfusionMatrix& cm);

enum class TableFormat { Csv, Markdown, Json };

struct TableRow {
  std::string label;
  std::optional<double> phi;
  IoUReport report;
};

/// Row labelled by its sweep value ("6π/16").
TableRow phi_row(double phi, IoUReport report);

/// One row per report, columns in class order followed by "average".
/// Values are printed with two decimals; the best value of each column is
/// marked (bold in Markdown, trailing '*' in CSV), all ties included. A
/// column whose best value is 0 is not marked. Json ignores marking and
/// keeps full precision.
std::string emit_table(const std::vector<TableRow>& rows, TableFormat format);

struct ParsedTable {
  std::vector<std::string> header;
  struct Row {
    std::string label;
    std::vector<double> values;
    std::vector<bool> best;
  };
  std::vector<Row> rows;
};

/// Reads back the CSV produced by emit_table.
ParsedTable parse_table_csv(const std::string& text);

}  // namespace equiproj
