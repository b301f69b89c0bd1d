#include "equiproj/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "equiproj/angle_expr.hpp"
#include "equiproj/errors.hpp"

namespace equiproj {
namespace {

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

ClassSet::ClassSet(std::vector<std::string> names,
                   std::vector<std::uint8_t> ids, std::uint8_t ignore_id)
    : names_(std::move(names)), ids_(std::move(ids)), ignore_id_(ignore_id) {
  if (names_.empty()) throw DomainError("class set is empty");
  if (names_.size() != ids_.size()) {
    throw DomainError("class names and ids differ in length");
  }
  std::set<std::uint8_t> seen;
  for (auto id : ids_) {
    if (id == ignore_id_) throw DomainError("class id equals the ignore id");
    if (!seen.insert(id).second) {
      throw DomainError("duplicate class id " + std::to_string(id));
    }
  }
}

ClassSet ClassSet::default_six() {
  return ClassSet({"roads", "buildings", "vegetation", "sky", "pedestrians",
                   "cars"},
                  {0, 1, 2, 3, 4, 5});
}

ClassSet ClassSet::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("class list is not valid JSON: ") + e.what());
  }
  std::vector<std::string> names;
  std::vector<std::uint8_t> ids;
  std::uint8_t ignore = kIgnoreId;
  try {
    if (doc.is_array()) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        names.push_back(doc[i].get<std::string>());
        ids.push_back(static_cast<std::uint8_t>(i));
      }
    } else if (doc.is_object()) {
      for (const auto& c : doc.at("classes")) {
        const int id = c.at("id").get<int>();
        if (id < 0 || id > 255) throw DomainError("class id outside [0, 255]");
        ids.push_back(static_cast<std::uint8_t>(id));
        names.push_back(c.at("name").get<std::string>());
      }
      if (doc.contains("ignore")) {
        const int id = doc["ignore"].get<int>();
        if (id < 0 || id > 255) throw DomainError("ignore id outside [0, 255]");
        ignore = static_cast<std::uint8_t>(id);
      }
    } else {
      throw DomainError("class list must be a JSON array or object");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed class list: ") + e.what());
  }
  return ClassSet(std::move(names), std::move(ids), ignore);
}

ClassSet ClassSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::optional<std::size_t> ClassSet::index_of(std::uint8_t id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

ConfusionMatrix::ConfusionMatrix(ClassSet classes)
    : classes_(std::move(classes)),
      counts_(classes_.size() * (classes_.size() + 1), 0) {}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt,
                                 const ValidMask* mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw DomainError("prediction and ground truth sizes differ");
  }
  if (mask != nullptr &&
      (mask->width() != gt.width() || mask->height() != gt.height())) {
    throw DomainError("mask size differs from ground truth");
  }

  // id -> row/column; -1 marks undeclared ids.
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    lookup[classes_.ids()[i]] = static_cast<int>(i);
  }
  const int none = static_cast<int>(none_column());
  lookup[classes_.ignore_id()] = none;

  const std::size_t stride = classes_.size() + 1;
  std::vector<std::uint64_t> delta(counts_.size(), 0);
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const int g = lookup[gt.at(x, y)];
      const int p = lookup[pred.at(x, y)];
      if (g < 0 || p < 0) {
        throw DomainError("undeclared class id " +
                          std::to_string(g < 0 ? gt.at(x, y) : pred.at(x, y)) +
                          " at (" + std::to_string(x) + ", " +
                          std::to_string(y) + ")");
      }
      if (g == none) continue;
      if (mask != nullptr && !mask->at(x, y)) continue;
      ++delta[static_cast<std::size_t>(g) * stride + static_cast<std::size_t>(p)];
    }
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += delta[i];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (!(other.classes_ == classes_)) {
    throw DomainError("cannot merge confusion matrices over different classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix accumulate(const LabelMap& pred, const LabelMap& gt,
                           const ValidMask* mask, ConfusionMatrix cm) {
  cm.accumulate(pred, gt, mask);
  return cm;
}

IoUReport iou(const ConfusionMatrix& cm) {
  const std::size_t c = cm.classes().size();
  IoUReport report;
  report.classes = cm.classes().names();
  report.per_class.resize(c);
  report.counts.resize(c);

  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    ClassCounts& counts = report.counts[k];
    counts.tp = cm.count(k, k);
    for (std::size_t p = 0; p <= c; ++p) {
      if (p != k) counts.fn += cm.count(k, p);
    }
    for (std::size_t g = 0; g < c; ++g) {
      if (g != k) counts.fp += cm.count(g, k);
    }
    const std::uint64_t uni = counts.tp + counts.fp + counts.fn;
    if (uni == 0) continue;
    const double value =
        static_cast<double>(counts.tp) / static_cast<double>(uni) * 100.0;
    report.per_class[k] = value;
    sum += value;
  }
  report.mean = sum / static_cast<double>(c);
  return report;
}

TableRow phi_row(double phi, IoUReport report) {
  return {format_phi(phi), phi, std::move(report)};
}

std::string emit_table(const std::vector<TableRow>& rows, TableFormat format) {
  if (rows.empty()) throw DomainError("emit_table needs at least one report");
  const auto& classes = rows.front().report.classes;
  for (const auto& r : rows) {
    if (r.report.classes != classes) {
      throw DomainError("all reports in a table must share the class list");
    }
  }

  if (format == TableFormat::Json) {
    nlohmann::ordered_json doc;
    doc["classes"] = classes;
    auto& out_rows = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["label"] = r.label;
      row["phi"] = r.phi ? nlohmann::ordered_json(*r.phi) : nullptr;
      nlohmann::ordered_json per_class;
      nlohmann::ordered_json counts;
      for (std::size_t k = 0; k < classes.size(); ++k) {
        const auto& v = r.report.per_class[k];
        per_class[classes[k]] = v ? nlohmann::ordered_json(*v) : nullptr;
        const auto& c = r.report.counts[k];
        counts[classes[k]] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
      }
      row["per_class"] = std::move(per_class);
      row["mean"] = r.report.mean;
      row["counts"] = std::move(counts);
      out_rows.push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
  }

  // Cell values as printed; marking compares printed values.
  const std::size_t cols = classes.size() + 1;
  std::vector<std::vector<std::string>> cells(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& rep = rows[r].report;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      cells[r].push_back(two_decimals(rep.per_class[k].value_or(0.0)));
    }
    cells[r].push_back(two_decimals(rep.mean));
  }
  std::vector<double> best(cols, 0.0);
  for (std::size_t k = 0; k < cols; ++k) {
    for (const auto& row : cells) best[k] = std::max(best[k], std::stod(row[k]));
  }
  auto is_best = [&](std::size_t r, std::size_t k) {
    return best[k] > 0.0 && std::stod(cells[r][k]) == best[k];
  };

  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "phi";
    for (const auto& name : classes) out << ',' << name;
    out << ",average\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out << rows[r].label;
      for (std::size_t k = 0; k < cols; ++k) {
        out << ',' << cells[r][k] << (is_best(r, k) ? "*" : "");
      }
      out << '\n';
    }
  } else {
    out << "| φ |";
    for (const auto& name : classes) out << ' ' << name << " |";
    out << " average |\n|---|";
    for (std::size_t k = 0; k < cols; ++k) out << "---:|";
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out << "| " << rows[r].label << " |";
      for (std::size_t k = 0; k < cols; ++k) {
        if (is_best(r, k)) {
          out << " **" << cells[r][k] << "** |";
        } else {
          out << ' ' << cells[r][k] << " |";
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

ParsedTable parse_table_csv(const std::string& text) {
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
  };

  ParsedTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty table");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != table.header.size()) {
      throw DomainError("table row has " + std::to_string(fields.size()) +
                        " fields, header has " +
                        std::to_string(table.header.size()));
    }
    ParsedTable::Row row;
    row.label = fields[0];
    for (std::size_t k = 1; k < fields.size(); ++k) {
      std::string f = fields[k];
      const bool marked = !f.empty() && f.back() == '*';
      if (marked) f.pop_back();
      row.values.push_back(std::stod(f));
      row.best.push_back(marked);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace equiproj
