#include "equiproj/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "equiproj/angle_expr.hpp"
#include "equiproj/digest.hpp"
#include "equiproj/errors.hpp"
#include "equiproj/parallel.hpp"
#include "equiproj/png_io.hpp"

namespace equiproj {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kLabelSuffix = "_labels";

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int json_byte(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_integer()) throw DomainError(what + " must be an integer");
  const auto i = v.get<long long>();
  if (i < 0 || i > 255) throw DomainError(what + " must be in [0, 255]");
  return static_cast<int>(i);
}

void flip_vertical(RasterImage& img) {
  for (int y = 0; y < img.height() / 2; ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto a = img.pixel(x, y);
      auto b = img.pixel(x, img.height() - 1 - y);
      std::swap_ranges(a.begin(), a.end(), b.begin());
    }
  }
}

void flip_vertical(LabelMap& labels) {
  for (int y = 0; y < labels.height() / 2; ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      std::swap(labels.at(x, y), labels.at(x, labels.height() - 1 - y));
    }
  }
}

void flip_vertical(ValidMask& mask) {
  for (int y = 0; y < mask.height() / 2; ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const bool a = mask.at(x, y);
      mask.set(x, y, mask.at(x, mask.height() - 1 - y));
      mask.set(x, mask.height() - 1 - y, a);
    }
  }
}

template <typename Raster>
Raster crop_rect(const Raster& src, const CropRect& r);

template <>
RasterImage crop_rect(const RasterImage& src, const CropRect& r) {
  RasterImage out(r.width, r.height, src.channels());
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      const auto from = src.pixel(r.x + x, r.y + y);
      std::copy(from.begin(), from.end(), out.pixel(x, y).begin());
    }
  }
  return out;
}

template <>
LabelMap crop_rect(const LabelMap& src, const CropRect& r) {
  LabelMap out(r.width, r.height, src.ignore_id(), src.ignore_id());
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) out.at(x, y) = src.at(r.x + x, r.y + y);
  }
  return out;
}

std::string describe(const CropRect& r) {
  return "[" + std::to_string(r.x) + ", " + std::to_string(r.y) + ", " +
         std::to_string(r.width) + ", " + std::to_string(r.height) + "]";
}

// One tile to generate from an already loaded source.
struct TileSpec {
  std::optional<CropRect> crop;
  double phi = 0.0;
  std::string subdir;
  std::string name;
  std::uint64_t stream = 0;  // per-entry RNG stream id
};

struct TileResult {
  std::optional<ManifestEntry> entry;
  std::string error;
};

double draw_theta(const SweepConfig& config, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  const auto column = static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                   config.spec.width()));
  return -kPi + column * config.spec.delta_theta();
}

TileResult make_tile(const SourcePair& pair, const RasterImage& image,
                     const LabelMap& labels, const TileSpec& spec,
                     const SweepConfig& config, const fs::path& out) {
  TileResult result;
  try {
    RasterImage img = image;
    LabelMap lab = labels;
    if (spec.crop) {
      const CropRect& r = *spec.crop;
      if (r.x < 0 || r.y < 0 || r.width < 1 || r.height < 1 ||
          r.x + r.width > image.width() || r.y + r.height > image.height()) {
        throw DomainError("crop " + describe(r) + " outside the " +
                          std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + " source");
      }
      img = crop_rect(img, r);
      lab = crop_rect(lab, r);
    }

    const int n = odd_side(config.n);
    const double theta =
        config.random_theta ? draw_theta(config, spec.stream) : config.theta;
    ProjectionJob job{SphereCoord(theta, spec.phi), config.spec, n,
                      config.interp, config.mode, 1};

    const ProjectedImage projected = project_image(resize_square(img, n), job);
    const ProjectedLabels projected_labels =
        project_labels(resize_square(lab, n), job);

    RasterImage tile_image =
        crop_to_upper_tile(projected.image, projected.mask, config.tile);
    LabelMap tile_labels =
        crop_to_upper_tile(projected_labels.labels, projected.mask, config.tile);
    ValidMask tile_mask = crop_to_upper_tile(projected.mask, config.tile);
    if (config.mirror) {
      flip_vertical(tile_image);
      flip_vertical(tile_labels);
      flip_vertical(tile_mask);
    }

    const double coverage =
        static_cast<double>(tile_mask.count()) /
        (static_cast<double>(config.tile) * config.tile);
    if (coverage <= 0.0) throw DomainError("projected tile has no coverage");

    const auto image_bytes = encode_png(tile_image);
    const auto label_bytes = encode_png(tile_labels);
    Sha256 digest;
    digest.update(image_bytes);
    digest.update(label_bytes);

    ManifestEntry entry;
    entry.source = pair.image.filename().string();
    entry.crop = spec.crop;
    entry.phi = spec.phi;
    entry.theta = theta;
    entry.image = spec.subdir + "/images/" + spec.name + ".png";
    entry.labels = spec.subdir + "/labels/" + spec.name + ".png";
    entry.coverage = coverage;
    entry.sha256 = digest.hex_digest();

    write_file(out / entry.image, image_bytes);
    write_file(out / entry.labels, label_bytes);
    result.entry = std::move(entry);
  } catch (const std::exception& e) {
    result.error = pair.image.filename().string() +
                   (spec.crop ? " crop " + describe(*spec.crop) : "") + " @ " +
                   format_phi(spec.phi) + ": " + e.what();
  }
  return result;
}

// Shared driver: tiles_for(pair_index) lists the tiles of one source.
// Sources are processed in parallel. The manifest lists tiles source by
// source, or tile index first when phi_major is set (one block per phi).
template <typename TilesFor>
Manifest run_batch(const PairScan& sources, const fs::path& out,
                   const SweepConfig& config,
                   const std::vector<std::string>& subdirs, TilesFor tiles_for,
                   bool phi_major) {
  config.validate();
  if (sources.pairs.empty()) {
    throw DomainError("no usable image/label pairs found");
  }
  {
    std::set<std::string> stems;
    for (const auto& p : sources.pairs) {
      if (!stems.insert(p.stem).second) {
        throw DomainError("duplicate source stem '" + p.stem + "'");
      }
    }
  }
  if (!sources.unpaired.empty()) {
    warn(std::to_string(sources.unpaired.size()) +
         " unpaired file(s) skipped, first: " +
         sources.unpaired.front().filename().string());
  }

  try {
    for (const auto& dir : subdirs) {
      fs::create_directories(out / dir / "images");
      fs::create_directories(out / dir / "labels");
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }

  const int count = static_cast<int>(sources.pairs.size());
  std::vector<std::vector<TileResult>> results(static_cast<std::size_t>(count));
  parallel_for(0, count, config.threads, [&](int i) {
    const SourcePair& pair = sources.pairs[static_cast<std::size_t>(i)];
    const std::vector<TileSpec> tiles = tiles_for(i);
    auto& slot = results[static_cast<std::size_t>(i)];
    try {
      const RasterImage image = read_image(pair.image);
      const LabelMap labels = config.class_map.apply(read_labels(pair.labels));
      if (image.width() != labels.width() || image.height() != labels.height()) {
        throw DomainError("image and label sizes differ");
      }
      for (const auto& t : tiles) {
        slot.push_back(make_tile(pair, image, labels, t, config, out));
      }
    } catch (const std::exception& e) {
      slot.assign(tiles.size(),
                  TileResult{std::nullopt, pair.image.filename().string() +
                                               ": " + e.what()});
    }
  });

  Manifest manifest;
  manifest.unpaired = sources.unpaired.size();
  auto take = [&](const TileResult& r) {
    if (r.entry) {
      manifest.entries.push_back(*r.entry);
    } else {
      manifest.errors.push_back(r.error);
    }
  };
  if (phi_major) {
    std::size_t per_source = 0;
    for (const auto& r : results) per_source = std::max(per_source, r.size());
    for (std::size_t k = 0; k < per_source; ++k) {
      for (const auto& r : results) {
        if (k < r.size()) take(r[k]);
      }
    }
  } else {
    for (const auto& r : results) {
      for (const auto& t : r) take(t);
    }
  }
  write_manifest(manifest, out / "manifest.jsonl");
  return manifest;
}

PairScan require_dir_scan(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("input directory " + dir.string() + " does not exist");
  }
  return discover_pairs(dir);
}

}  // namespace

ClassMap::ClassMap() { table_.fill(kIgnoreId); }

ClassMap ClassMap::default_six() {
  ClassMap map;
  for (std::uint8_t id = 0; id < 6; ++id) map.set(id, id);
  return map;
}

ClassMap ClassMap::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("class map is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DomainError("class map must be a JSON object");
  ClassMap map;
  for (const auto& [key, value] : doc.items()) {
    int source = 0;
    try {
      std::size_t used = 0;
      source = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw DomainError("class map key '" + key + "' is not an integer id");
    }
    if (source < 0 || source > 255) {
      throw DomainError("class map key '" + key + "' outside [0, 255]");
    }
    map.set(static_cast<std::uint8_t>(source),
            static_cast<std::uint8_t>(json_byte(value, "class map target")));
  }
  return map;
}

ClassMap ClassMap::load(const fs::path& path) { return from_json(read_text(path)); }

LabelMap ClassMap::apply(const LabelMap& labels) const {
  LabelMap out = labels;
  for (auto& id : out.ids()) id = table_[id];
  return out;
}

std::vector<double> SweepConfig::default_phis() {
  std::vector<double> phis;
  for (int k = 1; k <= 8; ++k) phis.push_back((k * kPi) / 16.0);
  return phis;
}

void SweepConfig::validate() const {
  if (phis.empty()) throw DomainError("sweep needs at least one phi");
  for (double phi : phis) {
    if (!(phi > 0.0 && phi <= kPi / 2)) {
      throw DomainError("sweep phi " + std::to_string(phi) +
                        " outside (0, pi/2]");
    }
  }
  if (tile < 32) throw DomainError("tile must be >= 32");
  if (tile > std::min(spec.width(), spec.height())) {
    throw DomainError("tile " + std::to_string(tile) +
                      " exceeds the canvas height");
  }
  odd_side(n);
}

PairScan discover_pairs(const fs::path& dir) {
  std::map<std::string, fs::path> images;
  std::map<std::string, fs::path> labels;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() != ".png") continue;
    const std::string stem = p.stem().string();
    if (stem.size() > kLabelSuffix.size() &&
        stem.ends_with(kLabelSuffix)) {
      labels[stem.substr(0, stem.size() - kLabelSuffix.size())] = p;
    } else {
      images[stem] = p;
    }
  }

  PairScan scan;
  for (const auto& [stem, path] : images) {
    auto it = labels.find(stem);
    if (it == labels.end()) {
      scan.unpaired.push_back(path);
    } else {
      scan.pairs.push_back({stem, path, it->second});
      labels.erase(it);
    }
  }
  for (const auto& [stem, path] : labels) scan.unpaired.push_back(path);
  std::sort(scan.unpaired.begin(), scan.unpaired.end());
  return scan;
}

PairScan read_pair_listing(const fs::path& listing) {
  std::ifstream in(listing);
  if (!in) throw IoError("cannot open " + listing.string());
  const fs::path base = listing.parent_path();
  PairScan scan;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DomainError(listing.string() + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("image") || !obj["image"].is_string()) {
      throw DomainError(listing.string() + ":" + std::to_string(line_no) +
                        ": expected {\"image\": ..., \"labels\": ...}");
    }
    fs::path image = obj["image"].get<std::string>();
    if (image.is_relative()) image = base / image;
    if (!obj.contains("labels") || !obj["labels"].is_string()) {
      scan.unpaired.push_back(image);
      continue;
    }
    fs::path labels = obj["labels"].get<std::string>();
    if (labels.is_relative()) labels = base / labels;
    std::string stem = obj.value("stem", image.stem().string());
    scan.pairs.push_back({std::move(stem), std::move(image), std::move(labels)});
  }
  return scan;
}

CropList load_crop_list(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw DomainError("crop list must be a JSON object");
  CropList crops;
  for (const auto& [stem, rects] : doc.items()) {
    if (!rects.is_array()) throw DomainError("crops for '" + stem + "' must be a list");
    auto& list = crops[stem];
    for (const auto& r : rects) {
      if (!r.is_array() || r.size() != 4) {
        throw DomainError("crop for '" + stem + "' must be [x, y, w, h]");
      }
      list.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>(),
                      r[3].get<int>()});
    }
  }
  return crops;
}

std::string to_json_line(const ManifestEntry& entry) {
  ordered_json obj;
  obj["source"] = entry.source;
  if (entry.crop) {
    obj["crop"] = {entry.crop->x, entry.crop->y, entry.crop->width,
                   entry.crop->height};
  } else {
    obj["crop"] = nullptr;
  }
  obj["phi"] = entry.phi;
  obj["theta"] = entry.theta;
  obj["image"] = entry.image;
  obj["labels"] = entry.labels;
  obj["coverage"] = entry.coverage;
  obj["sha256"] = entry.sha256;
  return obj.dump();
}

ManifestEntry parse_json_line(const std::string& line) {
  const auto obj = nlohmann::json::parse(line);
  ManifestEntry e;
  e.source = obj.at("source").get<std::string>();
  if (!obj.at("crop").is_null()) {
    const auto& c = obj.at("crop");
    e.crop = CropRect{c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>(),
                      c.at(3).get<int>()};
  }
  e.phi = obj.at("phi").get<double>();
  e.theta = obj.at("theta").get<double>();
  e.image = obj.at("image").get<std::string>();
  e.labels = obj.at("labels").get<std::string>();
  e.coverage = obj.at("coverage").get<double>();
  e.sha256 = obj.at("sha256").get<std::string>();
  return e;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& e : manifest.entries) out << to_json_line(e) << '\n';
  if (!out) throw IoError("error writing " + path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) entries.push_back(parse_json_line(line));
  }
  return entries;
}

Manifest build_sweep(const PairScan& sources, const fs::path& out,
                     const SweepConfig& config) {
  std::vector<std::string> subdirs;
  for (double phi : config.phis) subdirs.push_back(phi_dir_name(phi));
  {
    std::set<std::string> unique(subdirs.begin(), subdirs.end());
    if (unique.size() != subdirs.size()) {
      throw DomainError("sweep phi values must be distinct");
    }
  }
  auto tiles_for = [&](int source) {
    std::vector<TileSpec> tiles;
    const auto& pair = sources.pairs[static_cast<std::size_t>(source)];
    for (std::size_t k = 0; k < config.phis.size(); ++k) {
      tiles.push_back({std::nullopt, config.phis[k], subdirs[k], pair.stem,
                       (static_cast<std::uint64_t>(source) << 16) | k});
    }
    return tiles;
  };
  return run_batch(sources, out, config, subdirs, tiles_for, true);
}

Manifest build_sweep(const fs::path& input_dir, const fs::path& out,
                     const SweepConfig& config) {
  return build_sweep(require_dir_scan(input_dir), out, config);
}

Manifest build_testset(const PairScan& sources, const fs::path& out,
                       const SweepConfig& config, const CropList& crops) {
  SweepConfig test_config = config;
  test_config.phis = {kPi / 2};
  auto tiles_for = [&](int source) {
    std::vector<TileSpec> tiles;
    const auto& pair = sources.pairs[static_cast<std::size_t>(source)];
    const std::uint64_t base = static_cast<std::uint64_t>(source) << 16;
    const auto it = crops.find(pair.stem);
    if (it == crops.end() || it->second.empty()) {
      tiles.push_back({std::nullopt, kPi / 2, "test", pair.stem, base});
    } else {
      for (std::size_t c = 0; c < it->second.size(); ++c) {
        tiles.push_back({it->second[c], kPi / 2, "test",
                         pair.stem + "_c" + std::to_string(c), base | c});
      }
    }
    return tiles;
  };
  return run_batch(sources, out, test_config, {"test"}, tiles_for, false);
}

Manifest build_testset(const fs::path& input_dir, const fs::path& out,
                       const SweepConfig& config, const CropList& crops) {
  return build_testset(require_dir_scan(input_dir), out, config, crops);
}

}  // namespace equiproj
