#pragma once

// Batch generation of equirectangular segmentation datasets from
// perspective image/label pairs.
//
// Output layout:
//   <out>/phi_<k>pi16/{images,labels}/<stem>.png   (sweeps)
//   <out>/test/{images,labels}/<stem>[_c<i>].png   (test sets)
//   <out>/manifest.jsonl

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "equiproj/sphere_geom.hpp"
#include "equiproj/warp.hpp"

namespace equiproj {

/// Maps source dataset ids onto target class ids; unmapped ids become the
/// ignore id.
class ClassMap {
 public:
  /// Identity on 0..5 (roads, buildings, vegetation, sky, pedestrians,
  /// cars); every other id maps to ignore.
  static ClassMap default_six();
  /// JSON object {"<source_id>": <target_id>, ...}.
  static ClassMap from_json(const std::string& text);
  static ClassMap load(const std::filesystem::path& path);

  std::uint8_t operator()(std::uint8_t id) const { return table_[id]; }
  void set(std::uint8_t source, std::uint8_t target) { table_[source] = target; }
  LabelMap apply(const LabelMap& labels) const;

 private:
  ClassMap();
  std::array<std::uint8_t, 256> table_;
};

struct SweepConfig {
  /// Tangent zenith angles; defaults to k*pi/16 for k = 1..8.
  std::vector<double> phis = default_phis();
  double theta = 0.0;
  EquirectSpec spec{1024, 512};
  int n = 225;
  int tile = 224;
  Interp interp = Interp::Bilinear;
  WarpMode mode = WarpMode::Inverse;
  /// Seeds the per-entry azimuth draw when random_theta is set.
  std::uint64_t seed = 0;
  /// Draw theta per entry from a seeded uniform grid of canvas columns
  /// instead of using `theta`.
  bool random_theta = false;
  /// Flip tiles vertically (lower-region experiments).
  bool mirror = false;
  ClassMap class_map = ClassMap::default_six();
  /// Entries processed concurrently; 0 = hardware concurrency.
  int threads = 1;

  static std::vector<double> default_phis();
  /// Throws DomainError on an invalid configuration.
  void validate() const;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  friend bool operator==(const CropRect&, const CropRect&) = default;
};

struct SourcePair {
  std::string stem;
  std::filesystem::path image;
  std::filesystem::path labels;
};

struct PairScan {
  std::vector<SourcePair> pairs;  // sorted by stem
  std::vector<std::filesystem::path> unpaired;
};

/// Pairs X.png with X_labels.png in `dir` (non-recursive).
PairScan discover_pairs(const std::filesystem::path& dir);

/// Reads an explicit listing: JSON lines {"image": ..., "labels": ...,
/// "stem"?: ...}; relative paths resolve against the listing's directory.
PairScan read_pair_listing(const std::filesystem::path& listing);

/// Per-source crop rectangles, keyed by stem. File format: JSON object
/// {"<stem>": [[x, y, w, h], ...], ...}.
using CropList = std::map<std::string, std::vector<CropRect>>;
CropList load_crop_list(const std::filesystem::path& path);

struct ManifestEntry {
  std::string source;
  std::optional<CropRect> crop;
  double phi = 0.0;
  double theta = 0.0;
  std::string image;   // relative to the output directory
  std::string labels;  // relative to the output directory
  double coverage = 0.0;
  std::string sha256;  // over image PNG bytes followed by label PNG bytes
};

/// One JSON object with fields source, crop, phi, theta, image, labels,
/// coverage, sha256 (no trailing newline).
std::string to_json_line(const ManifestEntry& entry);
ManifestEntry parse_json_line(const std::string& line);

struct Manifest {
  std::vector<ManifestEntry> entries;
  /// Entry-level failures ("<source>: <reason>"), in input order.
  std::vector<std::string> errors;
  std::size_t unpaired = 0;
};

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Projects every pair at every configured phi and writes tiles plus
/// <out>/manifest.jsonl. Throws DomainError when no usable pair exists
/// (nothing is written in that case).
Manifest build_sweep(const PairScan& sources, const std::filesystem::path& out,
                     const SweepConfig& config);
Manifest build_sweep(const std::filesystem::path& input_dir,
                     const std::filesystem::path& out,
                     const SweepConfig& config);

/// Test-set construction at phi = pi/2 (config.phis is ignored). Sources
/// with crops get one entry per rectangle.
Manifest build_testset(const PairScan& sources,
                       const std::filesystem::path& out,
                       const SweepConfig& config, const CropList& crops);
Manifest build_testset(const std::filesystem::path& input_dir,
                       const std::filesystem::path& out,
                       const SweepConfig& config, const CropList& crops);

}  // namespace equiproj
