#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "equiproj/angle_expr.hpp"
#include "equiproj/dataset.hpp"
#include "equiproj/errors.hpp"
#include "equiproj/eval.hpp"
#include "equiproj/png_io.hpp"
#include "equiproj/sphere_geom.hpp"
#include "equiproj/warp.hpp"

namespace equiproj::cli {
namespace {

namespace fs = std::filesystem;

// Bad flag values that CLI11 cannot see (angle syntax, ranges).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accent used for mask outlines and kernel samples in previews.
constexpr float kAccent[3] = {1.0f, 0.0f, 1.0f};

class WarningRedirect {
 public:
  explicit WarningRedirect(std::ostream& err)
      : previous_(set_warning_handler(
            [&err](std::string_view msg) { err << "warning: " << msg << '\n'; })) {}
  ~WarningRedirect() { set_warning_handler(std::move(previous_)); }
  WarningRedirect(const WarningRedirect&) = delete;
  WarningRedirect& operator=(const WarningRedirect&) = delete;

 private:
  WarningHandler previous_;
};

double angle_flag(const std::string& text, const char* flag) {
  try {
    return parse_angle(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

double zenith_flag(const std::string& text, const char* flag) {
  const double phi = angle_flag(text, flag);
  if (!(phi >= -kPi / 2 && phi <= kPi / 2)) {
    throw UsageError(std::string(flag) + " " + text + " outside [-pi/2, pi/2]");
  }
  return phi;
}

Interp interp_flag(const std::string& s) {
  return s == "nearest" ? Interp::Nearest : Interp::Bilinear;
}

WarpMode mode_flag(const std::string& s) {
  return s == "scatter" ? WarpMode::Scatter : WarpMode::Inverse;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Converts to 3-channel RGB for previews.
RasterImage to_rgb(const RasterImage& img) {
  RasterImage out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = img.at(x, y, img.channels() >= 3 ? c : 0);
      }
    }
  }
  return out;
}

bool on_mask_border(const ValidMask& mask, int x, int y) {
  if (!mask.at(x, y)) return false;
  const int w = mask.width();
  if (y == 0 || y == mask.height() - 1) return true;
  return !mask.at((x + 1) % w, y) || !mask.at((x + w - 1) % w, y) ||
         !mask.at(x, y - 1) || !mask.at(x, y + 1);
}

// Source (scaled to canvas height) beside the canvas with the mask outlined.
RasterImage project_preview(const RasterImage& source,
                            const ProjectedImage& projected) {
  const int h = projected.image.height();
  const int w = projected.image.width();
  const RasterImage left = to_rgb(resize(source, h, h));
  const RasterImage right = to_rgb(projected.image);
  RasterImage out(h + w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < h; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = left.at(x, y, c);
    }
    for (int x = 0; x < w; ++x) {
      const bool border = on_mask_border(projected.mask, x, y);
      for (int c = 0; c < 3; ++c) {
        out.at(h + x, y, c) = border ? kAccent[c] : right.at(x, y, c);
      }
    }
  }
  return out;
}

int cmd_project(const std::string& input, const std::string& labels_path,
                const std::string& phi_text, const std::string& theta_text,
                int width, int height, int size_n, const std::string& interp,
                const std::string& mode, const std::string& out_dir,
                int threads, std::ostream& out) {
  const double phi = zenith_flag(phi_text, "--phi");
  const double theta = angle_flag(theta_text, "--theta");
  const int n = odd_side(size_n);
  if (n != size_n) warn("--size-n " + std::to_string(size_n) + " bumped to " + std::to_string(n));

  ProjectionJob job{SphereCoord(theta, phi), EquirectSpec(width, height), n,
                    interp_flag(interp), mode_flag(mode), threads};

  const RasterImage source = read_image(input);
  const ProjectedImage projected = project_image(resize_square(source, n), job);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  write_file(dir / "equirect.png", encode_png(projected.image));
  write_file(dir / "mask.png", encode_png(projected.mask));
  write_file(dir / "preview.png", encode_png(project_preview(source, projected)));
  if (!labels_path.empty()) {
    const ProjectedLabels labels =
        project_labels(resize_square(read_labels(labels_path), n), job);
    write_file(dir / "equirect_labels.png", encode_png(labels.labels));
  }
  out << "projected " << input << " at phi=" << format_phi(phi)
      << " theta=" << theta << " n=" << n << ": " << projected.mask.count()
      << " covered pixels\n";
  return kOk;
}

int cmd_extract(const std::string& input, const std::string& phi_text,
                const std::string& theta_text, int size_n,
                const std::string& interp, bool as_labels,
                const std::string& out_dir, int threads, std::ostream& out) {
  const double phi = zenith_flag(phi_text, "--phi");
  const double theta = angle_flag(theta_text, "--theta");
  if (size_n < 3) throw UsageError("--size-n must be >= 3");
  int n = size_n;
  if (n % 2 == 0) {
    ++n;
    warn("--size-n " + std::to_string(size_n) + " is even; using " + std::to_string(n));
  }
  const SphereCoord tangent(theta, phi);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  if (as_labels) {
    const LabelMap view = extract_tangent_labels(read_labels(input), tangent, n, threads);
    write_file(dir / "tangent.png", encode_png(view));
  } else {
    const RasterImage view =
        extract_tangent_image(read_image(input), tangent, n, interp_flag(interp), threads);
    write_file(dir / "tangent.png", encode_png(view));
  }
  out << "extracted " << n << "x" << n << " view at phi=" << format_phi(phi)
      << " theta=" << theta << '\n';
  return kOk;
}

struct SweepFlags {
  std::string input_dir;
  std::string list;
  std::string out;
  std::string phis = "default";
  std::string theta = "0";
  int tile = 224;
  std::string class_map;
  std::uint64_t seed = 0;
  int width = 1024;
  int height = 512;
  int size_n = 225;
  std::string interp = "bilinear";
  std::string mode = "inverse";
  bool random_theta = false;
  bool mirror = false;
  std::string crops;
};

void add_sweep_options(CLI::App* sub, SweepFlags& f) {
  sub->add_option("--input-dir", f.input_dir, "Directory of X.png / X_labels.png pairs");
  sub->add_option("--list", f.list, "JSON-lines listing of {image, labels} pairs");
  sub->add_option("--out", f.out, "Output directory")->required();
  sub->add_option("--theta", f.theta, "Tangent azimuth")->capture_default_str();
  sub->add_option("--tile", f.tile, "Output tile side")->capture_default_str();
  sub->add_option("--class-map", f.class_map, "JSON {source_id: target_id}");
  sub->add_option("--seed", f.seed, "Seed for randomized choices")->capture_default_str();
  sub->add_option("--width", f.width, "Canvas width")->capture_default_str();
  sub->add_option("--height", f.height, "Canvas height")->capture_default_str();
  sub->add_option("--size-n", f.size_n, "Tangent image side")->capture_default_str();
  sub->add_option("--interp", f.interp, "Image interpolation")
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  sub->add_option("--mode", f.mode, "Warp mode")
      ->check(CLI::IsMember({"inverse", "scatter"}))
      ->capture_default_str();
  sub->add_flag("--random-theta", f.random_theta, "Draw theta per entry from the seed");
  sub->add_flag("--mirror", f.mirror, "Flip tiles vertically");
}

SweepConfig sweep_config(const SweepFlags& f, int threads) {
  SweepConfig config;
  if (f.phis != "default") {
    config.phis.clear();
    std::stringstream ss(f.phis);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const double phi = angle_flag(item, "--phis");
      if (!(phi > 0.0 && phi <= kPi / 2)) {
        throw UsageError("--phis value " + item + " outside (0, pi/2]");
      }
      config.phis.push_back(phi);
    }
  }
  config.theta = angle_flag(f.theta, "--theta");
  config.spec = EquirectSpec(f.width, f.height);
  config.n = f.size_n;
  config.tile = f.tile;
  config.interp = interp_flag(f.interp);
  config.mode = mode_flag(f.mode);
  config.seed = f.seed;
  config.random_theta = f.random_theta;
  config.mirror = f.mirror;
  if (!f.class_map.empty()) config.class_map = ClassMap::load(f.class_map);
  config.threads = threads;
  return config;
}

PairScan sweep_sources(const SweepFlags& f) {
  if (f.input_dir.empty() == f.list.empty()) {
    throw UsageError("give exactly one of --input-dir or --list");
  }
  if (!f.list.empty()) return read_pair_listing(f.list);
  if (!fs::is_directory(f.input_dir)) {
    throw IoError("input directory " + f.input_dir + " does not exist");
  }
  return discover_pairs(f.input_dir);
}

int report_manifest(const Manifest& manifest, std::ostream& out,
                     std::ostream& err) {
  std::map<std::string, std::size_t> per_dir;
  std::vector<std::string> order;
  for (const auto& e : manifest.entries) {
    const std::string dir = e.image.substr(0, e.image.find('/'));
    if (per_dir[dir]++ == 0) order.push_back(dir);
  }
  for (const auto& dir : order) out << dir << ": " << per_dir[dir] << " entries\n";
  out << "total: " << manifest.entries.size() << " entries";
  if (manifest.unpaired > 0) out << ", " << manifest.unpaired << " unpaired skipped";
  out << '\n';
  for (const auto& e : manifest.errors) err << "error: " << e << '\n';
  if (!manifest.errors.empty()) {
    err << manifest.errors.size() << " entr"
        << (manifest.errors.size() == 1 ? "y" : "ies") << " failed\n";
    return kDomain;
  }
  return kOk;
}

struct EvalFlags {
  std::string pred_dir;
  std::string gt_dir;
  std::string classes;
  std::string mask_dir;
  std::string format = "csv";
  std::string out;
  std::string label;
  std::string phi;
};

int cmd_eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  const ClassSet classes =
      f.classes.empty() ? ClassSet::default_six() : ClassSet::load(f.classes);
  if (!fs::is_directory(f.pred_dir)) throw IoError("no such directory " + f.pred_dir);
  if (!fs::is_directory(f.gt_dir)) throw IoError("no such directory " + f.gt_dir);

  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(f.pred_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      names.push_back(e.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());

  ConfusionMatrix cm(classes);
  std::size_t pairs = 0;
  std::size_t unpaired = 0;
  for (const auto& name : names) {
    const fs::path gt_path = fs::path(f.gt_dir) / name;
    if (!fs::exists(gt_path)) {
      err << "warning: no ground truth for " << name << '\n';
      ++unpaired;
      continue;
    }
    const LabelMap pred = read_labels(fs::path(f.pred_dir) / name);
    const LabelMap gt = read_labels(gt_path);
    if (!f.mask_dir.empty()) {
      const ValidMask mask = read_mask(fs::path(f.mask_dir) / name);
      cm.accumulate(pred, gt, &mask);
    } else {
      cm.accumulate(pred, gt);
    }
    ++pairs;
  }
  for (const auto& e : fs::directory_iterator(f.gt_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png" &&
        !fs::exists(fs::path(f.pred_dir) / e.path().filename())) {
      err << "warning: no prediction for " << e.path().filename().string() << '\n';
      ++unpaired;
    }
  }
  if (pairs == 0) throw DomainError("no prediction/ground-truth pairs found");

  TableRow row;
  if (!f.phi.empty()) {
    row = phi_row(angle_flag(f.phi, "--phi"), iou(cm));
  } else {
    row = TableRow{f.label.empty() ? "all" : f.label, std::nullopt, iou(cm)};
  }
  if (!f.label.empty()) row.label = f.label;

  const TableFormat format = f.format == "markdown" ? TableFormat::Markdown
                             : f.format == "json"   ? TableFormat::Json
                                                    : TableFormat::Csv;
  const std::string table = emit_table({row}, format);
  if (f.out.empty()) {
    out << table;
  } else {
    const std::string_view bytes(table);
    write_file(f.out, std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                bytes.size()));
    out << "scored " << pairs << " pair(s) -> " << f.out << '\n';
  }
  if (unpaired > 0) err << unpaired << " unpaired file(s) skipped\n";
  return kOk;
}

// Zoomed view of the kernel: regular offsets in gray, distorted samples in
// the accent color.
RasterImage grid_preview(const EquirectSpec& spec, PixelCoord center,
                         const std::vector<PixelCoord>& positions, int k) {
  const double w = spec.width();
  std::vector<PixelCoord> offsets;
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto& p : positions) {
    double dx = p.x - center.x;
    dx -= w * std::round(dx / w);
    const PixelCoord d{dx, p.y - center.y};
    offsets.push_back(d);
    lo_x = std::min(lo_x, d.x);
    hi_x = std::max(hi_x, d.x);
    lo_y = std::min(lo_y, d.y);
    hi_y = std::max(hi_y, d.y);
  }
  const int half = (k - 1) / 2;
  lo_x = std::min(lo_x, -static_cast<double>(half)) - 1;
  lo_y = std::min(lo_y, -static_cast<double>(half)) - 1;
  hi_x = std::max(hi_x, static_cast<double>(half)) + 1;
  hi_y = std::max(hi_y, static_cast<double>(half)) + 1;

  const double extent = std::max(hi_x - lo_x, hi_y - lo_y);
  const double scale = std::clamp(1024.0 / extent, 1.0, 32.0);
  const int pw = static_cast<int>(std::ceil((hi_x - lo_x) * scale)) + 1;
  const int ph = static_cast<int>(std::ceil((hi_y - lo_y) * scale)) + 1;
  RasterImage img(pw, ph, 3, 0.1f);

  auto dot = [&](PixelCoord d, const float* color, int radius) {
    const int cx = static_cast<int>(std::lround((d.x - lo_x) * scale));
    const int cy = static_cast<int>(std::lround((d.y - lo_y) * scale));
    for (int y = cy - radius; y <= cy + radius; ++y) {
      for (int x = cx - radius; x <= cx + radius; ++x) {
        if (x < 0 || y < 0 || x >= pw || y >= ph) continue;
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
      }
    }
  };
  const float gray[3] = {0.6f, 0.6f, 0.6f};
  for (int j = -half; j <= half; ++j) {
    for (int i = -half; i <= half; ++i) {
      dot({static_cast<double>(i), static_cast<double>(j)}, gray, 2);
    }
  }
  for (const auto& d : offsets) dot(d, kAccent, 3);
  return img;
}

int cmd_grid(int width, int height, int k, double x, double y,
             const std::string& out_dir, std::ostream& out) {
  const EquirectSpec spec(width, height);
  if (k < 3 || k % 2 == 0) throw UsageError("--k must be odd and >= 3");
  const PixelCoord center{x, y};
  const auto positions = distorted_kernel_grid(spec, k, center);

  nlohmann::ordered_json doc;
  doc["width"] = width;
  doc["height"] = height;
  doc["k"] = k;
  doc["center"] = {{"x", x}, {"y", y}};
  auto& list = doc["positions"] = nlohmann::ordered_json::array();
  const int half = (k - 1) / 2;
  std::size_t idx = 0;
  for (int j = half; j >= -half; --j) {
    for (int i = -half; i <= half; ++i) {
      const PixelCoord& p = positions[idx++];
      list.push_back({{"i", i},
                      {"j", j},
                      {"x", p.x},
                      {"y", p.y},
                      {"wrapped", std::abs(p.x - x) > width / 2.0}});
    }
  }
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    ensure_dir(dir);
    write_file(dir / "grid.json",
               std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    write_file(dir / "grid_preview.png",
               encode_png(grid_preview(spec, center, positions, k)));
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  WarningRedirect redirect(err);

  CLI::App app{"equiproj: perspective <-> equirectangular projection toolkit"};
  app.set_config("--config", "", "TOML-style key = value file; flags override");
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  bool print_config = false;
  app.add_option("--threads", threads, "Worker threads (0 = auto)")->capture_default_str();
  app.add_flag("--print-config", print_config, "Echo the effective configuration");

  // project
  std::string p_input, p_labels, p_phi = "6*pi/16", p_theta = "0", p_interp = "bilinear",
                                 p_mode = "inverse", p_out;
  int p_width = 1024, p_height = 512, p_n = 225;
  auto* project = app.add_subcommand("project", "Project a perspective image onto an equirectangular canvas");
  project->add_option("--input", p_input, "Perspective image PNG")->required();
  project->add_option("--labels", p_labels, "Label map PNG");
  project->add_option("--phi", p_phi, "Tangent zenith, e.g. 6*pi/16")->capture_default_str();
  project->add_option("--theta", p_theta, "Tangent azimuth")->capture_default_str();
  project->add_option("--width", p_width, "Canvas width")->capture_default_str();
  project->add_option("--height", p_height, "Canvas height")->capture_default_str();
  project->add_option("--size-n", p_n, "Tangent image side (odd)")->capture_default_str();
  project->add_option("--interp", p_interp)
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  project->add_option("--mode", p_mode)
      ->check(CLI::IsMember({"inverse", "scatter"}))
      ->capture_default_str();
  project->add_option("--out", p_out, "Output directory")->required();

  // extract
  std::string e_input, e_phi, e_theta = "0", e_interp = "bilinear", e_out;
  int e_n = 225;
  bool e_labels = false;
  auto* extract = app.add_subcommand("extract", "Extract a tangent-plane view from an equirectangular image");
  extract->add_option("--input", e_input, "Equirectangular PNG")->required();
  extract->add_option("--phi", e_phi, "Tangent zenith")->required();
  extract->add_option("--theta", e_theta, "Tangent azimuth")->capture_default_str();
  extract->add_option("--size-n", e_n, "View side (odd)")->capture_default_str();
  extract->add_option("--interp", e_interp)
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  extract->add_flag("--as-labels", e_labels, "Input is a label map (nearest sampling)");
  extract->add_option("--out", e_out, "Output directory")->required();

  // sweep / testset
  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Generate a phi-sweep dataset");
  add_sweep_options(sweep, sweep_flags);
  sweep->add_option("--phis", sweep_flags.phis, "Comma-separated phi list or 'default'")
      ->capture_default_str();

  SweepFlags test_flags;
  auto* testset = app.add_subcommand("testset", "Generate a phi = pi/2 test set");
  add_sweep_options(testset, test_flags);
  testset->add_option("--crops", test_flags.crops, "JSON {stem: [[x, y, w, h], ...]}");

  // eval
  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred-dir", eval_flags.pred_dir)->required();
  eval->add_option("--gt-dir", eval_flags.gt_dir)->required();
  eval->add_option("--classes", eval_flags.classes, "Class list JSON");
  eval->add_option("--mask-dir", eval_flags.mask_dir, "Optional coverage masks");
  eval->add_option("--format", eval_flags.format)
      ->check(CLI::IsMember({"csv", "markdown", "json"}))
      ->capture_default_str();
  eval->add_option("--out", eval_flags.out, "Write the table here instead of stdout");
  eval->add_option("--label", eval_flags.label, "Row label");
  eval->add_option("--phi", eval_flags.phi, "Label the row with this sweep value");

  // grid
  int g_width = 1024, g_height = 512, g_k = 3;
  double g_x = 0, g_y = 0;
  std::string g_out;
  auto* grid = app.add_subcommand("grid", "Print distorted kernel sampling positions");
  grid->add_option("--width", g_width)->capture_default_str();
  grid->add_option("--height", g_height)->capture_default_str();
  grid->add_option("--k", g_k, "Kernel size (odd)")->capture_default_str();
  grid->add_option("--x", g_x, "Kernel center x")->required();
  grid->add_option("--y", g_y, "Kernel center y")->required();
  grid->add_option("--out", g_out, "Directory for grid.json and grid_preview.png");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (print_config) out << app.config_to_str(true, false);

  try {
    if (project->parsed()) {
      return cmd_project(p_input, p_labels, p_phi, p_theta, p_width, p_height, p_n,
                         p_interp, p_mode, p_out, threads, out);
    }
    if (extract->parsed()) {
      return cmd_extract(e_input, e_phi, e_theta, e_n, e_interp, e_labels, e_out,
                         threads, out);
    }
    if (sweep->parsed()) {
      const SweepConfig config = sweep_config(sweep_flags, threads);
      const PairScan sources = sweep_sources(sweep_flags);
      return report_manifest(build_sweep(sources, sweep_flags.out, config), out, err);
    }
    if (testset->parsed()) {
      const SweepConfig config = sweep_config(test_flags, threads);
      const PairScan sources = sweep_sources(test_flags);
      const CropList crops =
          test_flags.crops.empty() ? CropList{} : load_crop_list(test_flags.crops);
      return report_manifest(build_testset(sources, test_flags.out, config, crops), out,
                             err);
    }
    if (eval->parsed()) return cmd_eval(eval_flags, out, err);
    if (grid->parsed()) return cmd_grid(g_width, g_height, g_k, g_x, g_y, g_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomain;
  }
  return kUsage;
}

}  // namespace equiproj::cli
