#pragma once

// Dense resampling between perspective (tangent-plane) images and
// equirectangular canvases.
//
// A perspective image of side n is treated as the n x n sampling grid of a
// plane tangent to the unit sphere. Source pixel (column c, row r) is grid
// sample (i, j) = (c - half, half - r), so rows run north to south like the
// canvas. Canvas x always wraps modulo the width across the theta = +-pi seam.

#include <optional>
#include <utility>

#include "equiproj/raster.hpp"
#include "equiproj/sphere_geom.hpp"

namespace equiproj {

enum class Interp { Nearest, Bilinear };

enum class WarpMode {
  /// Every canvas pixel pulls its value from the tangent image (no holes).
  Inverse,
  /// Every tangent-image pixel is pushed to its nearest canvas pixel.
  Scatter,
};

struct ProjectionJob {
  SphereCoord tangent{0.0, 0.0};
  EquirectSpec spec{1024, 512};
  /// Tangent image side; even values are bumped to the next odd size.
  int n = 225;
  Interp interp = Interp::Bilinear;
  WarpMode mode = WarpMode::Inverse;
  /// Row-parallel workers for inverse mode, 0 = hardware concurrency.
  /// Output does not depend on this value.
  int threads = 1;
};

/// n if odd, n + 1 if even. Throws DomainError for n < 3.
int odd_side(int n);

/// Continuous position inside a tangent image (column, row); integer values
/// are pixel centers.
struct SourcePoint {
  double column = 0.0;
  double row = 0.0;
};

/// Canvas pixel containing a continuous position (x wraps, y clamps).
/// Positions within 1e-9 px of a pixel edge count as on the edge.
std::pair<int, int> canvas_pixel(PixelCoord p, const EquirectSpec& spec);

/// Tangent-image pixel nearest to a source position; exact halves go to the
/// lower index.
std::pair<int, int> nearest_source_pixel(SourcePoint p, int n);

/// The geometry of one tangent-plane placement, shared by both warp
/// directions.
class TangentProjection {
 public:
  TangentProjection(const SphereCoord& tangent, const EquirectSpec& spec,
                    int n);

  const TangentGridSpec& grid() const { return grid_; }
  const EquirectSpec& spec() const { return spec_; }
  int side() const { return grid_.n(); }

  /// Tangent-image position seen by the center of canvas pixel (px, py), or
  /// nothing when the pixel is not covered by the plane.
  std::optional<SourcePoint> source_for_pixel(int px, int py) const;

  /// Continuous canvas position of tangent-image pixel (column, row).
  /// x is wrapped into [0, w).
  PixelCoord canvas_position(int column, int row) const;

  /// Inclusive canvas row range that can contain covered pixels.
  std::pair<int, int> row_bounds() const;

 private:
  EquirectSpec spec_;
  TangentGridSpec grid_;
  std::pair<int, int> rows_;
};

struct ProjectedImage {
  RasterImage image;
  ValidMask mask;
};

struct ProjectedLabels {
  LabelMap labels;
  ValidMask mask;
};

/// Renders a square tangent image onto the job's canvas. The image side must
/// equal odd_side(job.n); use resize_square first. Uncovered pixels are 0.
ProjectedImage project_image(const RasterImage& image,
                             const ProjectionJob& job);

/// As project_image, always nearest-neighbour. Uncovered pixels carry the
/// input's ignore id.
ProjectedLabels project_labels(const LabelMap& labels,
                               const ProjectionJob& job);

/// Samples an n x n tangent-plane view (n odd) out of an equirectangular
/// image.
RasterImage extract_tangent_image(const RasterImage& equi,
                                  const SphereCoord& tangent, int n,
                                  Interp interp = Interp::Bilinear,
                                  int threads = 1);

/// Nearest-neighbour tangent view of a label canvas.
LabelMap extract_tangent_labels(const LabelMap& equi,
                                const SphereCoord& tangent, int n,
                                int threads = 1);

/// Bilinear resize (pixel-center aligned, edge clamped).
RasterImage resize(const RasterImage& image, int width, int height);
/// Nearest-neighbour resize.
LabelMap resize(const LabelMap& labels, int width, int height);
ValidMask resize(const ValidMask& mask, int width, int height);

/// Resizes to n x n without preserving aspect. Throws DomainError for n < 3.
RasterImage resize_square(const RasterImage& image, int n);
LabelMap resize_square(const LabelMap& labels, int n);

/// Square crop window on a canvas. x0 may be negative or run past the right
/// edge; columns are taken modulo the canvas width.
struct TileWindow {
  int x0 = 0;
  int y0 = 0;
  int side = 0;
  friend bool operator==(const TileWindow&, const TileWindow&) = default;
};

/// Window used by crop_to_upper_tile: the seam-aware bounding box of the
/// mask, cut to a square of side min(box width, box height) that shares the
/// box's top edge and is centred horizontally on it.
TileWindow upper_tile_window(const ValidMask& mask);

/// Crops the upper tile window and resizes it to tile x tile. Images use
/// bilinear resize, labels and masks nearest; labels are forced to the
/// ignore id wherever the cropped mask is unset.
RasterImage crop_to_upper_tile(const RasterImage& equi, const ValidMask& mask,
                               int tile);
LabelMap crop_to_upper_tile(const LabelMap& equi, const ValidMask& mask,
                            int tile);
ValidMask crop_to_upper_tile(const ValidMask& mask, int tile);

}  // namespace equiproj
