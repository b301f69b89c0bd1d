#include "equiproj/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "equiproj/errors.hpp"
#include "equiproj/parallel.hpp"

namespace equiproj {
namespace {

// Plane-square membership tolerance, in tangent-image pixels.
constexpr double kEdgeSlack = 1e-9;
// Positions this close to a pixel boundary are treated as on it.
constexpr double kTieSlack = 1e-9;

int wrap(int x, int width) {
  const int r = x % width;
  return r < 0 ? r + width : r;
}

int floor_to_int(double v) { return static_cast<int>(std::floor(v)); }

int snapped_floor(double v) {
  const double r = std::round(v);
  return static_cast<int>(std::abs(v - r) < kTieSlack ? r : std::floor(v));
}

// Round to nearest, exact halves toward the lower index.
int snapped_round_down(double v) {
  const double lowered = v - 0.5;
  const double r = std::round(lowered);
  return static_cast<int>(std::abs(lowered - r) < kTieSlack ? r : std::ceil(lowered));
}

void bilinear_tangent(const RasterImage& src, SourcePoint p,
                      std::span<float> out) {
  const int n = src.width();
  const int c0 = std::clamp(floor_to_int(p.column), 0, n - 1);
  const int r0 = std::clamp(floor_to_int(p.row), 0, n - 1);
  const int c1 = std::min(c0 + 1, n - 1);
  const int r1 = std::min(r0 + 1, n - 1);
  const float fc = static_cast<float>(std::clamp(p.column - c0, 0.0, 1.0));
  const float fr = static_cast<float>(std::clamp(p.row - r0, 0.0, 1.0));
  for (int ch = 0; ch < src.channels(); ++ch) {
    const float top = src.at(c0, r0, ch) * (1.0f - fc) + src.at(c1, r0, ch) * fc;
    const float bottom =
        src.at(c0, r1, ch) * (1.0f - fc) + src.at(c1, r1, ch) * fc;
    out[static_cast<std::size_t>(ch)] = top * (1.0f - fr) + bottom * fr;
  }
}


// Equirectangular sampling: pixel centers at half-integers, x wraps, y clamps.
void bilinear_canvas(const RasterImage& equi, PixelCoord p,
                     std::span<float> out) {
  const int w = equi.width();
  const int h = equi.height();
  const double fx = p.x - 0.5;
  const double fy = p.y - 0.5;
  const int x0 = floor_to_int(fx);
  const int y0 = floor_to_int(fy);
  const float ax = static_cast<float>(fx - x0);
  const float ay = static_cast<float>(std::clamp(fy - y0, 0.0, 1.0));
  const int xa = wrap(x0, w);
  const int xb = wrap(x0 + 1, w);
  const int ya = std::clamp(y0, 0, h - 1);
  const int yb = std::clamp(y0 + 1, 0, h - 1);
  for (int ch = 0; ch < equi.channels(); ++ch) {
    const float top = equi.at(xa, ya, ch) * (1.0f - ax) + equi.at(xb, ya, ch) * ax;
    const float bottom =
        equi.at(xa, yb, ch) * (1.0f - ax) + equi.at(xb, yb, ch) * ax;
    out[static_cast<std::size_t>(ch)] = top * (1.0f - ay) + bottom * ay;
  }
}

std::pair<int, int> nearest_canvas(PixelCoord p, int w, int h) {
  return {wrap(snapped_floor(p.x), w), std::clamp(snapped_floor(p.y), 0, h - 1)};
}

void require_square_side(int width, int height, int expected) {
  if (width != height) {
    throw DomainError("tangent image must be square, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (width != expected) {
    throw DomainError("tangent image side " + std::to_string(width) +
                      " does not match projection size " +
                      std::to_string(expected) + "; resize first");
  }
}

void require_odd(int n) {
  if (n < 3 || n % 2 == 0) {
    throw DomainError("tangent view size must be odd and >= 3, got " +
                      std::to_string(n));
  }
}

// Visits every tangent-grid sample with its canvas position.
template <typename Fn>
void for_each_grid_point(const TangentProjection& proj, Fn&& fn) {
  const int n = proj.side();
  for (int row = 0; row < n; ++row) {
    for (int column = 0; column < n; ++column) {
      fn(column, row, proj.canvas_position(column, row));
    }
  }
}

}  // namespace

std::pair<int, int> canvas_pixel(PixelCoord p, const EquirectSpec& spec) {
  return nearest_canvas(p, spec.width(), spec.height());
}

std::pair<int, int> nearest_source_pixel(SourcePoint p, int n) {
  return {std::clamp(snapped_round_down(p.column), 0, n - 1),
          std::clamp(snapped_round_down(p.row), 0, n - 1)};
}

int odd_side(int n) {
  if (n < 3) {
    throw DomainError("tangent image side must be >= 3, got " +
                      std::to_string(n));
  }
  return n % 2 == 0 ? n + 1 : n;
}

TangentProjection::TangentProjection(const SphereCoord& tangent,
                                     const EquirectSpec& spec, int n)
    : spec_(spec), grid_(odd_side(n), tangent, spec) {
  // Latitude extremes of the covered region lie on the plane's border
  // unless a pole is inside it.
  const int samples = 8 * grid_.n();
  double y_min = spec_.height();
  double y_max = 0.0;
  auto visit = [&](double u, double t) {
    const PixelCoord p =
        sphere_to_pixel(inverse_gnomonic({u, t}, grid_.tangent()), spec_);
    y_min = std::min(y_min, p.y);
    y_max = std::max(y_max, p.y);
  };
  const double um = grid_.u_max();
  const double tm = grid_.t_max();
  for (int k = 0; k <= samples; ++k) {
    const double f = -1.0 + 2.0 * k / samples;
    visit(f * um, tm);
    visit(f * um, -tm);
    visit(um, f * tm);
    visit(-um, f * tm);
  }
  auto inside = [&](const SphereCoord& s) {
    const GnomonicResult g = forward_gnomonic(s, grid_.tangent());
    return g.visible && std::abs(g.point.u) <= um && std::abs(g.point.t) <= tm;
  };
  if (inside(SphereCoord(0.0, kPi / 2))) y_min = 0.0;
  if (inside(SphereCoord(0.0, -kPi / 2))) y_max = spec_.height();

  rows_.first = std::max(0, floor_to_int(y_min) - 2);
  rows_.second = std::min(spec_.height() - 1, floor_to_int(y_max) + 2);
}

std::optional<SourcePoint> TangentProjection::source_for_pixel(int px,
                                                               int py) const {
  const SphereCoord s = pixel_to_sphere({px + 0.5, py + 0.5}, spec_);
  const GnomonicResult g = forward_gnomonic(s, grid_.tangent());
  if (!g.visible) return std::nullopt;
  const double half = grid_.half();
  const SourcePoint p{g.point.u / grid_.step_u() + half,
                      half - g.point.t / grid_.step_t()};
  const double last = grid_.n() - 1;
  if (p.column < -kEdgeSlack || p.column > last + kEdgeSlack ||
      p.row < -kEdgeSlack || p.row > last + kEdgeSlack) {
    return std::nullopt;
  }
  return p;
}

PixelCoord TangentProjection::canvas_position(int column, int row) const {
  const int half = grid_.half();
  const PlanePoint plane = plane_coords(column - half, half - row, grid_);
  return sphere_to_pixel(inverse_gnomonic(plane, grid_.tangent()), spec_);
}

std::pair<int, int> TangentProjection::row_bounds() const { return rows_; }

ProjectedImage project_image(const RasterImage& image,
                             const ProjectionJob& job) {
  const int n = odd_side(job.n);
  require_square_side(image.width(), image.height(), n);
  const TangentProjection proj(job.tangent, job.spec, n);
  const int w = job.spec.width();
  const int h = job.spec.height();

  ProjectedImage out{RasterImage(w, h, image.channels()), ValidMask(w, h)};

  if (job.mode == WarpMode::Scatter) {
    for_each_grid_point(proj, [&](int column, int row, PixelCoord p) {
      const auto [x, y] = nearest_canvas(p, w, h);
      const auto src = image.pixel(column, row);
      std::copy(src.begin(), src.end(), out.image.pixel(x, y).begin());
      out.mask.set(x, y, true);
    });
    return out;
  }

  const auto [first, last] = proj.row_bounds();
  parallel_for(first, last + 1, job.threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto src = proj.source_for_pixel(x, y);
      if (!src) continue;
      if (job.interp == Interp::Bilinear) {
        bilinear_tangent(image, *src, out.image.pixel(x, y));
      } else {
        const auto [c, r] = nearest_source_pixel(*src, n);
        const auto from = image.pixel(c, r);
        std::copy(from.begin(), from.end(), out.image.pixel(x, y).begin());
      }
      out.mask.set(x, y, true);
    }
  });
  return out;
}

ProjectedLabels project_labels(const LabelMap& labels,
                               const ProjectionJob& job) {
  const int n = odd_side(job.n);
  require_square_side(labels.width(), labels.height(), n);
  const TangentProjection proj(job.tangent, job.spec, n);
  const int w = job.spec.width();
  const int h = job.spec.height();

  ProjectedLabels out{
      LabelMap(w, h, labels.ignore_id(), labels.ignore_id()), ValidMask(w, h)};

  if (job.mode == WarpMode::Scatter) {
    for_each_grid_point(proj, [&](int column, int row, PixelCoord p) {
      const auto [x, y] = nearest_canvas(p, w, h);
      out.labels.at(x, y) = labels.at(column, row);
      out.mask.set(x, y, true);
    });
    return out;
  }

  const auto [first, last] = proj.row_bounds();
  parallel_for(first, last + 1, job.threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto src = proj.source_for_pixel(x, y);
      if (!src) continue;
      const auto [c, r] = nearest_source_pixel(*src, n);
      out.labels.at(x, y) = labels.at(c, r);
      out.mask.set(x, y, true);
    }
  });
  return out;
}

RasterImage extract_tangent_image(const RasterImage& equi,
                                  const SphereCoord& tangent, int n,
                                  Interp interp, int threads) {
  require_odd(n);
  const TangentProjection proj(tangent, EquirectSpec(equi.width(), equi.height()),
                               n);
  RasterImage out(n, n, equi.channels());
  parallel_for(0, n, threads, [&](int row) {
    for (int column = 0; column < n; ++column) {
      const PixelCoord p = proj.canvas_position(column, row);
      if (interp == Interp::Bilinear) {
        bilinear_canvas(equi, p, out.pixel(column, row));
      } else {
        const auto [x, y] = nearest_canvas(p, equi.width(), equi.height());
        const auto from = equi.pixel(x, y);
        std::copy(from.begin(), from.end(), out.pixel(column, row).begin());
      }
    }
  });
  return out;
}

LabelMap extract_tangent_labels(const LabelMap& equi,
                                const SphereCoord& tangent, int n,
                                int threads) {
  require_odd(n);
  const TangentProjection proj(tangent, EquirectSpec(equi.width(), equi.height()),
                               n);
  LabelMap out(n, n, equi.ignore_id(), equi.ignore_id());
  parallel_for(0, n, threads, [&](int row) {
    for (int column = 0; column < n; ++column) {
      const auto [x, y] = nearest_canvas(proj.canvas_position(column, row),
                                         equi.width(), equi.height());
      out.at(column, row) = equi.at(x, y);
    }
  });
  return out;
}

RasterImage resize(const RasterImage& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  RasterImage out(width, height, image.channels());
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height() - 1));
    const int y0 = floor_to_int(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const float ay = static_cast<float>(fy - y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width() - 1));
      const int x0 = floor_to_int(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const float ax = static_cast<float>(fx - x0);
      for (int ch = 0; ch < image.channels(); ++ch) {
        const float top =
            image.at(x0, y0, ch) * (1.0f - ax) + image.at(x1, y0, ch) * ax;
        const float bottom =
            image.at(x0, y1, ch) * (1.0f - ax) + image.at(x1, y1, ch) * ax;
        out.at(x, y, ch) = top * (1.0f - ay) + bottom * ay;
      }
    }
  }
  return out;
}

namespace {

template <typename Get, typename Set>
void nearest_resize(int in_w, int in_h, int out_w, int out_h, Get get,
                    Set set) {
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(
        static_cast<int>((static_cast<long long>(2 * y + 1) * in_h) / (2LL * out_h)),
        in_h - 1);
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(
          static_cast<int>((static_cast<long long>(2 * x + 1) * in_w) / (2LL * out_w)),
          in_w - 1);
      set(x, y, get(sx, sy));
    }
  }
}

}  // namespace

LabelMap resize(const LabelMap& labels, int width, int height) {
  LabelMap out(width, height, labels.ignore_id(), labels.ignore_id());
  nearest_resize(
      labels.width(), labels.height(), width, height,
      [&](int x, int y) { return labels.at(x, y); },
      [&](int x, int y, std::uint8_t v) { out.at(x, y) = v; });
  return out;
}

ValidMask resize(const ValidMask& mask, int width, int height) {
  ValidMask out(width, height);
  nearest_resize(
      mask.width(), mask.height(), width, height,
      [&](int x, int y) { return mask.at(x, y); },
      [&](int x, int y, bool v) { out.set(x, y, v); });
  return out;
}

RasterImage resize_square(const RasterImage& image, int n) {
  if (n < 3) throw DomainError("resize side must be >= 3, got " + std::to_string(n));
  return resize(image, n, n);
}

LabelMap resize_square(const LabelMap& labels, int n) {
  if (n < 3) throw DomainError("resize side must be >= 3, got " + std::to_string(n));
  return resize(labels, n, n);
}

TileWindow upper_tile_window(const ValidMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<bool> occupied(static_cast<std::size_t>(w), false);
  int top = -1;
  int bottom = -1;
  for (int y = 0; y < h; ++y) {
    bool row_hit = false;
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) {
        occupied[static_cast<std::size_t>(x)] = true;
        row_hit = true;
      }
    }
    if (row_hit) {
      if (top < 0) top = y;
      bottom = y;
    }
  }
  if (top < 0) throw DomainError("cannot crop: mask is empty");

  // Longest circular run of empty columns; the box starts right after it.
  int best_gap = 0;
  int best_gap_end = 0;
  for (int start = 0; start < w; ++start) {
    if (occupied[static_cast<std::size_t>(start)]) continue;
    if (occupied[static_cast<std::size_t>(wrap(start - 1, w))] == false &&
        start != 0) {
      continue;
    }
    int len = 0;
    while (len < w && !occupied[static_cast<std::size_t>(wrap(start + len, w))]) {
      ++len;
    }
    if (len > best_gap) {
      best_gap = len;
      best_gap_end = start + len;
    }
  }
  const int box_x0 = best_gap == 0 ? 0 : wrap(best_gap_end, w);
  const int box_w = w - best_gap;
  const int box_h = bottom - top + 1;

  const int side = std::min(box_w, box_h);
  return {box_x0 + (box_w - side) / 2, top, side};
}

namespace {

void check_crop_inputs(int width, int height, const ValidMask& mask, int tile) {
  if (mask.width() != width || mask.height() != height) {
    throw DomainError("mask size does not match the canvas");
  }
  if (tile < 1 || tile > std::min(width, height)) {
    throw DomainError("tile size " + std::to_string(tile) +
                      " must be in [1, min(canvas dims)]");
  }
}

}  // namespace

RasterImage crop_to_upper_tile(const RasterImage& equi, const ValidMask& mask,
                               int tile) {
  check_crop_inputs(equi.width(), equi.height(), mask, tile);
  const TileWindow win = upper_tile_window(mask);
  RasterImage cropped(win.side, win.side, equi.channels());
  for (int y = 0; y < win.side; ++y) {
    for (int x = 0; x < win.side; ++x) {
      const auto from = equi.pixel(wrap(win.x0 + x, equi.width()), win.y0 + y);
      std::copy(from.begin(), from.end(), cropped.pixel(x, y).begin());
    }
  }
  return resize(cropped, tile, tile);
}

ValidMask crop_to_upper_tile(const ValidMask& mask, int tile) {
  check_crop_inputs(mask.width(), mask.height(), mask, tile);
  const TileWindow win = upper_tile_window(mask);
  ValidMask cropped(win.side, win.side);
  for (int y = 0; y < win.side; ++y) {
    for (int x = 0; x < win.side; ++x) {
      cropped.set(x, y, mask.at(wrap(win.x0 + x, mask.width()), win.y0 + y));
    }
  }
  return resize(cropped, tile, tile);
}

LabelMap crop_to_upper_tile(const LabelMap& equi, const ValidMask& mask,
                            int tile) {
  check_crop_inputs(equi.width(), equi.height(), mask, tile);
  const TileWindow win = upper_tile_window(mask);
  LabelMap cropped(win.side, win.side, equi.ignore_id(), equi.ignore_id());
  for (int y = 0; y < win.side; ++y) {
    for (int x = 0; x < win.side; ++x) {
      const int sx = wrap(win.x0 + x, equi.width());
      if (mask.at(sx, win.y0 + y)) cropped.at(x, y) = equi.at(sx, win.y0 + y);
    }
  }
  return resize(cropped, tile, tile);
}

}  // namespace equiproj
