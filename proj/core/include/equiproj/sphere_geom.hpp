#pragma once

// Coordinate mathematics on the unit sphere: equirectangular pixel mapping,
// tangent-plane sampling grids and the gnomonic (spherical-center)
// projection in both directions. Everything here is a pure function; all
// angles are radians.

#include <numbers>
#include <vector>

#include "equiproj/raster.hpp"

namespace equiproj {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an azimuth into [-pi, pi). Values already in range are returned
/// unchanged (bit for bit).
double normalize_azimuth(double theta);

/// A point on the unit sphere. theta is azimuth (normalized to [-pi, pi)),
/// phi is the zenith angle measured from the equator, positive toward the
/// north pole. A phi outside [-pi/2, pi/2] throws DomainError.
class SphereCoord {
 public:
  SphereCoord(double theta, double phi);

  double theta() const { return theta_; }
  double phi() const { return phi_; }

  friend bool operator==(const SphereCoord&, const SphereCoord&) = default;

 private:
  double theta_;
  double phi_;
};

/// Geometry of an equirectangular raster. The angular sampling steps are
/// derived from the size: delta_theta = 2pi/w, delta_phi = pi/h.
class EquirectSpec {
 public:
  /// Throws DomainError unless width >= 2 and height >= 1. Emits a warning
  /// when width != 2 * height (pixels are then not square in angle).
  EquirectSpec(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double delta_theta() const { return 2.0 * kPi / width_; }
  double delta_phi() const { return kPi / height_; }

  friend bool operator==(const EquirectSpec&, const EquirectSpec&) = default;

 private:
  int width_;
  int height_;
};

/// Continuous raster position; pixel (i, j) covers [i, i+1) x [j, j+1) and
/// has its center at (i + 0.5, j + 0.5).
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Cartesian position on the tangent plane of the unit sphere; (0, 0) is
/// the tangency point, u grows eastward and t northward.
struct PlanePoint {
  double u = 0.0;
  double t = 0.0;
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

/// An n x n sampling grid on the plane tangent at `tangent`, with steps
/// tan(delta_theta) horizontally and tan(delta_phi) vertically.
class TangentGridSpec {
 public:
  /// n must be odd and >= 3; steps must be positive.
  TangentGridSpec(int n, SphereCoord tangent, double step_u, double step_t);
  /// Steps taken from the equirectangular sampling intervals of `spec`.
  TangentGridSpec(int n, SphereCoord tangent, const EquirectSpec& spec);

  int n() const { return n_; }
  int half() const { return (n_ - 1) / 2; }
  const SphereCoord& tangent() const { return tangent_; }
  double step_u() const { return step_u_; }
  double step_t() const { return step_t_; }
  double u_max() const { return half() * step_u_; }
  double t_max() const { return half() * step_t_; }

 private:
  int n_;
  SphereCoord tangent_;
  double step_u_;
  double step_t_;
};

/// Radial plane distance rho and its angular size v = atan(rho).
struct AngularTerms {
  double rho = 0.0;
  double v = 0.0;
};

AngularTerms angular_terms(PlanePoint p);

PixelCoord sphere_to_pixel(const SphereCoord& s, const EquirectSpec& spec);

/// Inverse of sphere_to_pixel. Throws DomainError when p lies outside
/// [0, w] x [0, h].
SphereCoord pixel_to_sphere(PixelCoord p, const EquirectSpec& spec);

/// Plane position of grid sample (i, j): (i * step_u, j * step_t). Positive j
/// is north (up). Throws DomainError when |i| or |j| exceeds the half size.
PlanePoint plane_coords(int i, int j, const TangentGridSpec& grid);

/// Maps a tangent-plane point back onto the sphere. p = (0, 0) returns the
/// tangent point exactly.
SphereCoord inverse_gnomonic(PlanePoint p, const SphereCoord& tangent);

struct GnomonicResult {
  PlanePoint point;
  /// False when s lies on the far hemisphere; `point` is then meaningless.
  bool visible = false;
};

GnomonicResult forward_gnomonic(const SphereCoord& s,
                                const SphereCoord& tangent);

/// Discrete solid angle (steradians) of the set pixels of `mask`:
/// sum of delta_theta * delta_phi * cos(phi at pixel center).
double solid_angle_of_mask(const ValidMask& mask, const EquirectSpec& spec);

/// Sampling positions of a k x k convolution kernel placed on the sphere at
/// `center`: a tangent grid with n = k is projected back into the raster.
/// Row-major, top row (north) first. The middle entry equals `center`.
/// x values are wrapped into [0, w).
std::vector<PixelCoord> distorted_kernel_grid(const EquirectSpec& spec, int k,
                                              PixelCoord center);

}  // namespace equiproj
