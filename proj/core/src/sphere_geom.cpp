#include "equiproj/sphere_geom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "equiproj/errors.hpp"

namespace equiproj {
namespace {

// asin arguments may drift past +-1 by rounding; anything beyond this is a bug.
constexpr double kAsinSlack = 1e-12;

double checked_asin(double arg) {
  if (arg > 1.0) {
    if (arg - 1.0 > kAsinSlack) {
      throw std::logic_error("inverse_gnomonic: asin argument " +
                             std::to_string(arg) + " out of range");
    }
    arg = 1.0;
  } else if (arg < -1.0) {
    if (-1.0 - arg > kAsinSlack) {
      throw std::logic_error("inverse_gnomonic: asin argument " +
                             std::to_string(arg) + " out of range");
    }
    arg = -1.0;
  }
  return std::asin(arg);
}

}  // namespace

double normalize_azimuth(double theta) {
  if (theta >= -kPi && theta < kPi) return theta;
  if (!std::isfinite(theta)) {
    throw DomainError("azimuth must be finite");
  }
  double r = std::fmod(theta + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  r -= kPi;
  if (r >= kPi) r = -kPi;
  return r;
}

SphereCoord::SphereCoord(double theta, double phi)
    : theta_(normalize_azimuth(theta)), phi_(phi) {
  if (!(phi >= -kPi / 2 && phi <= kPi / 2)) {
    throw DomainError("zenith angle " + std::to_string(phi) +
                      " outside [-pi/2, pi/2]");
  }
}

EquirectSpec::EquirectSpec(int width, int height)
    : width_(width), height_(height) {
  if (width < 2 || height < 1) {
    throw DomainError("equirectangular raster must be at least 2x1, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (width != 2 * height) {
    warn("equirectangular size " + std::to_string(width) + "x" +
         std::to_string(height) +
         " is not 2:1; horizontal and vertical sampling steps differ");
  }
}

TangentGridSpec::TangentGridSpec(int n, SphereCoord tangent, double step_u,
                                 double step_t)
    : n_(n), tangent_(tangent), step_u_(step_u), step_t_(step_t) {
  if (n < 3 || n % 2 == 0) {
    throw DomainError("tangent grid size must be odd and >= 3, got " +
                      std::to_string(n));
  }
  if (!(step_u > 0.0) || !(step_t > 0.0) || !std::isfinite(step_u) ||
      !std::isfinite(step_t)) {
    throw DomainError("tangent grid steps must be positive and finite");
  }
}

TangentGridSpec::TangentGridSpec(int n, SphereCoord tangent,
                                 const EquirectSpec& spec)
    : TangentGridSpec(n, tangent, std::tan(spec.delta_theta()),
                      std::tan(spec.delta_phi())) {}

AngularTerms angular_terms(PlanePoint p) {
  const double rho = std::hypot(p.u, p.t);
  return {rho, std::atan(rho)};
}

PixelCoord sphere_to_pixel(const SphereCoord& s, const EquirectSpec& spec) {
  // Same as x = (theta + pi) w / 2pi and y = (pi - 2 phi) h / 2pi, arranged so
  // rational multiples of pi land exactly on their pixel positions.
  const double x = (s.theta() / kPi + 1.0) * spec.width() / 2.0;
  const double y = (0.5 - s.phi() / kPi) * spec.height();
  return {x, y};
}

SphereCoord pixel_to_sphere(PixelCoord p, const EquirectSpec& spec) {
  if (!(p.x >= 0.0 && p.x <= spec.width() && p.y >= 0.0 &&
        p.y <= spec.height())) {
    throw DomainError("pixel (" + std::to_string(p.x) + ", " +
                      std::to_string(p.y) + ") outside the " +
                      std::to_string(spec.width()) + "x" +
                      std::to_string(spec.height()) + " raster");
  }
  const double theta = (2.0 * p.x / spec.width() - 1.0) * kPi;
  const double phi = (0.5 - p.y / spec.height()) * kPi;
  return {theta, phi};
}

PlanePoint plane_coords(int i, int j, const TangentGridSpec& grid) {
  const int half = grid.half();
  if (i < -half || i > half || j < -half || j > half) {
    throw DomainError("grid index (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") outside [-" +
                      std::to_string(half) + ", " + std::to_string(half) + "]");
  }
  return {i * grid.step_u(), j * grid.step_t()};
}

SphereCoord inverse_gnomonic(PlanePoint p, const SphereCoord& tangent) {
  const auto [rho, v] = angular_terms(p);
  if (rho == 0.0) return tangent;

  const double sin_v = std::sin(v);
  const double cos_v = std::cos(v);
  const double sin_phi = std::sin(tangent.phi());
  const double cos_phi = std::cos(tangent.phi());

  const double phi =
      checked_asin(cos_v * sin_phi + p.t * sin_v * cos_phi / rho);
  const double theta =
      tangent.theta() + std::atan2(p.u * sin_v,
                                   rho * cos_phi * cos_v - p.t * sin_phi * sin_v);
  return {theta, phi};
}

GnomonicResult forward_gnomonic(const SphereCoord& s,
                                const SphereCoord& tangent) {
  const double d_theta = s.theta() - tangent.theta();
  const double sin_phi0 = std::sin(tangent.phi());
  const double cos_phi0 = std::cos(tangent.phi());
  const double sin_phi = std::sin(s.phi());
  const double cos_phi = std::cos(s.phi());
  const double cos_dt = std::cos(d_theta);

  const double cos_c = sin_phi0 * sin_phi + cos_phi0 * cos_phi * cos_dt;
  if (cos_c <= 0.0) return {{}, false};

  const double u = cos_phi * std::sin(d_theta) / cos_c;
  const double t = (cos_phi0 * sin_phi - sin_phi0 * cos_phi * cos_dt) / cos_c;
  return {{u, t}, true};
}

double solid_angle_of_mask(const ValidMask& mask, const EquirectSpec& spec) {
  if (mask.width() != spec.width() || mask.height() != spec.height()) {
    throw DomainError("mask is " + std::to_string(mask.width()) + "x" +
                      std::to_string(mask.height()) + " but spec is " +
                      std::to_string(spec.width()) + "x" +
                      std::to_string(spec.height()));
  }
  const double cell = spec.delta_theta() * spec.delta_phi();
  double total = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    std::size_t set = 0;
    for (int x = 0; x < mask.width(); ++x) set += mask.at(x, y) ? 1 : 0;
    if (set == 0) continue;
    const double phi = (0.5 - (y + 0.5) / spec.height()) * kPi;
    total += static_cast<double>(set) * cell * std::cos(phi);
  }
  return total;
}

std::vector<PixelCoord> distorted_kernel_grid(const EquirectSpec& spec, int k,
                                              PixelCoord center) {
  if (k < 3 || k % 2 == 0) {
    throw DomainError("kernel size must be odd and >= 3, got " +
                      std::to_string(k));
  }
  const SphereCoord tangent = pixel_to_sphere(center, spec);
  const TangentGridSpec grid(k, tangent, spec);
  const int half = grid.half();

  std::vector<PixelCoord> positions;
  positions.reserve(static_cast<std::size_t>(k) * k);
  for (int j = half; j >= -half; --j) {
    for (int i = -half; i <= half; ++i) {
      if (i == 0 && j == 0) {
        positions.push_back(center);
        continue;
      }
      const SphereCoord s = inverse_gnomonic(plane_coords(i, j, grid), tangent);
      positions.push_back(sphere_to_pixel(s, spec));
    }
  }
  return positions;
}

}  // namespace equiproj
