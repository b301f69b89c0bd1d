#include "equiproj/sphere_geom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "equiproj/errors.hpp"
#include "test_support.hpp"

namespace equiproj {
namespace {

using testing::azimuth_diff;
using testing::plane_point_via_vectors;

class SilenceWarnings : public ::testing::Test {
 protected:
  void SetUp() override {
    previous_ = set_warning_handler([this](std::string_view) { ++warnings_; });
  }
  void TearDown() override { set_warning_handler(std::move(previous_)); }
  int warnings_ = 0;

 private:
  WarningHandler previous_;
};

TEST(SphereCoordTest, NormalizesAzimuthIntoHalfOpenRange) {
  EXPECT_EQ(SphereCoord(kPi, 0).theta(), -kPi);
  EXPECT_EQ(SphereCoord(-kPi, 0).theta(), -kPi);
  EXPECT_NEAR(SphereCoord(3 * kPi / 2, 0).theta(), -kPi / 2, 1e-15);
  EXPECT_NEAR(SphereCoord(-5 * kPi / 2, 0).theta(), -kPi / 2, 1e-15);
  EXPECT_EQ(SphereCoord(0.25, 0).theta(), 0.25);
}

TEST(SphereCoordTest, RejectsZenithOutsideRange) {
  EXPECT_THROW(SphereCoord(0, kPi / 2 + 1e-9), DomainError);
  EXPECT_THROW(SphereCoord(0, -2.0), DomainError);
  EXPECT_THROW(SphereCoord(0, std::nan("")), DomainError);
  EXPECT_NO_THROW(SphereCoord(0, kPi / 2));
  EXPECT_NO_THROW(SphereCoord(0, -kPi / 2));
}

TEST_F(SilenceWarnings, EquirectSpecDerivesSteps) {
  const EquirectSpec spec(512, 256);
  EXPECT_DOUBLE_EQ(spec.delta_theta(), 2 * kPi / 512);
  EXPECT_DOUBLE_EQ(spec.delta_phi(), kPi / 256);
  EXPECT_EQ(warnings_, 0);
}

TEST_F(SilenceWarnings, EquirectSpecWarnsOnNonSquarePixels) {
  const EquirectSpec spec(300, 256);
  EXPECT_EQ(warnings_, 1);
  EXPECT_THROW(EquirectSpec(1, 1), DomainError);
  EXPECT_THROW(EquirectSpec(4, 0), DomainError);
}

TEST(SphereToPixelTest, WorkedExamples) {
  const PixelCoord center = sphere_to_pixel({0, 0}, EquirectSpec(512, 256));
  EXPECT_EQ(center.x, 256.0);
  EXPECT_EQ(center.y, 128.0);

  const PixelCoord corner = sphere_to_pixel({-kPi, kPi / 2}, EquirectSpec(512, 256));
  EXPECT_EQ(corner.x, 0.0);
  EXPECT_EQ(corner.y, 0.0);

  // Hand substitution: x = (pi/2 + pi) * 1024 / 2pi = 768,
  // y = (pi + pi/2) * 512 / 2pi = 384.
  const PixelCoord p = sphere_to_pixel({kPi / 2, -kPi / 4}, EquirectSpec(1024, 512));
  EXPECT_EQ(p.x, 768.0);
  EXPECT_EQ(p.y, 384.0);
  EXPECT_NEAR(p.x, (kPi / 2 + kPi) * 1024 / (2 * kPi), 1e-12);
  EXPECT_NEAR(p.y, (kPi - 2 * (-kPi / 4)) * 512 / (2 * kPi), 1e-12);
}

TEST(PixelToSphereTest, WorkedExamples) {
  const SphereCoord a = pixel_to_sphere({256, 128}, EquirectSpec(512, 256));
  EXPECT_EQ(a.theta(), 0.0);
  EXPECT_EQ(a.phi(), 0.0);
  const SphereCoord b = pixel_to_sphere({0, 0}, EquirectSpec(512, 256));
  EXPECT_EQ(b.theta(), -kPi);
  EXPECT_EQ(b.phi(), kPi / 2);
  const SphereCoord c = pixel_to_sphere({768, 384}, EquirectSpec(1024, 512));
  EXPECT_NEAR(c.theta(), kPi / 2, 1e-12);
  EXPECT_NEAR(c.phi(), -kPi / 4, 1e-12);
}

TEST(PixelToSphereTest, RejectsOutOfRaster) {
  const EquirectSpec spec(512, 256);
  EXPECT_THROW(pixel_to_sphere({-0.01, 0}, spec), DomainError);
  EXPECT_THROW(pixel_to_sphere({0, 256.5}, spec), DomainError);
  EXPECT_NO_THROW(pixel_to_sphere({512, 256}, spec));
}

TEST(PixelToSphereTest, RoundTripsRandomCoordinates) {
  const EquirectSpec spec(2048, 1024);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> theta(-kPi, kPi);
  std::uniform_real_distribution<double> phi(-kPi / 2, kPi / 2);
  for (int i = 0; i < 10000; ++i) {
    const SphereCoord s(theta(rng), phi(rng));
    const SphereCoord back = pixel_to_sphere(sphere_to_pixel(s, spec), spec);
    ASSERT_LE(std::abs(azimuth_diff(back.theta(), s.theta())), 1e-12);
    ASSERT_LE(std::abs(back.phi() - s.phi()), 1e-12);
  }
}

TEST(SphereToPixelTest, MonotoneInBothAngles) {
  const EquirectSpec spec(1024, 512);
  double last_x = -1;
  for (int k = -100; k < 100; ++k) {
    const double x = sphere_to_pixel({k * kPi / 100, 0.3}, spec).x;
    EXPECT_GT(x, last_x);
    last_x = x;
  }
  double last_y = -1;
  for (int k = 50; k >= -50; --k) {
    const double y = sphere_to_pixel({0.3, k * kPi / 100}, spec).y;
    EXPECT_GT(y, last_y);
    last_y = y;
  }
}

TEST(PlaneCoordsTest, Examples) {
  const TangentGridSpec g512(7, {0, 0}, EquirectSpec(512, 256));
  EXPECT_EQ(plane_coords(0, 0, g512), (PlanePoint{0, 0}));

  const PlanePoint one = plane_coords(1, 0, g512);
  EXPECT_NEAR(one.u, 0.0122722, 1e-6);
  EXPECT_NEAR(one.u, std::tan(2 * kPi / 512), 1e-16);
  EXPECT_EQ(one.t, 0.0);

  const double step = std::tan(kPi / 256);
  const TangentGridSpec g(7, {0, 0}, step, step);
  const PlanePoint p = plane_coords(-2, 3, g);
  EXPECT_DOUBLE_EQ(p.u, -2 * step);
  EXPECT_DOUBLE_EQ(p.t, 3 * step);
  EXPECT_EQ(plane_coords(2, -3, g).u, -p.u);
  EXPECT_EQ(plane_coords(2, -3, g).t, -p.t);
}

TEST(PlaneCoordsTest, RejectsIndicesOutsideGrid) {
  const TangentGridSpec g(5, {0, 0}, 0.1, 0.1);
  EXPECT_THROW(plane_coords(3, 0, g), DomainError);
  EXPECT_THROW(plane_coords(0, -3, g), DomainError);
  EXPECT_NO_THROW(plane_coords(-2, 2, g));
}

TEST(TangentGridSpecTest, RequiresOddSideAndPositiveSteps) {
  EXPECT_THROW(TangentGridSpec(4, {0, 0}, 0.1, 0.1), DomainError);
  EXPECT_THROW(TangentGridSpec(1, {0, 0}, 0.1, 0.1), DomainError);
  EXPECT_THROW(TangentGridSpec(5, {0, 0}, 0.0, 0.1), DomainError);
  EXPECT_THROW(TangentGridSpec(5, {0, 0}, 0.1, -1.0), DomainError);
  const TangentGridSpec g(9, {0, 0}, 0.5, 0.25);
  EXPECT_EQ(g.half(), 4);
  EXPECT_EQ(g.u_max(), 2.0);
  EXPECT_EQ(g.t_max(), 1.0);
}

TEST(AngularTermsTest, RhoZeroIffVZero) {
  const AngularTerms zero = angular_terms({0, 0});
  EXPECT_EQ(zero.rho, 0.0);
  EXPECT_EQ(zero.v, 0.0);
  const AngularTerms a = angular_terms({3, 4});
  EXPECT_EQ(a.rho, 5.0);
  EXPECT_DOUBLE_EQ(a.v, std::atan(5.0));
}

TEST(InverseGnomonicTest, OriginReturnsTangentExactly) {
  const SphereCoord t(1.2, -0.4);
  EXPECT_EQ(inverse_gnomonic({0, 0}, t), t);
  const SphereCoord pole(0.3, kPi / 2);
  EXPECT_EQ(inverse_gnomonic({0, 0}, pole), pole);
}

TEST(InverseGnomonicTest, EquatorAxisIsArctan) {
  for (double u : {-3.0, -0.5, 0.01, 0.7, 2.5}) {
    const SphereCoord s = inverse_gnomonic({u, 0}, {0, 0});
    EXPECT_NEAR(s.theta(), std::atan(u), 1e-15);
    EXPECT_EQ(s.phi(), 0.0);
  }
}

TEST(InverseGnomonicTest, MatchesVectorOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> plane(-3, 3);
  std::uniform_real_distribution<double> theta(-kPi, kPi);
  std::uniform_real_distribution<double> phi(-kPi / 2, kPi / 2);
  for (int i = 0; i < 5000; ++i) {
    const PlanePoint p{plane(rng), plane(rng)};
    const SphereCoord t(theta(rng), phi(rng));
    const SphereCoord got = inverse_gnomonic(p, t);
    const SphereCoord want = plane_point_via_vectors(p, t);
    ASSERT_NEAR(got.phi(), want.phi(), 1e-12);
    if (std::abs(want.phi()) < kPi / 2 - 1e-6) {
      ASSERT_NEAR(azimuth_diff(got.theta(), want.theta()), 0.0, 1e-9);
    }
  }
}

TEST(InverseGnomonicTest, ExactPoleTangentIsFinite) {
  const SphereCoord pole(0.0, kPi / 2);
  const SphereCoord s = inverse_gnomonic({0.2, -0.1}, pole);
  const SphereCoord want = plane_point_via_vectors({0.2, -0.1}, pole);
  EXPECT_NEAR(s.phi(), want.phi(), 1e-12);
  EXPECT_NEAR(azimuth_diff(s.theta(), want.theta()), 0.0, 1e-12);
}

TEST(InverseGnomonicTest, AzimuthShiftEquivariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> plane(-2, 2);
  std::uniform_real_distribution<double> angle(-1.4, 1.4);
  for (int i = 0; i < 1000; ++i) {
    const PlanePoint p{plane(rng), plane(rng)};
    const double theta0 = angle(rng), phi0 = angle(rng), delta = 2 * angle(rng);
    const SphereCoord a = inverse_gnomonic(p, {theta0, phi0});
    const SphereCoord b = inverse_gnomonic(p, {theta0 + delta, phi0});
    ASSERT_NEAR(azimuth_diff(b.theta(), a.theta() + delta), 0.0, 1e-12);
    ASSERT_EQ(b.phi(), a.phi());
  }
}

TEST(InverseGnomonicTest, MirrorSymmetry) {
  const SphereCoord t(0.4, 0.9);
  const SphereCoord a = inverse_gnomonic({0.3, 0.2}, t);
  const SphereCoord b = inverse_gnomonic({-0.3, 0.2}, t);
  EXPECT_NEAR(azimuth_diff(b.theta(), t.theta()),
              -azimuth_diff(a.theta(), t.theta()), 1e-15);
  EXPECT_EQ(a.phi(), b.phi());

  const SphereCoord eq(0.4, 0.0);
  EXPECT_EQ(inverse_gnomonic({0.3, -0.2}, eq).phi(),
            -inverse_gnomonic({0.3, 0.2}, eq).phi());
}

TEST(ForwardGnomonicTest, TangentAndAntipode) {
  const SphereCoord t(0.5, 0.3);
  const GnomonicResult at = forward_gnomonic(t, t);
  EXPECT_TRUE(at.visible);
  EXPECT_NEAR(at.point.u, 0.0, 1e-15);
  EXPECT_NEAR(at.point.t, 0.0, 1e-15);
  EXPECT_FALSE(forward_gnomonic({0.5 - kPi, -0.3}, t).visible);
  EXPECT_FALSE(forward_gnomonic({kPi / 2 + 0.01, 0.0}, {0.0, 0.0}).visible);
}

TEST(ForwardGnomonicTest, RoundTripWithInverse) {
  const SphereCoord t(0.3, 0.7);
  const GnomonicResult r = forward_gnomonic(inverse_gnomonic({0.1, 0.2}, t), t);
  EXPECT_TRUE(r.visible);
  EXPECT_NEAR(r.point.u, 0.1, 1e-12);
  EXPECT_NEAR(r.point.t, 0.2, 1e-12);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> radius(0, 3), angle(-kPi, kPi);
  std::uniform_real_distribution<double> phi(-kPi / 2, kPi / 2);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r0 = radius(rng), a = angle(rng);
    const PlanePoint p{r0 * std::cos(a), r0 * std::sin(a)};
    const SphereCoord tan(angle(rng), phi(rng));
    const GnomonicResult back = forward_gnomonic(inverse_gnomonic(p, tan), tan);
    ASSERT_TRUE(back.visible);
    worst = std::max({worst, std::abs(back.point.u - p.u), std::abs(back.point.t - p.t)});
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(SolidAngleTest, FullEmptyAndHemisphere) {
  const EquirectSpec spec(512, 256);
  EXPECT_NEAR(solid_angle_of_mask(ValidMask(512, 256, true), spec), 4 * kPi,
              4 * kPi * 1e-3);
  EXPECT_EQ(solid_angle_of_mask(ValidMask(512, 256, false), spec), 0.0);

  ValidMask upper(512, 256);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 512; ++x) upper.set(x, y, true);
  }
  double brute = 0;
  for (int y = 0; y < 128; ++y) {
    brute += 512 * (2 * kPi / 512) * (kPi / 256) *
             std::cos(kPi / 2 - (y + 0.5) * kPi / 256);
  }
  EXPECT_NEAR(solid_angle_of_mask(upper, spec), brute, 1e-12);
  EXPECT_NEAR(brute, 2 * kPi, 2 * kPi * 1e-3);
}

TEST(SolidAngleTest, RejectsSizeMismatch) {
  EXPECT_THROW(solid_angle_of_mask(ValidMask(10, 5), EquirectSpec(512, 256)),
               DomainError);
}

TEST(KernelGridTest, EquatorIsNearlyRegular) {
  const EquirectSpec spec(1024, 512);
  const PixelCoord c{300.5, 256.0};
  const auto grid = distorted_kernel_grid(spec, 3, c);
  ASSERT_EQ(grid.size(), 9u);
  std::size_t idx = 0;
  for (int j = 1; j >= -1; --j) {
    for (int i = -1; i <= 1; ++i, ++idx) {
      EXPECT_NEAR(grid[idx].x, c.x + i, 0.01);
      EXPECT_NEAR(grid[idx].y, c.y - j, 0.01);
    }
  }
  EXPECT_EQ(grid[4], c);
}

TEST(KernelGridTest, CenterEntryIsExact) {
  const EquirectSpec spec(640, 320);
  for (PixelCoord c : {PixelCoord{0.5, 0.5}, PixelCoord{123.25, 77.75},
                       PixelCoord{639.5, 319.5}}) {
    const auto grid = distorted_kernel_grid(spec, 5, c);
    EXPECT_EQ(grid[12], c);
  }
}

TEST(KernelGridTest, NearPoleRowsSpreadTowardTheTop) {
  const EquirectSpec spec(1024, 512);
  const int k = 7;
  const auto grid = distorted_kernel_grid(spec, k, {512, 4.5});
  auto row_spread = [&](int r) {
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < k; ++i) {
      double dx = grid[r * k + i].x - 512;
      dx = std::remainder(dx, 1024.0);
      lo = std::min(lo, dx);
      hi = std::max(hi, dx);
    }
    return hi - lo;
  };
  for (int r = 0; r + 1 < k; ++r) EXPECT_GT(row_spread(r), row_spread(r + 1));
}

TEST(KernelGridTest, WrapsAcrossTheSeam) {
  const EquirectSpec spec(1024, 512);
  const auto grid = distorted_kernel_grid(spec, 3, {0.5, 1.5});
  bool wrapped = false;
  for (const auto& p : grid) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 1024.0);
    wrapped = wrapped || p.x > 512;
  }
  EXPECT_TRUE(wrapped);
}

TEST(KernelGridTest, RejectsBadInputs) {
  const EquirectSpec spec(64, 32);
  EXPECT_THROW(distorted_kernel_grid(spec, 4, {1, 1}), DomainError);
  EXPECT_THROW(distorted_kernel_grid(spec, 3, {65, 1}), DomainError);
}

}  // namespace
}  // namespace equiproj
