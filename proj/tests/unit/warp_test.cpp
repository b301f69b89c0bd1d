#include "equiproj/warp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "equiproj/errors.hpp"
#include "test_support.hpp"

namespace equiproj {
namespace {

ProjectionJob job_at(double theta, double phi, int w, int n,
                     Interp interp = Interp::Bilinear,
                     WarpMode mode = WarpMode::Inverse) {
  return ProjectionJob{SphereCoord(theta, phi), EquirectSpec(w, w / 2), n, interp,
                       mode, 1};
}

int row_width(const ValidMask& mask, int y) {
  int count = 0;
  for (int x = 0; x < mask.width(); ++x) count += mask.at(x, y) ? 1 : 0;
  return count;
}

std::pair<int, int> mask_rows(const ValidMask& mask) {
  int top = -1, bottom = -1;
  for (int y = 0; y < mask.height(); ++y) {
    if (row_width(mask, y) > 0) {
      if (top < 0) top = y;
      bottom = y;
    }
  }
  return {top, bottom};
}

std::set<int> ids_of(const LabelMap& labels) {
  return {labels.ids().begin(), labels.ids().end()};
}

TEST(OddSideTest, BumpsEvenSizes) {
  EXPECT_EQ(odd_side(3), 3);
  EXPECT_EQ(odd_side(224), 225);
  EXPECT_EQ(odd_side(225), 225);
  EXPECT_THROW(odd_side(2), DomainError);
}

TEST(ProjectImageTest, ConstantImageStaysConstantOnMask) {
  const RasterImage img(65, 65, 3, 0.4f);
  const ProjectedImage out = project_image(img, job_at(0.5, 0.3, 512, 65));
  ASSERT_TRUE(out.mask.any());
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 512; ++x) {
      const float expect = out.mask.at(x, y) ? 0.4f : 0.0f;
      for (int c = 0; c < 3; ++c) ASSERT_NEAR(out.image.at(x, y, c), expect, 1e-6);
    }
  }
}

TEST(ProjectImageTest, HighTangentWidensTowardTheTop) {
  const RasterImage img(129, 129, 1, 1.0f);
  const ProjectedImage out = project_image(img, job_at(0, 6 * kPi / 16, 1024, 129));
  const auto [top, bottom] = mask_rows(out.mask);
  ASSERT_GE(top, 0);
  EXPECT_LT(bottom, 256);
  EXPECT_GT(row_width(out.mask, top), row_width(out.mask, bottom));
}

TEST(ProjectImageTest, RejectsNonSquareOrWrongSize) {
  EXPECT_THROW(project_image(RasterImage(65, 63, 1), job_at(0, 0, 256, 65)),
               DomainError);
  EXPECT_THROW(project_image(RasterImage(33, 33, 1), job_at(0, 0, 256, 65)),
               DomainError);
}

// The row-bound shortcut must not drop any pixel a full scan would cover.
TEST(ProjectImageTest, RowBoundsContainEveryCoveredPixel) {
  const EquirectSpec spec(256, 128);
  for (double phi : {-kPi / 2, -1.0, 0.0, 0.7, 7 * kPi / 16, kPi / 2}) {
    const TangentProjection proj(SphereCoord(2.0, phi), spec, 33);
    const auto [first, last] = proj.row_bounds();
    for (int y = 0; y < 128; ++y) {
      if (y >= first && y <= last) continue;
      for (int x = 0; x < 256; ++x) {
        ASSERT_FALSE(proj.source_for_pixel(x, y).has_value())
            << "phi=" << phi << " pixel " << x << "," << y;
      }
    }
  }
}

TEST(ProjectImageTest, MaskMatchesPerPixelSourceLookup) {
  const ProjectionJob job = job_at(-1.0, 1.2, 256, 41);
  const ProjectedImage out = project_image(RasterImage(41, 41, 1, 1.0f), job);
  const TangentProjection proj(job.tangent, job.spec, 41);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 256; ++x) {
      ASSERT_EQ(out.mask.at(x, y), proj.source_for_pixel(x, y).has_value());
    }
  }
}

TEST(ProjectImageTest, PoleCrossingCoversTopRowAllAround) {
  const ProjectedImage out =
      project_image(RasterImage(65, 65, 1, 1.0f), job_at(0, kPi / 2, 512, 65));
  EXPECT_EQ(row_width(out.mask, 0), 512);
  EXPECT_EQ(mask_rows(out.mask).first, 0);
}

TEST(ProjectImageTest, SeamWrapKeepsRegionContiguous) {
  const ProjectedImage out =
      project_image(RasterImage(65, 65, 1, 1.0f), job_at(-kPi, 0.2, 512, 65));
  EXPECT_TRUE(out.mask.at(0, 110));
  EXPECT_TRUE(out.mask.at(511, 110));
  EXPECT_FALSE(out.mask.at(256, 110));
}

TEST(ProjectImageTest, AzimuthShiftIsCircularShift) {
  const EquirectSpec spec(512, 256);
  const int shift = 37;
  const RasterImage img = testing::gradient_image(65, 65);
  const ProjectedImage a = project_image(img, job_at(0, 0.6, 512, 65, Interp::Nearest));
  const ProjectedImage b = project_image(
      img, job_at(shift * spec.delta_theta(), 0.6, 512, 65, Interp::Nearest));
  std::size_t differ = 0;
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 512; ++x) {
      const int xs = (x + shift) % 512;
      if (a.mask.at(x, y) != b.mask.at(xs, y) ||
          a.image.at(x, y, 0) != b.image.at(xs, y, 0)) {
        ++differ;
      }
    }
  }
  EXPECT_LE(differ, a.mask.count() / 1000);
}

TEST(ProjectImageTest, ThreadCountDoesNotChangeOutput) {
  const RasterImage img = testing::gradient_image(129, 129);
  ProjectionJob job = job_at(0.3, 6 * kPi / 16, 1024, 129);
  const ProjectedImage one = project_image(img, job);
  job.threads = 4;
  const ProjectedImage four = project_image(img, job);
  EXPECT_EQ(one.image, four.image);
  EXPECT_EQ(one.mask, four.mask);
}

TEST(ProjectImageTest, ScatterDepositsOnePixelPerSampleAtMost) {
  const ProjectedImage out = project_image(
      RasterImage(65, 65, 1, 1.0f),
      job_at(0, 6 * kPi / 16, 512, 65, Interp::Bilinear, WarpMode::Scatter));
  EXPECT_TRUE(out.mask.any());
  EXPECT_LE(out.mask.count(), 65u * 65u);
}

TEST(ProjectLabelsTest, SingleClassAndClosure) {
  const ProjectedLabels single =
      project_labels(LabelMap(33, 33, 3), job_at(0, 0.4, 256, 33));
  EXPECT_EQ(ids_of(single.labels), (std::set<int>{3, kIgnoreId}));

  const LabelMap blocks = testing::block_labels(65, 5, 4);
  for (WarpMode mode : {WarpMode::Inverse, WarpMode::Scatter}) {
    const ProjectedLabels out = project_labels(
        blocks, job_at(1.0, 7 * kPi / 16, 512, 65, Interp::Bilinear, mode));
    for (int id : ids_of(out.labels)) {
      EXPECT_TRUE(id == kIgnoreId || (id >= 0 && id < 4)) << id;
    }
    for (int y = 0; y < 256; ++y) {
      for (int x = 0; x < 512; ++x) {
        if (!out.mask.at(x, y)) ASSERT_EQ(out.labels.at(x, y), kIgnoreId);
      }
    }
  }
}

TEST(ProjectLabelsTest, NearEquatorPreservesClassRatios) {
  // 4-pixel checker cells: single-pixel cells alias under any resampling.
  const LabelMap checker = testing::block_labels(65, 4, 2);
  std::size_t in[2] = {0, 0};
  for (auto id : checker.ids()) ++in[id];
  const ProjectedLabels out = project_labels(checker, job_at(0, kPi / 16, 1024, 65));
  std::size_t got[2] = {0, 0};
  for (auto id : out.labels.ids()) {
    if (id != kIgnoreId) ++got[id];
  }
  const double ratio_in = static_cast<double>(in[0]) / in[1];
  const double ratio_out = static_cast<double>(got[0]) / got[1];
  EXPECT_NEAR(ratio_out / ratio_in, 1.0, 0.05);
}

TEST(ExtractTest, ConstantEquirectGivesConstantView) {
  const RasterImage equi(256, 128, 3, 0.7f);
  for (Interp interp : {Interp::Bilinear, Interp::Nearest}) {
    const RasterImage view = extract_tangent_image(equi, {3.0, 1.5}, 31, interp);
    ASSERT_EQ(view.width(), 31);
    for (float v : view.samples()) ASSERT_NEAR(v, 0.7f, 1e-6);
  }
}

TEST(ExtractTest, EquatorCenterApproximatesCrop) {
  const EquirectSpec spec(2048, 1024);
  const int n = 21;
  const TangentProjection proj({0, 0}, spec, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const PixelCoord p = proj.canvas_position(c, r);
      EXPECT_NEAR(p.x, 1014 + c, 0.01);
      EXPECT_NEAR(p.y, 502 + r, 0.01);
    }
  }
  // Bilinear samples of a horizontal ramp read back the lattice positions.
  RasterImage ramp(2048, 1024, 1);
  for (int y = 0; y < 1024; ++y) {
    for (int x = 0; x < 2048; ++x) ramp.at(x, y, 0) = static_cast<float>(x) / 4096.0f;
  }
  const RasterImage view = extract_tangent_image(ramp, {0, 0}, n);
  for (int c = 0; c < n; ++c) {
    EXPECT_NEAR(view.at(c, 10, 0), (1014 + c - 0.5) / 4096.0, 1e-5);
  }
}

// Agreement over tangent pixels whose canvas sample lies inside the mask.
double interior_agreement(const LabelMap& original, const LabelMap& back,
                          const ValidMask& mask, const TangentProjection& proj) {
  int agree = 0, interior = 0;
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      const auto [cx, cy] = canvas_pixel(proj.canvas_position(x, y), proj.spec());
      if (!mask.at(cx, cy)) continue;
      ++interior;
      agree += back.at(x, y) == original.at(x, y) ? 1 : 0;
    }
  }
  return static_cast<double>(agree) / interior;
}

TEST(ExtractTest, LabelRoundTripThroughProjection) {
  const LabelMap labels = testing::block_labels(65, 6, 5);
  for (const SphereCoord tangent : {SphereCoord(0.5, 0.9), SphereCoord(0, 6 * kPi / 16),
                                    SphereCoord(-kPi, kPi / 16)}) {
    const ProjectionJob job{tangent, EquirectSpec(1024, 512), 65};
    const ProjectedLabels projected = project_labels(labels, job);
    const LabelMap back = extract_tangent_labels(projected.labels, tangent, 65);
    EXPECT_GE(interior_agreement(labels, back, projected.mask,
                                 TangentProjection(tangent, job.spec, 65)),
              0.99);
  }
}

TEST(ExtractTest, RequiresOddSide) {
  const RasterImage equi(64, 32, 1);
  EXPECT_THROW(extract_tangent_image(equi, {0, 0}, 4), DomainError);
  EXPECT_THROW(extract_tangent_labels(LabelMap(64, 32), {0, 0}, 1), DomainError);
}

TEST(ResizeTest, IdentityAndConstant) {
  const RasterImage img = testing::gradient_image(17, 17);
  EXPECT_EQ(resize_square(img, 17), img);
  const RasterImage flat(40, 30, 2, 0.3f);
  const RasterImage small = resize_square(flat, 9);
  for (float v : small.samples()) EXPECT_NEAR(v, 0.3f, 1e-6);
  EXPECT_THROW(resize_square(img, 2), DomainError);
}

TEST(ResizeTest, NearestReplicatesTinyChecker) {
  LabelMap checker(2, 2);
  checker.at(0, 0) = 0;
  checker.at(1, 0) = 1;
  checker.at(0, 1) = 1;
  checker.at(1, 1) = 0;
  const LabelMap big = resize_square(checker, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) EXPECT_EQ(big.at(x, y), checker.at(x / 2, y / 2));
  }
}

ValidMask box_mask(int w, int h, int x0, int y0, int bw, int bh) {
  ValidMask mask(w, h);
  for (int y = y0; y < y0 + bh; ++y) {
    for (int x = x0; x < x0 + bw; ++x) mask.set(x % w, y, true);
  }
  return mask;
}

TEST(CropTest, ExactTileIsIdentity) {
  const RasterImage equi = testing::gradient_image(1024, 512);
  const ValidMask mask = box_mask(1024, 512, 300, 40, 224, 224);
  const RasterImage tile = crop_to_upper_tile(equi, mask, 224);
  for (int y = 0; y < 224; ++y) {
    for (int x = 0; x < 224; ++x) {
      for (int c = 0; c < 3; ++c) {
        ASSERT_EQ(tile.at(x, y, c), equi.at(300 + x, 40 + y, c));
      }
    }
  }
}

TEST(CropTest, DoubleSizeBoxIsHalved) {
  RasterImage equi(1024, 512, 1);
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 1024; ++x) {
      equi.at(x, y, 0) = static_cast<float>((x * 7 + y * 13) % 256) / 255.0f;
    }
  }
  const ValidMask mask = box_mask(1024, 512, 100, 20, 448, 448);
  EXPECT_EQ(upper_tile_window(mask), (TileWindow{100, 20, 448}));
  const RasterImage tile = crop_to_upper_tile(equi, mask, 224);
  auto block_mean = [&](int tx, int ty) {
    const int x = 100 + 2 * tx, y = 20 + 2 * ty;
    return (equi.at(x, y, 0) + equi.at(x + 1, y, 0) + equi.at(x, y + 1, 0) +
            equi.at(x + 1, y + 1, 0)) / 4.0f;
  };
  for (auto [tx, ty] : {std::pair{0, 0}, {223, 0}, {0, 223}, {223, 223}, {57, 101}}) {
    EXPECT_NEAR(tile.at(tx, ty, 0), block_mean(tx, ty), 1e-5);
  }

  LabelMap labels(1024, 512, 0);
  labels.at(100 + 2 * 5 + 1, 20 + 2 * 9 + 1) = 4;
  EXPECT_EQ(crop_to_upper_tile(labels, mask, 224).at(5, 9), 4);
}

TEST(CropTest, WrappedMaskIsRolledIntoOneRegion) {
  const ValidMask mask = box_mask(512, 256, 480, 10, 64, 64);
  const TileWindow win = upper_tile_window(mask);
  EXPECT_EQ(win, (TileWindow{480, 10, 64}));
  const ValidMask tile = crop_to_upper_tile(mask, 64);
  EXPECT_EQ(tile.count(), 64u * 64u);
}

TEST(CropTest, WideBoxIsCenteredAndTopAnchored) {
  const ValidMask mask = box_mask(1024, 512, 100, 30, 400, 200);
  EXPECT_EQ(upper_tile_window(mask), (TileWindow{200, 30, 200}));
}

TEST(CropTest, LabelsOutsideMaskBecomeIgnore) {
  ValidMask mask = box_mask(256, 128, 10, 10, 64, 64);
  mask.set(10, 10, false);
  const LabelMap labels(256, 128, 2);
  const LabelMap tile = crop_to_upper_tile(labels, mask, 64);
  EXPECT_EQ(tile.at(0, 0), kIgnoreId);
  EXPECT_EQ(tile.at(1, 0), 2);
}

TEST(CropTest, Errors) {
  const RasterImage equi(256, 128, 1);
  EXPECT_THROW(crop_to_upper_tile(equi, ValidMask(256, 128), 64), DomainError);
  const ValidMask mask = box_mask(256, 128, 0, 0, 10, 10);
  EXPECT_THROW(crop_to_upper_tile(equi, mask, 129), DomainError);
  EXPECT_THROW(crop_to_upper_tile(equi, ValidMask(64, 32, true), 16), DomainError);
}

}  // namespace
}  // namespace equiproj
