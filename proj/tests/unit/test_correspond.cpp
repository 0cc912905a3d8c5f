#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "splatalign/correspond.hpp"
#include "splatalign/math_util.hpp"
#include "support/test_helpers.hpp"

using namespace splatalign;
using test_support::random_cloud;
using test_support::TempDir;

namespace {

// Distinct one-hot descriptor per pixel.
FeatureMap one_hot_map(int w, int h) {
  FeatureMap f(w, h, w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.descriptor(y, x)[y * w + x] = 1.0;
  return f;
}

ImageU8 full_mask(int w, int h) {
  ImageU8 m(w, h, 1);
  for (auto& v : m.data) v = 255;
  return m;
}

}  // namespace

TEST(MutualNnMatch, IdentityOneHot) {
  const auto f = one_hot_map(4, 3);
  const auto matches = mutual_nn_match(f, f, full_mask(4, 3), 100);
  ASSERT_EQ(matches.size(), 12u);
  for (const auto& m : matches) {
    EXPECT_EQ(m.u_gen, m.u_par);
    EXPECT_NEAR(m.confidence, 1.0, 1e-12);
  }
}

TEST(MutualNnMatch, RecoversPermutation) {
  const int w = 4, h = 4;
  const auto f_gen = one_hot_map(w, h);
  std::vector<int> perm(w * h);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);

  FeatureMap f_par(w, h, w * h);
  for (int pix = 0; pix < w * h; ++pix) {
    const int dst = perm[pix];
    for (int k = 0; k < w * h; ++k)
      f_par.descriptor(dst / w, dst % w)[k] = f_gen.descriptor(pix / w, pix % w)[k];
  }
  const auto matches = mutual_nn_match(f_gen, f_par, full_mask(w, h), 100);
  ASSERT_EQ(matches.size(), std::size_t(w * h));
  for (const auto& m : matches) {
    const int src = m.u_gen.y() * w + m.u_gen.x();
    EXPECT_EQ(m.u_par.y() * w + m.u_par.x(), perm[src]);
  }
}

TEST(MutualNnMatch, DuplicateDescriptorDropsNonMutual) {
  FeatureMap f_gen(2, 1, 3);
  f_gen.descriptor(0, 0)[0] = 1.0;  // two gen pixels share a descriptor
  f_gen.descriptor(0, 1)[0] = 1.0;
  FeatureMap f_par(1, 1, 3);
  f_par.descriptor(0, 0)[0] = 1.0;
  const auto matches = mutual_nn_match(f_gen, f_par, full_mask(1, 1), 16);
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_EQ(matches[0].u_gen, Eigen::Vector2i(0, 0));
}

TEST(MutualNnMatch, EmptyMaskGivesNothing) {
  const auto f = one_hot_map(3, 3);
  ImageU8 empty(3, 3, 1);
  EXPECT_TRUE(mutual_nn_match(f, f, empty, 16).empty());
}

TEST(MutualNnMatch, TopKCapsResults) {
  const auto f = one_hot_map(4, 4);
  EXPECT_EQ(mutual_nn_match(f, f, full_mask(4, 4), 5).size(), 5u);
}

TEST(LiftMatches, EqualDepthsGiveEqualPoints) {
  Camera cam;
  cam.fx = cam.fy = 40;
  cam.cx = cam.cy = 16;
  cam.width = cam.height = 32;
  ImageD depth(32, 32, 1);
  for (auto& v : depth.data) v = 3.0;

  std::vector<Match2D> matches;
  for (int i = 0; i < 5; ++i) {
    Match2D m;
    m.u_gen = m.u_par = Eigen::Vector2i(3 + 5 * i, 7 + 3 * i);
    matches.push_back(m);
  }
  const auto lifted = lift_matches(matches, depth, depth, cam);
  EXPECT_EQ(lifted.dropped, 0);
  ASSERT_EQ(lifted.pairs.size(), 5u);
  for (const auto& c : lifted.pairs) EXPECT_LT((c.p_gen - c.p_par).norm(), 1e-12);
}

TEST(LiftMatches, ZeroDepthDropsAll) {
  Camera cam;
  cam.fx = cam.fy = 40;
  cam.cx = cam.cy = 16;
  cam.width = cam.height = 32;
  ImageD zero(32, 32, 1);
  std::vector<Match2D> matches(4);
  const auto lifted = lift_matches(matches, zero, zero, cam);
  EXPECT_TRUE(lifted.pairs.empty());
  EXPECT_EQ(lifted.dropped, 4);
}

TEST(LiftMatches, CameraConsistentReprojection) {
  std::mt19937_64 rng(9);
  Camera cam;
  cam.fx = cam.fy = 55;
  cam.cx = cam.cy = 24;
  cam.width = cam.height = 48;
  cam.rotation = random_rotation(rng);
  cam.translation = Vec3(0.2, -0.1, 3.0);

  std::uniform_real_distribution<double> ud(1.0, 5.0);
  std::uniform_int_distribution<int> up(0, 47);
  ImageD depth(48, 48, 1);
  for (auto& v : depth.data) v = ud(rng);
  for (int k = 0; k < 50; ++k) {
    Match2D m;
    m.u_gen = Eigen::Vector2i(up(rng), up(rng));
    m.u_par = m.u_gen;
    const auto lifted = lift_matches({m}, depth, depth, cam);
    ASSERT_EQ(lifted.pairs.size(), 1u);
    const Vec2 back = cam.project(lifted.pairs[0].p_gen);
    EXPECT_LT((back - Vec2(m.u_gen.x() + 0.5, m.u_gen.y() + 0.5)).norm(), 0.5);
  }
}

TEST(SynthCorrespondences, ExactUnderIdentityAndTranslation) {
  std::mt19937_64 rng(10);
  const SplatCloud cloud = random_cloud(rng, 50, 0);

  AnisotropicTransform identity;
  for (const auto& c : synth_correspondences(cloud, identity, 20, 0.0, 0.0, 3))
    EXPECT_LT((c.p_gen - c.p_par).norm(), 1e-15);

  AnisotropicTransform shift;
  shift.translation = Vec3(1, -2, 3);
  for (const auto& c : synth_correspondences(cloud, shift, 20, 0.0, 0.0, 3))
    EXPECT_LT((c.p_par - c.p_gen - Vec3(1, -2, 3)).norm(), 1e-15);

  AnisotropicTransform full;
  full.rotation = random_rotation(rng);
  full.frame = random_rotation(rng);
  full.scale = Vec3(1.2, 0.9, 1.05);
  full.translation = Vec3(0.3, 0.1, 0.2);
  for (const auto& c : synth_correspondences(cloud, full, 40, 0.0, 0.0, 3))
    EXPECT_LT((c.p_par - full.apply(c.p_gen)).norm(), 1e-12);
}

TEST(SynthCorrespondences, SeededOutlierCount) {
  std::mt19937_64 rng(11);
  const SplatCloud cloud = random_cloud(rng, 100, 0);
  AnisotropicTransform t;
  t.translation = Vec3(5, 5, 5);
  const auto pairs = synth_correspondences(cloud, t, 100, 0.0, 0.3, 17);
  int outliers = 0;
  for (const auto& c : pairs)
    if ((c.p_par - t.apply(c.p_gen)).norm() > 1e-9) ++outliers;
  EXPECT_EQ(outliers, 30);

  // Determinism under the seed.
  const auto again = synth_correspondences(cloud, t, 100, 0.0, 0.3, 17);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].p_gen, again[i].p_gen);
    EXPECT_EQ(pairs[i].p_par, again[i].p_par);
  }

  EXPECT_THROW(synth_correspondences(cloud, t, 2, 0, 0, 1), invalid_argument_error);
}

TEST(CropAndPad, FullMaskIsPadOnly) {
  ImageD img(30, 20, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(i);
  const auto out = crop_and_pad(img, full_mask(30, 20), 200);
  EXPECT_EQ(out.offset, Eigen::Vector2i(-200, -200));
  EXPECT_EQ(out.image.width, 30 + 400);
  EXPECT_EQ(out.image.height, 20 + 400);
  EXPECT_DOUBLE_EQ(out.image.at(200, 200, 0), img.at(0, 0, 0));
}

TEST(CropAndPad, SmallMaskArithmetic) {
  ImageD img(64, 64, 1);
  ImageU8 mask(64, 64, 1);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) mask.at(y, x) = 255;
  const auto out = crop_and_pad(img, mask, 200);
  EXPECT_EQ(out.image.width, 410);
  EXPECT_EQ(out.image.height, 410);
  EXPECT_EQ(out.offset, Eigen::Vector2i(5 - 200, 5 - 200));

  ImageU8 empty(64, 64, 1);
  EXPECT_THROW(crop_and_pad(img, empty, 200), invalid_argument_error);
}

TEST(CropAndPad, CoordinateRoundTrip) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> upix(0, 39);
  for (int trial = 0; trial < 10; ++trial) {
    ImageD img(40, 40, 1);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(i);
    ImageU8 mask(40, 40, 1);
    for (int k = 0; k < 30; ++k) mask.at(upix(rng), upix(rng)) = 255;
    if (mask_area(mask) == 0) continue;
    const auto out = crop_and_pad(img, mask, 7);
    for (int y = 0; y < out.image.height; ++y)
      for (int x = 0; x < out.image.width; ++x) {
        const int sy = y + out.offset.y(), sx = x + out.offset.x();
        if (sy >= 0 && sy < 40 && sx >= 0 && sx < 40)
          EXPECT_DOUBLE_EQ(out.image.at(y, x), img.at(sy, sx));
        else
          EXPECT_DOUBLE_EQ(out.image.at(y, x), 0.0);
      }
  }
}

TEST(SubsampleViews, StepFormula) {
  auto all = subsample_views(10, 15);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(subsample_views(150, 15).size(), 15u);
  EXPECT_EQ(subsample_views(151, 15).size(), 16u);
  EXPECT_THROW(subsample_views(0), invalid_argument_error);
}

TEST(CorrespondenceIo, JsonRoundTrip) {
  TempDir dir("corr");
  std::vector<Corr3D> pairs(3);
  pairs[0].p_gen = Vec3(1, 2, 3);
  pairs[0].p_par = Vec3(4, 5, 6);
  pairs[0].confidence = 0.75;
  pairs[2].p_gen = Vec3(-0.5, 0.25, 9);
  save_correspondences(pairs, 7, dir.file("c.json"));
  const auto back = load_correspondences(dir.file("c.json"));
  EXPECT_EQ(back.view_index, 7);
  ASSERT_EQ(back.pairs.size(), 3u);
  EXPECT_EQ(back.pairs[0].p_gen, pairs[0].p_gen);
  EXPECT_EQ(back.pairs[0].p_par, pairs[0].p_par);
  EXPECT_DOUBLE_EQ(back.pairs[0].confidence, 0.75);
}

TEST(FeatureMapIo, BinaryRoundTrip) {
  TempDir dir("fmap");
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-1, 1);
  FeatureMap f(6, 5, 8);
  for (auto& v : f.data) v = uni(rng);
  save_feature_map(f, dir.file("f.bin"));
  const auto back = load_feature_map(dir.file("f.bin"));
  ASSERT_EQ(back.width, 6);
  ASSERT_EQ(back.dim, 8);
  for (std::size_t i = 0; i < f.data.size(); ++i)
    EXPECT_NEAR(back.data[i], f.data[i], 1e-6);
}

TEST(Providers, GroundTruthConvergesWithCumulative) {
  std::mt19937_64 rng(14);
  const SplatCloud cloud = random_cloud(rng, 60, 0);
  AnisotropicTransform target;
  target.rotation = random_rotation(rng);
  target.scale = Vec3(1.1, 0.9, 1.0);
  target.translation = Vec3(0.5, 0, -0.2);

  GroundTruthProvider provider(cloud, target, 32, 99);
  ProviderContext ctx;
  ctx.iteration = 1;
  ctx.cumulative = [&](const Vec3& p) { return target.apply(p); };
  for (const auto& c : provider.gather(ctx))
    EXPECT_LT((c.p_gen - c.p_par).norm(), 1e-12);
}
