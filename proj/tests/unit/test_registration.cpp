#include <gtest/gtest.h>

#include <random>

#include "splatalign/math_util.hpp"
#include "splatalign/registration.hpp"
#include "splatalign/transform_ops.hpp"
#include "support/test_helpers.hpp"

using namespace splatalign;
using test_support::random_cloud;
using test_support::random_points;

namespace {

std::vector<Corr3D> make_pairs(const std::vector<Vec3>& src,
                               const SimilarityTransform& t) {
  std::vector<Corr3D> pairs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs[i].p_gen = src[i];
    pairs[i].p_par = t.apply(src[i]);
  }
  return pairs;
}

}  // namespace

TEST(Umeyama, IdentityAndExactRecovery) {
  std::mt19937_64 rng(1);
  const auto src = random_points(rng, 40);

  SimilarityTransform id;
  const auto rec = umeyama(make_pairs(src, id));
  EXPECT_LT(rotation_angle(rec.rotation), 1e-12);
  EXPECT_NEAR(rec.scale, 1.0, 1e-12);
  EXPECT_LT(rec.translation.norm(), 1e-12);

  SimilarityTransform t;
  t.rotation = Eigen::AngleAxisd(M_PI / 6, Vec3::UnitZ()).toRotationMatrix();
  t.scale = 2.0;
  t.translation = Vec3(1, 2, 3);
  const auto rec2 = umeyama(make_pairs(src, t));
  EXPECT_LT(rotation_angle_between(rec2.rotation, t.rotation), 1e-9);
  EXPECT_NEAR(rec2.scale, 2.0, 1e-9);
  EXPECT_LT((rec2.translation - t.translation).norm(), 1e-9);
}

TEST(Umeyama, ExactOverScaleRange) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uscale(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto src = random_points(rng, 30);
    SimilarityTransform t;
    t.rotation = random_rotation(rng);
    t.scale = uscale(rng);
    t.translation = random_points(rng, 1)[0] * 5.0;
    const auto rec = umeyama(make_pairs(src, t));
    EXPECT_LT(rotation_angle_between(rec.rotation, t.rotation), 1e-9);
    EXPECT_LT(std::abs(rec.scale - t.scale) / t.scale, 1e-9);
    EXPECT_LT((rec.translation - t.translation).norm(), 1e-9 * (1.0 + t.translation.norm()));
  }
}

TEST(Umeyama, NoisyMonteCarlo) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.01);
  const auto src = random_points(rng, 500);
  SimilarityTransform t;
  t.rotation = random_rotation(rng);
  t.scale = 1.4;
  t.translation = Vec3(0.3, -0.8, 0.5);
  auto pairs = make_pairs(src, t);
  for (auto& c : pairs) c.p_par += Vec3(gauss(rng), gauss(rng), gauss(rng));
  const auto rec = umeyama(pairs);
  EXPECT_LT(rotation_angle_between(rec.rotation, t.rotation), 0.5 * M_PI / 180.0);
  EXPECT_LT(std::abs(rec.scale - t.scale) / t.scale, 0.01);
}

TEST(Umeyama, CollinearThrows) {
  std::vector<Corr3D> pairs;
  for (int i = 0; i < 10; ++i) {
    Corr3D c;
    c.p_gen = Vec3(i, 2.0 * i, -i);
    c.p_par = c.p_gen;
    pairs.push_back(c);
  }
  EXPECT_THROW(umeyama(pairs), degenerate_geometry_error);
  EXPECT_THROW(umeyama(std::vector<Corr3D>(2)), invalid_argument_error);
}

TEST(RansacUmeyama, AllInliersMatchesPlainUmeyama) {
  std::mt19937_64 rng(4);
  const auto src = random_points(rng, 60);
  SimilarityTransform t;
  t.rotation = random_rotation(rng);
  t.scale = 0.7;
  t.translation = Vec3(2, 0, 1);
  const auto pairs = make_pairs(src, t);
  const double dim = Aabb::of_points(src).mean_dimension();

  const auto res = ransac_umeyama(pairs, RansacConfig{}, dim, 5);
  ASSERT_TRUE(res.has_value());
  EXPECT_EQ(res->inlier_count, 60);
  const auto plain = umeyama(pairs);
  EXPECT_LT(rotation_angle_between(res->transform.rotation, plain.rotation), 1e-9);
  EXPECT_NEAR(res->transform.scale, plain.scale, 1e-9);
}

TEST(RansacUmeyama, PlantedOutliersAreExcluded) {
  std::mt19937_64 rng(5);
  const auto src = random_points(rng, 100);
  SimilarityTransform t;
  t.rotation = random_rotation(rng);
  t.scale = 1.2;
  t.translation = Vec3(0.5, 1.5, -0.4);
  auto pairs = make_pairs(src, t);
  const double dim = Aabb::of_points(src).mean_dimension();
  const double thr = RansacConfig{}.inlier_dist_factor * dim;

  std::vector<char> truth(100, 1);
  std::uniform_real_distribution<double> dir(-1, 1);
  for (int k = 0; k < 30; ++k) {
    truth[k] = 0;
    Vec3 offset(dir(rng), dir(rng), dir(rng));
    pairs[k].p_par += offset.normalized() * thr * (5.0 + k);
  }

  const auto res = ransac_umeyama(pairs, RansacConfig{}, dim, 42);
  ASSERT_TRUE(res.has_value());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(res->inliers[i], truth[i]) << "pair " << i;
  for (const auto& c : make_pairs(src, t))
    EXPECT_LT((res->transform.apply(c.p_gen) - c.p_par).norm(), 1e-6);

  // Identical seed and inputs reproduce the identical mask.
  const auto res2 = ransac_umeyama(pairs, RansacConfig{}, dim, 42);
  ASSERT_TRUE(res2.has_value());
  EXPECT_EQ(res->inliers, res2->inliers);
}

TEST(RansacUmeyama, AllOutliersFail) {
  std::mt19937_64 rng(6);
  std::vector<Corr3D> pairs(50);
  std::uniform_real_distribution<double> uni(-10, 10);
  for (auto& c : pairs) {
    c.p_gen = Vec3(uni(rng), uni(rng), uni(rng));
    c.p_par = Vec3(uni(rng), uni(rng), uni(rng));
  }
  const auto res = ransac_umeyama(pairs, RansacConfig{}, 1.0, 7);
  EXPECT_FALSE(res.has_value());
}

TEST(DispersedRotations, FirstAndSecondPick) {
  const auto one = sample_dispersed_rotations(100, 1, 11);
  ASSERT_EQ(one.size(), 1u);

  // Reconstruct the candidate stream and check the greedy second pick.
  std::mt19937_64 rng(11);
  std::vector<Quat> cand(100);
  for (auto& q : cand) q = random_unit_quaternion(rng);
  EXPECT_LT(rotation_angle_between(one[0], cand[0].toRotationMatrix()), 1e-12);

  const auto two = sample_dispersed_rotations(100, 2, 11);
  ASSERT_EQ(two.size(), 2u);
  int best = 0;
  double best_angle = -1;
  for (int i = 0; i < 100; ++i) {
    const double a =
        2.0 * std::acos(std::min(1.0, std::abs(cand[i].coeffs().dot(cand[0].coeffs()))));
    if (a > best_angle) best_angle = a, best = i;
  }
  EXPECT_LT(rotation_angle_between(two[1], cand[best].toRotationMatrix()), 1e-12);
}

TEST(DispersedRotations, MinPairwiseAngleRegression) {
  const auto rots = sample_dispersed_rotations(128 * 128, 128, 3);
  double min_angle = M_PI;
  for (std::size_t i = 0; i < rots.size(); ++i)
    for (std::size_t j = i + 1; j < rots.size(); ++j)
      min_angle = std::min(min_angle, rotation_angle_between(rots[i], rots[j]));
  EXPECT_GT(min_angle, 20.0 * M_PI / 180.0);
}

TEST(Icp, IdentityFixedPoint) {
  std::mt19937_64 rng(7);
  const auto pts = random_points(rng, 200);
  const auto res = icp(pts, pts, Mat3::Identity(), IcpConfig{});
  EXPECT_DOUBLE_EQ(res.fitness, 1.0);
  EXPECT_LT(res.rmse, 1e-9);
  EXPECT_LT(rotation_angle(res.transform.rotation), 1e-9);
}

TEST(Icp, SmallRotationRecovered) {
  std::mt19937_64 rng(8);
  const auto src = random_points(rng, 300);
  const Mat3 r_true = random_rotation_with_angle(rng, 5.0 * M_PI / 180.0);
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(r_true * p);
  const auto res = icp(src, dst, Mat3::Identity(), IcpConfig{});
  EXPECT_LT(rotation_angle_between(res.transform.rotation, r_true), 0.1 * M_PI / 180.0);
  EXPECT_GT(res.fitness, 0.99);
}

TEST(Icp, GateTooSmallReturnsZeroFitness) {
  std::mt19937_64 rng(9);
  const auto src = random_points(rng, 50);
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.push_back(p + Vec3(100, 100, 100));
  IcpConfig cfg;
  cfg.max_corr_dist_factor = 1e-6;
  const auto res = icp(src, dst, Mat3::Identity(), cfg);
  EXPECT_EQ(res.fitness, 0.0);
}

namespace {

// Ball-supported cloud with two off-center clumps: the spherical support
// keeps the bounding box stable under rotation while the clumps make the
// orientation observable for ICP.
SplatCloud structured_blob(std::mt19937_64& rng, int n_shell = 500, int n_clump = 250) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  SplatCloud cloud;
  cloud.sh_degree = 0;
  auto push = [&](const Vec3& mean) {
    GaussianPrimitive p;
    p.mean = mean;
    p.sh.resize(3, 1);
    p.sh.setZero();
    cloud.primitives.push_back(p);
  };
  for (int i = 0; i < n_shell; ++i) {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    d.normalize();
    push(d * std::cbrt(ur(rng)));
  }
  const Vec3 centers[2] = {Vec3(0.45, 0, 0), Vec3(0, -0.4, 0.3)};
  for (const auto& c : centers)
    for (int i = 0; i < n_clump; ++i)
      push(c + 0.12 * Vec3(gauss(rng), gauss(rng), gauss(rng)));
  return cloud;
}

}  // namespace

TEST(CoarseAlign, IdentityClouds) {
  std::mt19937_64 rng(10);
  const SplatCloud cloud = structured_blob(rng);
  const auto t = coarse_align(cloud, cloud, IcpConfig{}, 1);
  EXPECT_NEAR(t.scale, 1.0, 1e-9);
  EXPECT_LT(rotation_angle(t.rotation), 1e-6);
  EXPECT_LT(t.translation.norm(), 1e-6);
}

TEST(CoarseAlign, UniformScaleFromBboxVolumes) {
  std::mt19937_64 rng(11);
  SplatCloud par = random_cloud(rng, 300, 0);
  SplatCloud gen = apply_scale(par, Vec3::Constant(0.5));
  IcpConfig cfg;
  cfg.n_candidate_rotations = 512;
  cfg.n_start_rotations = 8;
  const auto t = coarse_align(gen, par, cfg, 2);
  EXPECT_NEAR(t.scale, 2.0, 1e-6);
}

TEST(CoarseAlign, DegradedRotatedScaledCopy) {
  std::mt19937_64 rng(12);
  const SplatCloud par = structured_blob(rng);

  SimilarityTransform plant;
  plant.rotation = random_rotation_with_angle(rng, 40.0 * M_PI / 180.0);
  plant.scale = 1.3;
  plant.translation = Vec3(0.7, -0.4, 1.1);

  // The proxy sees a transformed copy with 40% of the partial side removed.
  SplatCloud gen;
  gen.sh_degree = 0;
  std::uniform_real_distribution<double> drop(0, 1);
  for (const auto& p : par.primitives) {
    if (drop(rng) < 0.4) continue;
    GaussianPrimitive q = p;
    q.mean = plant.inverse().apply(p.mean);
    gen.primitives.push_back(q);
  }

  const auto rec = coarse_align(gen, par, IcpConfig{}, 3);
  EXPECT_LT(rotation_angle_between(rec.rotation, plant.rotation), 5.0 * M_PI / 180.0);
  EXPECT_LT(std::abs(rec.scale - plant.scale) / plant.scale, 0.05);
}

TEST(CoarseAlign, DegenerateBoxThrows) {
  SplatCloud flat;
  flat.sh_degree = 0;
  for (int i = 0; i < 10; ++i) {
    GaussianPrimitive p;
    p.mean = Vec3(i, i * 0.5, 0.0);
    p.sh.resize(3, 1);
    p.sh.setZero();
    flat.primitives.push_back(p);
  }
  EXPECT_THROW(coarse_align(flat, flat, IcpConfig{}, 0), degenerate_geometry_error);
}
