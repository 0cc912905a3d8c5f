#include <gtest/gtest.h>

#include <random>

#include "splatalign/math_util.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/shape_solver.hpp"
#include "support/test_helpers.hpp"

using namespace splatalign;
using test_support::finite_difference_gradient;
using test_support::random_cloud;
using test_support::random_points;

namespace {

std::vector<Corr3D> anisotropic_pairs(const std::vector<Vec3>& src, const Mat3& R,
                                      const Vec3& S, const Vec3& t) {
  std::vector<Corr3D> pairs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs[i].p_gen = src[i];
    pairs[i].p_par = R * src[i].cwiseProduct(S) + t;
  }
  return pairs;
}

}  // namespace

TEST(AnisotropicSvd, ExactRecovery) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto src = random_points(rng, 60);
    const Mat3 r = random_rotation(rng);
    const Vec3 s(1.2, 0.9, 1.1);
    const Vec3 t(0.4, -0.6, 0.9);
    const auto res = anisotropic_svd(anisotropic_pairs(src, r, s, t));
    ASSERT_TRUE(res.has_value());
    EXPECT_LT(rotation_angle_between(res->rotation, r), 1e-8);
    EXPECT_LT((res->scale - s).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((res->translation - t).norm(), 1e-8);
  }
}

TEST(AnisotropicSvd, IdentityData) {
  std::mt19937_64 rng(2);
  const auto src = random_points(rng, 40);
  const auto res = anisotropic_svd(anisotropic_pairs(src, Mat3::Identity(),
                                                     Vec3::Ones(), Vec3::Zero()));
  ASSERT_TRUE(res.has_value());
  EXPECT_LT(rotation_angle(res->rotation), 1e-9);
  EXPECT_LT((res->scale - Vec3::Ones()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(res->translation.norm(), 1e-9);

  EXPECT_THROW(anisotropic_svd(std::vector<Corr3D>(3)), invalid_argument_error);
}

TEST(AnisotropicSvd, NearPlanarOutlierStressSometimesFails) {
  // Thin source extent plus gross outliers destabilizes the per-axis scale
  // estimate; record that at least some seeded runs go invalid or leave a
  // sane scale range.  This is the instability the regularized solver
  // removes.
  int bad_runs = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uxy(-1, 1), uz(-1e-4, 1e-4), uo(-3, 3);
    std::vector<Corr3D> pairs(50);
    const Mat3 r = random_rotation(rng);
    for (auto& c : pairs) {
      c.p_gen = Vec3(uxy(rng), uxy(rng), uz(rng));
      c.p_par = r * c.p_gen.cwiseProduct(Vec3(1.1, 0.95, 1.0));
    }
    for (int k = 0; k < 10; ++k) pairs[k].p_par = Vec3(uo(rng), uo(rng), uo(rng));
    const auto res = anisotropic_svd(pairs);
    if (!res || (res->scale.array() < 0.5).any() || (res->scale.array() > 2.0).any())
      ++bad_runs;
  }
  EXPECT_GE(bad_runs, 1);
}

TEST(AnisotropicRegularized, SigmoidBound) {
  const ShapeSolverConfig cfg;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(12);
  const auto t0 = shape_params_to_transform(params, cfg);
  EXPECT_LT((t0.scale - Vec3::Constant(1.125)).cwiseAbs().maxCoeff(), 1e-12);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-30, 30);
  for (int k = 0; k < 100; ++k) {
    params(6) = uni(rng);
    params(7) = uni(rng);
    params(8) = uni(rng);
    const auto t = shape_params_to_transform(params, cfg);
    EXPECT_TRUE((t.scale.array() > cfg.s_min).all());
    EXPECT_TRUE((t.scale.array() < cfg.s_max).all());
  }

  // Extreme raw values saturate to the closed interval in floating point.
  params(6) = params(7) = params(8) = 1e3;
  const auto hi = shape_params_to_transform(params, cfg);
  EXPECT_TRUE((hi.scale.array() <= cfg.s_max).all());
  params(6) = params(7) = params(8) = -1e3;
  const auto lo = shape_params_to_transform(params, cfg);
  EXPECT_TRUE((lo.scale.array() >= cfg.s_min).all());
}

TEST(AnisotropicRegularized, RegularizerZerosAndNonnegativity) {
  std::mt19937_64 rng(4);
  const auto src = random_points(rng, 20);
  const auto pairs =
      anisotropic_pairs(src, Mat3::Identity(), Vec3::Ones(), Vec3::Zero());
  ShapeSolverConfig cfg;

  // Raw scale ln(1/2) maps to s = 1 exactly; identity data then has zero
  // data term, zero rotation penalty and zero scale-variance penalty.
  Eigen::VectorXd params = Eigen::VectorXd::Zero(12);
  const double raw_one = std::log(0.5);  // sigmoid -> 1/3 -> s = 1
  params(6) = params(7) = params(8) = raw_one;
  EXPECT_NEAR(shape_objective(params, pairs, cfg), 0.0, 1e-20);

  // Equal scales keep the variance penalty at zero for any common value.
  ShapeSolverConfig data_free = cfg;
  data_free.lambda_R = 0;
  std::vector<Corr3D> one_exact(4);
  for (int i = 0; i < 4; ++i) one_exact[i].p_gen = one_exact[i].p_par = Vec3::Zero();
  for (double raw : {-2.0, 0.0, 1.5}) {
    params.setZero();
    params(6) = params(7) = params(8) = raw;
    EXPECT_NEAR(shape_objective(params, one_exact, data_free), 0.0, 1e-20);
  }

  std::uniform_real_distribution<double> uni(-1, 1);
  for (int k = 0; k < 50; ++k) {
    for (int i = 0; i < 12; ++i) params(i) = uni(rng);
    EXPECT_GE(shape_objective(params, pairs, cfg), 0.0);
  }
}

TEST(AnisotropicRegularized, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  const ShapeSolverConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const auto src = random_points(rng, 25);
    const Mat3 r = random_rotation_with_angle(rng, 0.3);
    const auto pairs = anisotropic_pairs(src, r, Vec3(1.2, 0.9, 1.0), Vec3(0.2, 0, -0.1));
    Eigen::VectorXd params(12);
    for (int i = 0; i < 12; ++i) params(i) = uni(rng);

    const auto [value, grad] = shape_objective_with_gradient(params, pairs, cfg);
    const auto fd = finite_difference_gradient(
        [&](const Eigen::VectorXd& x) { return shape_objective(x, pairs, cfg); }, params);
    EXPECT_LT((grad - fd).norm() / std::max(fd.norm(), 1e-12), 1e-4)
        << "value " << value;
  }
}

TEST(AnisotropicRegularized, ExactAnisotropicRecovery) {
  std::mt19937_64 rng(6);
  const auto src = random_points(rng, 120);
  const Mat3 r = random_rotation_with_angle(rng, 8.0 * M_PI / 180.0);
  const Vec3 s(1.2, 0.95, 1.05);
  const Vec3 t(0.08, -0.05, 0.1);
  const auto pairs = anisotropic_pairs(src, r, s, t);

  const auto res = anisotropic_regularized(pairs, ShapeSolverConfig{});
  EXPECT_LT(res.final_objective, 1e-4);
  double max_err = 0;
  for (const auto& c : pairs)
    max_err = std::max(max_err, (res.transform.apply(c.p_gen) - c.p_par).norm());
  EXPECT_LT(max_err, 1e-3);
}

TEST(AnisotropicRegularized, EdgeScalesConvergeAcrossRepeatedSolves) {
  // Scales near the sigmoid bounds need more raw-parameter travel than a
  // single fixed-step budget covers; the iterative loop closes the gap by
  // re-solving from the updated state.
  std::mt19937_64 rng(16);
  const auto src = random_points(rng, 120);
  const Mat3 r = random_rotation_with_angle(rng, 8.0 * M_PI / 180.0);
  auto pairs = anisotropic_pairs(src, r, Vec3(0.8, 1.4, 1.0), Vec3(0.08, -0.05, 0.1));

  double max_err = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 3 && max_err > 1e-3; ++round) {
    const auto res = anisotropic_regularized(pairs, ShapeSolverConfig{});
    max_err = 0;
    for (auto& c : pairs) {
      c.p_gen = res.transform.apply(c.p_gen);
      max_err = std::max(max_err, (c.p_gen - c.p_par).norm());
    }
  }
  EXPECT_LT(max_err, 1e-3);
}

TEST(AnisotropicRegularized, IdentityFixedPoint) {
  std::mt19937_64 rng(7);
  const auto src = random_points(rng, 80);
  const auto pairs =
      anisotropic_pairs(src, Mat3::Identity(), Vec3::Ones(), Vec3::Zero());
  const auto res = anisotropic_regularized(pairs, ShapeSolverConfig{});
  EXPECT_LT((res.transform.scale - Vec3::Ones()).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(rotation_angle(res.transform.rotation), 0.1 * M_PI / 180.0);
}

TEST(AnisotropicRegularized, BoundedScalesOnStressInstances) {
  ShapeSolverConfig cfg;
  cfg.iterations = 600;  // stress check only cares about the bound
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uxy(-1, 1), uz(-1e-4, 1e-4), uo(-3, 3);
    std::vector<Corr3D> pairs(50);
    const Mat3 r = random_rotation(rng);
    for (auto& c : pairs) {
      c.p_gen = Vec3(uxy(rng), uxy(rng), uz(rng));
      c.p_par = r * c.p_gen.cwiseProduct(Vec3(1.1, 0.95, 1.0));
    }
    for (int k = 0; k < 10; ++k) pairs[k].p_par = Vec3(uo(rng), uo(rng), uo(rng));
    const auto res = anisotropic_regularized(pairs, cfg);
    EXPECT_TRUE((res.transform.scale.array() > cfg.s_min).all());
    EXPECT_TRUE((res.transform.scale.array() < cfg.s_max).all());
  }
}

TEST(IterativeAlign, ExactProviderIdentity) {
  std::mt19937_64 rng(8);
  const SplatCloud par = random_cloud(rng, 80, 0);
  AnisotropicTransform identity;
  GroundTruthProvider provider(par, identity, 64, 5);

  AlignLoopConfig cfg;
  cfg.seed = 5;
  const auto res = iterative_align(par, par, {}, {}, provider, cfg);
  ASSERT_EQ(res.reports.size(), 6u);
  for (const auto& r : res.reports) {
    EXPECT_FALSE(r.skipped);
    EXPECT_LT(r.residual, 1e-9);
  }
}

TEST(IterativeAlign, RecoversPlantedSevenDof) {
  std::mt19937_64 rng(9);
  SplatCloud gen = random_cloud(rng, 150, 0);
  AnisotropicTransform plant;
  plant.rotation = random_rotation_with_angle(rng, 12.0 * M_PI / 180.0);
  plant.scale = Vec3::Constant(1.15);
  plant.translation = Vec3(0.2, -0.1, 0.25);

  SplatCloud par = apply_anisotropic(gen, plant);
  GroundTruthProvider provider(gen, plant, 96, 11);

  AlignLoopConfig cfg;
  cfg.seed = 11;
  const auto res = iterative_align(gen, par, {}, {}, provider, cfg);
  const double bbox_dim = Aabb::of_points(par.means()).mean_dimension();
  EXPECT_LT(res.reports.back().residual, 1e-3 * bbox_dim);

  // Residuals never increase on a noiseless provider.
  for (std::size_t i = 1; i < res.reports.size(); ++i)
    EXPECT_LE(res.reports[i].residual, res.reports[i - 1].residual + 1e-9);
}

TEST(IterativeAlign, ShapeStageReducesAnisotropicResidual) {
  std::mt19937_64 rng(10);
  SplatCloud gen = random_cloud(rng, 150, 0);
  AnisotropicTransform plant;
  plant.rotation = random_rotation_with_angle(rng, 5.0 * M_PI / 180.0);
  plant.scale = Vec3(1.3, 0.9, 1.0);
  plant.translation = Vec3(0.1, 0.05, -0.1);

  SplatCloud par = apply_anisotropic(gen, plant);
  GroundTruthProvider provider(gen, plant, 96, 13);

  AlignLoopConfig cfg;
  cfg.seed = 13;
  const auto res = iterative_align(gen, par, {}, {}, provider, cfg);

  double pose_residual = 0, shape_residual = 0;
  for (const auto& r : res.reports) {
    if (r.iteration == 3) pose_residual = r.residual;    // last pose-only stage
    if (r.iteration == 5) shape_residual = r.residual;   // after shape stages
  }
  EXPECT_LT(shape_residual, pose_residual);
}

TEST(IterativeAlign, SkipsAndFailures) {
  std::mt19937_64 rng(11);
  const SplatCloud cloud = random_cloud(rng, 20, 0);

  class EmptyProvider final : public CorrespondenceProvider {
   public:
    std::vector<Corr3D> gather(const ProviderContext&) override { return {}; }
  };
  EmptyProvider empty;
  AlignLoopConfig cfg;
  EXPECT_THROW(iterative_align(cloud, cloud, {}, {}, empty, cfg), std::runtime_error);

  IterSchedule bad;
  bad.shape_iterations = {9};
  EXPECT_THROW(bad.validate(), invalid_argument_error);
}
