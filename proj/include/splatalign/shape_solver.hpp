// Anisotropic shape alignment.
//
// Two solvers over paired points: a closed-form-style SVD baseline for
//   argmin sum || R diag(S) p_gen + t - p_par ||^2
// (alternating orthogonal-Procrustes and per-axis scale steps; it reports
// failure instead of returning invalid scales), and the regularized
// solver for
//   argmin sum || R R'^T diag(S) R' p_gen + t - p_par ||^2
//            + lambda_R * angle(R)^2 + lambda_S * || S - tr(S)/3 I ||_F^2
// with S bounded through a sigmoid and all parameters optimized by Adam.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "splatalign/autodiff.hpp"
#include "splatalign/math_util.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct ShapeSolverConfig {
  double s_min = 0.75;
  double s_max = 1.5;
  double lambda_R = 1e-4;
  double lambda_S = 2e-5;
  int iterations = 3000;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AnisotropicSvdResult {
  Mat3 rotation;
  Vec3 translation;
  Vec3 scale;
};

/// SVD baseline for the unregularized anisotropic fit.  Returns nothing
/// when the solve goes unstable (non-finite or non-positive scales) -- the
/// failure mode the regularized solver is designed to remove.
inline std::optional<AnisotropicSvdResult> anisotropic_svd(
    const std::vector<Corr3D>& pairs) {
  const int n = static_cast<int>(pairs.size());
  if (n < 4) throw invalid_argument_error("anisotropic_svd: need at least 4 pairs");

  Vec3 mx = Vec3::Zero(), my = Vec3::Zero();
  for (const auto& c : pairs) {
    mx += c.p_gen;
    my += c.p_par;
  }
  mx /= n;
  my /= n;

  Mat3 M = Mat3::Zero();  // sum of centered (target x source^T)
  Vec3 q = Vec3::Zero();  // per-axis source second moments
  for (const auto& c : pairs) {
    const Vec3 dx = c.p_gen - mx;
    const Vec3 dy = c.p_par - my;
    M += dy * dx.transpose();
    q += dx.cwiseProduct(dx);
  }

  auto polar_rotation = [](const Mat3& A) {
    Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 S = Mat3::Identity();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1;
    return Mat3(svd.matrixU() * S * svd.matrixV().transpose());
  };
  auto objective = [&](const Mat3& R, const Vec3& s) {
    double f = 0;
    for (const auto& c : pairs)
      f += (R * (c.p_gen - mx).cwiseProduct(s) - (c.p_par - my)).squaredNorm();
    return f;
  };

  // The unregularized model carries a sign gauge: R diag(S) equals
  // (R D) (D S) for any two-axis sign flip D (det +1).  A converged pair
  // with an even number of negative scales is rewritten into its valid
  // representative; an odd count has no det(+1) fix and stays invalid.
  auto canonicalize = [](Mat3& R, Vec3& s) {
    int negatives = 0;
    for (int k = 0; k < 3; ++k) negatives += s[k] < 0 ? 1 : 0;
    if (negatives != 2) return;
    Vec3 flip = Vec3::Ones();
    for (int k = 0; k < 3; ++k)
      if (s[k] < 0) flip[k] = -1;
    R = R * flip.asDiagonal();
    s = s.cwiseProduct(flip);
  };

  Mat3 best_R = Mat3::Identity();
  Vec3 best_s = Vec3::Ones();
  double best_f = std::numeric_limits<double>::infinity();
  bool have_valid = false;
  for (const Mat3 init : {polar_rotation(M), Mat3(Mat3::Identity())}) {
    Mat3 R = init;
    Vec3 s = Vec3::Ones();
    for (int iter = 0; iter < 200; ++iter) {
      // Optimal per-axis scale for fixed R, then optimal R for fixed S.
      const Mat3 MtR = M.transpose() * R;
      Vec3 s_new;
      for (int k = 0; k < 3; ++k) s_new[k] = MtR(k, k) / q[k];
      const Mat3 R_new = polar_rotation(M * s_new.asDiagonal());
      const double delta =
          (s_new - s).cwiseAbs().maxCoeff() + rotation_angle_between(R, R_new);
      R = R_new;
      s = s_new;
      if (!s.allFinite() || !R.allFinite()) break;
      if (delta < 1e-15) break;
    }
    if (!s.allFinite() || !R.allFinite()) continue;
    canonicalize(R, s);
    if ((s.array() <= 0.0).any()) continue;
    const double f = objective(R, s);
    if (std::isfinite(f) && f < best_f) {
      best_f = f;
      best_R = R;
      best_s = s;
      have_valid = true;
    }
  }

  if (!have_valid) return std::nullopt;
  AnisotropicSvdResult out;
  out.rotation = best_R;
  out.scale = best_s;
  out.translation = my - best_R * best_s.cwiseProduct(mx);
  if (!out.translation.allFinite()) return std::nullopt;
  return out;
}

namespace shape_detail {

constexpr int kParams = 12;  // [axis-angle R | axis-angle R' | raw scales | t]

template <class T>
using TMat3 = std::array<std::array<T, 3>, 3>;

template <class T>
inline TMat3<T> expmap_t(const T& wx, const T& wy, const T& wz) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T theta2 = wx * wx + wy * wy + wz * wz;
  T a, b;  // sin(t)/t and (1 - cos(t))/t^2, smooth in theta^2
  if (value_of(theta2) < 1e-12) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const T theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (1.0 - cos(theta)) / theta2;
  }
  // I + a K + b K^2 with K = skew(w).
  TMat3<T> m;
  m[0][0] = 1.0 - b * (wy * wy + wz * wz);
  m[0][1] = b * wx * wy - a * wz;
  m[0][2] = b * wx * wz + a * wy;
  m[1][0] = b * wx * wy + a * wz;
  m[1][1] = 1.0 - b * (wx * wx + wz * wz);
  m[1][2] = b * wy * wz - a * wx;
  m[2][0] = b * wx * wz - a * wy;
  m[2][1] = b * wy * wz + a * wx;
  m[2][2] = 1.0 - b * (wx * wx + wy * wy);
  return m;
}

// Squared rotation angle from the trace, stable around the identity where
// acos is not differentiable.
template <class T>
inline T squared_angle_from_trace(const T& trace) {
  using std::acos;
  const T c = (trace - 1.0) * 0.5;
  const T e = 1.0 - c;
  if (value_of(e) < 1e-4)
    return 2.0 * e + e * e / 3.0 + e * e * e * (4.0 / 45.0);
  const T cc = value_of(c) < -0.999999 ? T(-0.999999) : c;
  const T ang = acos(cc);
  return ang * ang;
}

template <class T>
inline T shape_objective_t(const std::array<T, kParams>& w,
                           const std::vector<Corr3D>& pairs,
                           const ShapeSolverConfig& cfg) {
  using std::exp;
  const TMat3<T> R = expmap_t(w[0], w[1], w[2]);
  const TMat3<T> F = expmap_t(w[3], w[4], w[5]);
  std::array<T, 3> s;
  for (int k = 0; k < 3; ++k)
    s[k] = cfg.s_min + (cfg.s_max - cfg.s_min) / (1.0 + exp(-w[6 + k]));

  // Linear part A = R F^T diag(s) F.
  TMat3<T> SF;  // diag(s) * F
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) SF[i][j] = s[i] * F[i][j];
  TMat3<T> FtSF;  // F^T * SF
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      FtSF[i][j] = F[0][i] * SF[0][j] + F[1][i] * SF[1][j] + F[2][i] * SF[2][j];
  TMat3<T> A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      A[i][j] = R[i][0] * FtSF[0][j] + R[i][1] * FtSF[1][j] + R[i][2] * FtSF[2][j];

  T loss = 0.0;
  for (const auto& c : pairs) {
    for (int i = 0; i < 3; ++i) {
      const T r = A[i][0] * c.p_gen.x() + A[i][1] * c.p_gen.y() + A[i][2] * c.p_gen.z() +
                  w[9 + i] - c.p_par[i];
      loss += r * r;
    }
  }

  const T trace_R = R[0][0] + R[1][1] + R[2][2];
  loss += cfg.lambda_R * squared_angle_from_trace(trace_R);

  const T s_mean = (s[0] + s[1] + s[2]) / 3.0;
  T reg_s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const T d = s[k] - s_mean;
    reg_s += d * d;
  }
  loss += cfg.lambda_S * reg_s;
  return loss;
}

}  // namespace shape_detail

/// Objective value of the regularized anisotropic fit at raw parameters
/// [axis-angle R | axis-angle R' | raw sigmoid scales | t].
inline double shape_objective(const Eigen::VectorXd& params,
                              const std::vector<Corr3D>& pairs,
                              const ShapeSolverConfig& cfg) {
  std::array<double, shape_detail::kParams> w;
  for (int i = 0; i < shape_detail::kParams; ++i) w[i] = params(i);
  return shape_detail::shape_objective_t(w, pairs, cfg);
}

/// Objective and its exact gradient (forward-mode duals).
inline std::pair<double, Eigen::VectorXd> shape_objective_with_gradient(
    const Eigen::VectorXd& params, const std::vector<Corr3D>& pairs,
    const ShapeSolverConfig& cfg) {
  using D = Dual<shape_detail::kParams>;
  std::array<D, shape_detail::kParams> w;
  for (int i = 0; i < shape_detail::kParams; ++i) w[i] = D::variable(params(i), i);
  const D loss = shape_detail::shape_objective_t(w, pairs, cfg);
  return {loss.v, loss.d};
}

/// Decodes raw parameters into the transform they represent.
inline AnisotropicTransform shape_params_to_transform(const Eigen::VectorXd& params,
                                                      const ShapeSolverConfig& cfg) {
  AnisotropicTransform t;
  t.rotation = expmap(params.segment<3>(0));
  t.frame = expmap(params.segment<3>(3));
  for (int k = 0; k < 3; ++k)
    t.scale[k] = cfg.s_min + (cfg.s_max - cfg.s_min) * sigmoid(params(6 + k));
  t.translation = params.segment<3>(9);
  return t;
}

struct ShapeSolveResult {
  AnisotropicTransform transform;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

/// Raw sigmoid parameter whose mapped scale equals 1 (the identity).
inline double identity_scale_raw(const ShapeSolverConfig& cfg) {
  const double q = (1.0 - cfg.s_min) / (cfg.s_max - cfg.s_min);
  return std::log(q / (1.0 - q));
}

/// Gradient-based minimization of the regularized objective, initialized
/// at the identity transform (zero rotations and translation, unit scale).
inline ShapeSolveResult anisotropic_regularized(const std::vector<Corr3D>& pairs,
                                                const ShapeSolverConfig& cfg) {
  if (pairs.size() < 4)
    throw invalid_argument_error("anisotropic_regularized: need at least 4 pairs");
  if (!(cfg.s_min < 1.0 && 1.0 < cfg.s_max))
    throw invalid_argument_error("anisotropic_regularized: scale bounds must bracket 1");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape_detail::kParams);
  x(6) = x(7) = x(8) = identity_scale_raw(cfg);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(shape_detail::kParams);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(shape_detail::kParams);

  // The returned parameters are the best iterate visited, which includes
  // the identity start; a solve therefore never leaves the objective worse
  // than it found it.
  ShapeSolveResult out;
  Eigen::VectorXd best_x = x;
  double best_value = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const auto [value, grad] = shape_objective_with_gradient(x, pairs, cfg);
    if (!std::isfinite(value) || !grad.allFinite())
      throw std::runtime_error("anisotropic_regularized: non-finite loss at iteration " +
                               std::to_string(iter));
    if (iter == 1) out.initial_objective = value;
    if (value < best_value) {
      best_value = value;
      best_x = x;
    }

    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bias1 = 1.0 - std::pow(cfg.beta1, iter);
    const double bias2 = 1.0 - std::pow(cfg.beta2, iter);
    for (int i = 0; i < x.size(); ++i)
      x(i) -= cfg.learning_rate * (m(i) / bias1) /
              (std::sqrt(v(i) / bias2) + cfg.epsilon);
  }
  const double last_value = shape_objective(x, pairs, cfg);
  if (last_value < best_value) {
    best_value = last_value;
    best_x = x;
  }
  out.final_objective = best_value;
  out.transform = shape_params_to_transform(best_x, cfg);
  return out;
}

}  // namespace splatalign
