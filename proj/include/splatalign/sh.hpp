// Real spherical harmonics up to degree 3: basis evaluation in the
// common splatting coefficient convention, and band-wise rotation.

#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>

#include "splatalign/types.hpp"

namespace splatalign {

namespace sh_detail {

// Band constants of the splatting SH basis (degree 0..3).
inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792,
                                  0.31539156525252005, -1.0925484305920792,
                                  0.5462742152960396};
inline constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,
                                  -0.4570457994644658, 0.3731763325901154,
                                  -0.4570457994644658, 1.445305721320277,
                                  -0.5900435899266435};

}  // namespace sh_detail

/// Evaluates the (degree+1)^2 basis functions at unit direction `d`,
/// ordered band-major with m = -l..l inside each band.  A channel color
/// is then sh_coeffs dot basis.
inline Eigen::VectorXd eval_sh_basis(int degree, const Vec3& d) {
  using namespace sh_detail;
  if (degree < 0 || degree > 3)
    throw invalid_argument_error("eval_sh_basis: degree must be in [0,3]");
  Eigen::VectorXd b(sh_coeff_count(degree));
  b(0) = kC0;
  if (degree < 1) return b;
  const double x = d.x(), y = d.y(), z = d.z();
  b(1) = -kC1 * y;
  b(2) = kC1 * z;
  b(3) = -kC1 * x;
  if (degree < 2) return b;
  const double xx = x * x, yy = y * y, zz = z * z;
  b(4) = kC2[0] * x * y;
  b(5) = kC2[1] * y * z;
  b(6) = kC2[2] * (2.0 * zz - xx - yy);
  b(7) = kC2[3] * x * z;
  b(8) = kC2[4] * (xx - yy);
  if (degree < 3) return b;
  b(9) = kC3[0] * y * (3.0 * xx - yy);
  b(10) = kC3[1] * x * y * z;
  b(11) = kC3[2] * y * (4.0 * zz - xx - yy);
  b(12) = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  b(13) = kC3[4] * x * (4.0 * zz - xx - yy);
  b(14) = kC3[5] * z * (xx - yy);
  b(15) = kC3[6] * x * (xx - 3.0 * yy);
  return b;
}

namespace sh_detail {

// Recurrence of Ivanic & Ruesterholz on real spherical harmonics.  Band
// matrices are built in the unsigned real basis ordered m = -l..l; the
// splatting basis differs from it by a factor (-1)^m per function, which
// is applied as a sign conjugation at the end.

inline double kron(int a, int b) { return a == b ? 1.0 : 0.0; }

// Access helper, row/col indexed by m in [-l, l].
class BandMat {
 public:
  explicit BandMat(int l) : l_(l), m_(Eigen::MatrixXd::Zero(2 * l + 1, 2 * l + 1)) {}
  double& at(int m, int n) { return m_(m + l_, n + l_); }
  double at(int m, int n) const { return m_(m + l_, n + l_); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  int l_;
  Eigen::MatrixXd m_;
};

inline double P(int i, int a, int b, int l, const BandMat& m1, const BandMat& prev) {
  if (b == l)
    return m1.at(i, 1) * prev.at(a, l - 1) - m1.at(i, -1) * prev.at(a, -l + 1);
  if (b == -l)
    return m1.at(i, 1) * prev.at(a, -l + 1) + m1.at(i, -1) * prev.at(a, l - 1);
  return m1.at(i, 0) * prev.at(a, b);
}

inline double U(int m, int n, int l, const BandMat& m1, const BandMat& prev) {
  return P(0, m, n, l, m1, prev);
}

inline double V(int m, int n, int l, const BandMat& m1, const BandMat& prev) {
  if (m == 0) return P(1, 1, n, l, m1, prev) + P(-1, -1, n, l, m1, prev);
  if (m > 0)
    return P(1, m - 1, n, l, m1, prev) * std::sqrt(1.0 + kron(m, 1)) -
           P(-1, -m + 1, n, l, m1, prev) * (1.0 - kron(m, 1));
  return P(1, m + 1, n, l, m1, prev) * (1.0 - kron(m, -1)) +
         P(-1, -m - 1, n, l, m1, prev) * std::sqrt(1.0 + kron(m, -1));
}

inline double W(int m, int n, int l, const BandMat& m1, const BandMat& prev) {
  if (m > 0) return P(1, m + 1, n, l, m1, prev) + P(-1, -m - 1, n, l, m1, prev);
  return P(1, m - 1, n, l, m1, prev) - P(-1, -m + 1, n, l, m1, prev);
}

inline BandMat next_band(int l, const BandMat& m1, const BandMat& prev) {
  BandMat out(l);
  for (int m = -l; m <= l; ++m) {
    for (int n = -l; n <= l; ++n) {
      const double denom =
          (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1.0) : double(l + n) * double(l - n);
      const double d0 = kron(m, 0);
      const double u = std::sqrt(double(l + m) * double(l - m) / denom);
      const double v = 0.5 *
                       std::sqrt((1.0 + d0) * (l + std::abs(m) - 1.0) * (l + std::abs(m)) /
                                 denom) *
                       (1.0 - 2.0 * d0);
      const double w =
          -0.5 * std::sqrt((l - std::abs(m) - 1.0) * (l - std::abs(m)) / denom) * (1.0 - d0);
      double val = 0.0;
      if (u != 0.0) val += u * U(m, n, l, m1, prev);
      if (v != 0.0) val += v * V(m, n, l, m1, prev);
      if (w != 0.0) val += w * W(m, n, l, m1, prev);
      out.at(m, n) = val;
    }
  }
  return out;
}

}  // namespace sh_detail

/// Per-band coefficient rotation matrices for `R`, in the splatting basis.
/// Applying matrices[l] to a band-l coefficient block `c` yields `c'` with
/// eval(c', d) = eval(c, R^T d) for every unit direction d.
inline std::array<Eigen::MatrixXd, 4> sh_rotation_matrices(const Mat3& R, int degree) {
  using namespace sh_detail;
  if (degree < 0 || degree > 3)
    throw invalid_argument_error("sh_rotation_matrices: degree must be in [0,3]");
  if (!is_rotation_matrix(R))
    throw invalid_argument_error("sh_rotation_matrices: R not in SO(3)");

  std::array<Eigen::MatrixXd, 4> out;
  out[0] = Eigen::MatrixXd::Ones(1, 1);
  if (degree < 1) return out;

  // Band 1 in the unsigned basis (y, z, x) follows directly from R.
  BandMat m1(1);
  m1.at(-1, -1) = R(1, 1);
  m1.at(-1, 0) = R(1, 2);
  m1.at(-1, 1) = R(1, 0);
  m1.at(0, -1) = R(2, 1);
  m1.at(0, 0) = R(2, 2);
  m1.at(0, 1) = R(2, 0);
  m1.at(1, -1) = R(0, 1);
  m1.at(1, 0) = R(0, 2);
  m1.at(1, 1) = R(0, 0);

  std::vector<BandMat> bands;
  bands.push_back(m1);
  for (int l = 2; l <= degree; ++l) bands.push_back(next_band(l, m1, bands.back()));

  for (int l = 1; l <= degree; ++l) {
    Eigen::MatrixXd d = bands[l - 1].matrix();
    // Conjugate into the splatting basis: entry (m, n) picks up (-1)^(m+n).
    for (int mi = 0; mi < d.rows(); ++mi)
      for (int ni = 0; ni < d.cols(); ++ni)
        if (((mi - l) + (ni - l)) & 1) d(mi, ni) = -d(mi, ni);
    out[l] = std::move(d);
  }
  return out;
}

/// Rotates a 3 x (degree+1)^2 coefficient matrix band by band.
inline Eigen::Matrix<double, 3, Eigen::Dynamic> sh_rotate(
    const Eigen::Matrix<double, 3, Eigen::Dynamic>& sh, const Mat3& R, int degree) {
  if (sh.cols() != sh_coeff_count(degree))
    throw invalid_argument_error("sh_rotate: coefficient count does not match degree");
  const auto mats = sh_rotation_matrices(R, degree);
  Eigen::Matrix<double, 3, Eigen::Dynamic> out = sh;
  for (int l = 1; l <= degree; ++l) {
    const int offset = l * l;
    const int width = 2 * l + 1;
    out.middleCols(offset, width) = sh.middleCols(offset, width) * mats[l].transpose();
  }
  return out;
}

/// Evaluates a 3-channel SH color (without any offset or clamping).
inline Vec3 eval_sh(const Eigen::Matrix<double, 3, Eigen::Dynamic>& sh, int degree,
                    const Vec3& dir) {
  return sh * eval_sh_basis(degree, dir);
}

}  // namespace splatalign
