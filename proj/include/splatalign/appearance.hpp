// Pose-constrained appearance refinement: geometry stays frozen while the
// SH coefficients descend the blended L1 + D-SSIM loss over masked
// training views.  Blend weights are computed once up front; with fixed
// geometry the render is then linear in the SH coefficients per view (up
// to the color clamp) and the gradients are exact.

#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <vector>

#include "splatalign/render.hpp"
#include "splatalign/sh.hpp"
#include "splatalign/ssim.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct AppearanceConfig {
  double lambda = 0.2;  // D-SSIM weight in [0,1]
  int iterations = 600;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct LossTracePoint {
  int iteration = 0;
  double l1 = 0;
  double dssim = 0;
  double total = 0;
};

struct RefineResult {
  SplatCloud cloud;
  std::vector<LossTracePoint> trace;
};

/// The frozen-geometry appearance objective: loss and exact gradients as a
/// function of the flattened SH coefficient matrix (row per primitive,
/// channel-major columns).
class AppearanceProblem {
 public:
  AppearanceProblem(const SplatCloud& cloud, const std::vector<Camera>& cams,
                    const std::vector<ImageD>& targets, const std::vector<ImageU8>& masks,
                    const AppearanceConfig& cfg)
      : cfg_(cfg),
        ssim_cfg_{cfg.ssim_window, cfg.ssim_sigma, cfg.c1, cfg.c2},
        sh_degree_(cloud.sh_degree),
        n_splats_(static_cast<int>(cloud.size())),
        n_coeff_(sh_coeff_count(cloud.sh_degree)) {
    if (cams.size() != targets.size() || cams.size() != masks.size())
      throw invalid_argument_error("refine_sh: view list sizes differ");
    if (cams.empty()) throw invalid_argument_error("refine_sh: no views");
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
      throw invalid_argument_error("refine_sh: lambda outside [0,1]");
    if (cfg.ssim_window % 2 == 0)
      throw invalid_argument_error("refine_sh: ssim window must be odd");

    views_.resize(cams.size());
    std::size_t covered = 0;
    for (std::size_t v = 0; v < cams.size(); ++v) {
      auto& vd = views_[v];
      const Camera& cam = cams[v];
      if (targets[v].width != cam.width || targets[v].height != cam.height ||
          targets[v].channels != 3)
        throw invalid_argument_error("refine_sh: target size mismatch at view " +
                                     std::to_string(v));
      if (masks[v].width != cam.width || masks[v].height != cam.height)
        throw invalid_argument_error("refine_sh: mask size mismatch at view " +
                                     std::to_string(v));
      vd.cam = cam;
      vd.weights = render_weights(cloud, cam);
      vd.basis.resize(n_splats_);
      const Vec3 center = cam.center();
      for (int i = 0; i < n_splats_; ++i) {
        Vec3 dir = cloud.primitives[i].mean - center;
        const double n = dir.norm();
        dir = n > 1e-12 ? Vec3(dir / n) : Vec3(0, 0, 1);
        vd.basis[i] = eval_sh_basis(sh_degree_, dir);
      }
      vd.mask.resize(std::size_t(cam.width) * cam.height);
      vd.mask_count = 0;
      for (std::size_t p = 0; p < vd.mask.size(); ++p) {
        vd.mask[p] = masks[v].data[p] ? 1 : 0;
        if (vd.mask[p]) {
          ++vd.mask_count;
          if (!vd.weights.pixels[p].empty()) ++covered;
        }
      }
      if (vd.mask_count == 0) continue;
      vd.mask_weight = ImageD(cam.width, cam.height, 1);
      for (std::size_t p = 0; p < vd.mask.size(); ++p)
        vd.mask_weight.data[p] = vd.mask[p] ? 1.0 / (3.0 * double(vd.mask_count)) : 0.0;
      vd.target = targets[v];
      for (std::size_t p = 0; p < vd.mask.size(); ++p)
        if (!vd.mask[p])
          for (int c = 0; c < 3; ++c) vd.target.data[p * 3 + c] = 0.0;
    }
    if (covered == 0)
      throw std::runtime_error("refine_sh: no masked pixel is covered by any primitive");
  }

  int parameter_columns() const { return 3 * n_coeff_; }
  int n_splats() const { return n_splats_; }

  /// Initial coefficient matrix of a cloud.
  Eigen::MatrixXd flatten(const SplatCloud& cloud) const {
    Eigen::MatrixXd sh(n_splats_, 3 * n_coeff_);
    for (int i = 0; i < n_splats_; ++i)
      for (int ch = 0; ch < 3; ++ch)
        for (int c = 0; c < n_coeff_; ++c)
          sh(i, ch * n_coeff_ + c) = cloud.primitives[i].sh(ch, c);
    return sh;
  }

  void unflatten(const Eigen::MatrixXd& sh, SplatCloud& cloud) const {
    for (int i = 0; i < n_splats_; ++i)
      for (int ch = 0; ch < 3; ++ch)
        for (int c = 0; c < n_coeff_; ++c)
          cloud.primitives[i].sh(ch, c) = sh(i, ch * n_coeff_ + c);
  }

  LossTracePoint loss(const Eigen::MatrixXd& sh, Eigen::MatrixXd* grad_out = nullptr) const {
    if (grad_out) grad_out->setZero(n_splats_, 3 * n_coeff_);
    LossTracePoint out;
    const int n_views = static_cast<int>(views_.size());
    std::vector<Vec3> colors(n_splats_);
    std::vector<std::array<bool, 3>> gate(n_splats_);
    Eigen::MatrixXd color_grad(n_splats_, 3);

    for (const auto& vd : views_) {
      if (vd.mask_count == 0) continue;

      for (int i = 0; i < n_splats_; ++i)
        for (int ch = 0; ch < 3; ++ch) {
          const double raw =
              sh.row(i).segment(ch * n_coeff_, n_coeff_).dot(vd.basis[i]) + 0.5;
          colors[i][ch] = std::clamp(raw, 0.0, 1.0);
          gate[i][ch] = raw > 0.0 && raw < 1.0;
        }

      ImageD rendered(vd.cam.width, vd.cam.height, 3);
      for (std::size_t p = 0; p < vd.mask.size(); ++p) {
        if (!vd.mask[p]) continue;  // masked-out pixels contribute zero
        for (const auto& [idx, w] : vd.weights.pixels[p])
          for (int c = 0; c < 3; ++c) rendered.data[p * 3 + c] += w * colors[idx][c];
      }

      ImageD d_loss(vd.cam.width, vd.cam.height, 3);
      double l1 = 0;
      for (std::size_t p = 0; p < vd.mask.size(); ++p) {
        if (!vd.mask[p]) continue;
        for (int c = 0; c < 3; ++c) {
          const double diff = rendered.data[p * 3 + c] - vd.target.data[p * 3 + c];
          l1 += std::abs(diff);
          d_loss.data[p * 3 + c] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        }
      }
      const double inv_masked = 1.0 / (3.0 * double(vd.mask_count));
      l1 *= inv_masked;

      double dssim = 0;
      ImageD ssim_grad;
      if (cfg_.lambda > 0) {
        const auto sg =
            ssim_weighted_sum_gradient(rendered, vd.target, vd.mask_weight, ssim_cfg_);
        dssim = (1.0 - sg.weighted_sum) / 2.0;
        ssim_grad = sg.d_input;
      } else {
        ssim_grad = ImageD(vd.cam.width, vd.cam.height, 3);
      }

      out.l1 += l1 / double(n_views);
      out.dssim += dssim / double(n_views);

      if (!grad_out) continue;
      for (std::size_t i = 0; i < d_loss.data.size(); ++i)
        d_loss.data[i] = ((1.0 - cfg_.lambda) * d_loss.data[i] * inv_masked -
                          cfg_.lambda * 0.5 * ssim_grad.data[i]) /
                         double(n_views);

      color_grad.setZero();
      for (std::size_t p = 0; p < vd.mask.size(); ++p) {
        if (!vd.mask[p]) continue;
        for (const auto& [idx, w] : vd.weights.pixels[p])
          for (int c = 0; c < 3; ++c) color_grad(idx, c) += w * d_loss.data[p * 3 + c];
      }
      for (int i = 0; i < n_splats_; ++i)
        for (int ch = 0; ch < 3; ++ch)
          if (gate[i][ch] && color_grad(i, ch) != 0.0)
            grad_out->row(i).segment(ch * n_coeff_, n_coeff_) +=
                color_grad(i, ch) * vd.basis[i].transpose();
    }
    out.total = (1.0 - cfg_.lambda) * out.l1 + cfg_.lambda * out.dssim;
    return out;
  }

 private:
  struct ViewData {
    Camera cam;
    BlendWeights weights;
    std::vector<Eigen::VectorXd> basis;
    ImageD target;
    ImageD mask_weight;
    std::vector<std::uint8_t> mask;
    std::size_t mask_count = 0;
  };

  AppearanceConfig cfg_;
  SsimConfig ssim_cfg_;
  int sh_degree_;
  int n_splats_;
  int n_coeff_;
  std::vector<ViewData> views_;
};

/// Optimizes only the SH coefficients against masked targets; every other
/// primitive field is untouched.  Returns the refined cloud and the loss
/// trace (iteration, l1, dssim, total).
inline RefineResult refine_sh(const SplatCloud& cloud, const std::vector<Camera>& cams,
                              const std::vector<ImageD>& targets,
                              const std::vector<ImageU8>& masks,
                              const AppearanceConfig& cfg = {}) {
  const AppearanceProblem problem(cloud, cams, targets, masks, cfg);

  Eigen::MatrixXd sh = problem.flatten(cloud);
  Eigen::MatrixXd grad(sh.rows(), sh.cols());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(sh.rows(), sh.cols());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(sh.rows(), sh.cols());
  Eigen::MatrixXd best_sh = sh;
  double best_loss = std::numeric_limits<double>::infinity();

  RefineResult out;
  out.cloud = cloud;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    LossTracePoint point = problem.loss(sh, &grad);
    point.iteration = iter;
    out.trace.push_back(point);
    if (point.total < best_loss) {
      best_loss = point.total;
      best_sh = sh;
    }

    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bias1 = 1.0 - std::pow(cfg.beta1, iter);
    const double bias2 = 1.0 - std::pow(cfg.beta2, iter);
    sh -= (cfg.learning_rate * (m / bias1).array() /
           ((v / bias2).array().sqrt() + cfg.epsilon))
              .matrix();
  }
  problem.unflatten(best_sh, out.cloud);
  return out;
}

/// Loss trace CSV: iteration, l1, dssim, total.
inline void save_loss_trace(const std::vector<LossTracePoint>& trace,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw format_error("save_loss_trace: cannot open " + path);
  out << "iteration,l1,dssim,total\n";
  for (const auto& p : trace)
    out << p.iteration << "," << p.l1 << "," << p.dssim << "," << p.total << "\n";
}

}  // namespace splatalign
