// Windowed SSIM with a Gauss window, plus the closed-form gradient of a
// weighted SSIM sum with respect to the first image.  Borders use
// zero-fill, which is also how masked pixels enter the appearance loss.

#pragma once

#include <cmath>
#include <vector>

#include "splatalign/image.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;  // unit dynamic range
  double c2 = 0.03 * 0.03;
};

namespace ssim_detail {

inline std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(window);
  const double half = (window - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-0.5 * (i - half) * (i - half) / (sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable zero-padded convolution, applied per channel.
inline ImageD filter(const ImageD& img, const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size()) / 2;
  ImageD tmp(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) {
          const int sx = x + k;
          if (sx < 0 || sx >= img.width) continue;
          acc += kernel[k + r] * img.at(y, sx, c);
        }
        tmp.at(y, x, c) = acc;
      }
  ImageD out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0;
        for (int k = -r; k <= r; ++k) {
          const int sy = y + k;
          if (sy < 0 || sy >= img.height) continue;
          acc += kernel[k + r] * tmp.at(sy, x, c);
        }
        out.at(y, x, c) = acc;
      }
  return out;
}

inline ImageD multiply(const ImageD& a, const ImageD& b) {
  ImageD out(a.width, a.height, a.channels);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace ssim_detail

/// Per-pixel, per-channel SSIM map between equally sized images.
inline ImageD ssim_map(const ImageD& a, const ImageD& b, const SsimConfig& cfg = {}) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw invalid_argument_error("ssim: image dimensions differ");
  using namespace ssim_detail;
  const auto kernel = gaussian_kernel(cfg.window, cfg.sigma);
  const ImageD mu_a = filter(a, kernel);
  const ImageD mu_b = filter(b, kernel);
  const ImageD e_aa = filter(multiply(a, a), kernel);
  const ImageD e_bb = filter(multiply(b, b), kernel);
  const ImageD e_ab = filter(multiply(a, b), kernel);

  ImageD out(a.width, a.height, a.channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double ma = mu_a.data[i], mb = mu_b.data[i];
    const double va = e_aa.data[i] - ma * ma;
    const double vb = e_bb.data[i] - mb * mb;
    const double cov = e_ab.data[i] - ma * mb;
    out.data[i] = ((2 * ma * mb + cfg.c1) * (2 * cov + cfg.c2)) /
                  ((ma * ma + mb * mb + cfg.c1) * (va + vb + cfg.c2));
  }
  return out;
}

/// Mean SSIM over all pixels and channels.
inline double ssim(const ImageD& a, const ImageD& b, const SsimConfig& cfg = {}) {
  const ImageD map = ssim_map(a, b, cfg);
  double sum = 0;
  for (double v : map.data) sum += v;
  return sum / double(map.data.size());
}

struct SsimWithGradient {
  double weighted_sum = 0;  // sum of pixel_weight * ssim over the map
  ImageD d_input;           // gradient with respect to the first image
};

/// Weighted SSIM sum and its gradient with respect to `x`.  `weight` is a
/// per-pixel (single channel) factor applied to every channel of the map,
/// e.g. mask / |mask| for a masked mean.
inline SsimWithGradient ssim_weighted_sum_gradient(const ImageD& x, const ImageD& y,
                                                   const ImageD& weight,
                                                   const SsimConfig& cfg = {}) {
  if (x.width != y.width || x.height != y.height || x.channels != y.channels)
    throw invalid_argument_error("ssim: image dimensions differ");
  if (weight.channels != 1 || weight.width != x.width || weight.height != x.height)
    throw invalid_argument_error("ssim: weight must be a single-channel image");
  using namespace ssim_detail;
  const auto kernel = gaussian_kernel(cfg.window, cfg.sigma);
  const ImageD mu_x = filter(x, kernel);
  const ImageD mu_y = filter(y, kernel);
  const ImageD e_xx = filter(multiply(x, x), kernel);
  const ImageD e_yy = filter(multiply(y, y), kernel);
  const ImageD e_xy = filter(multiply(x, y), kernel);

  // d ssim_p / d x_q = w(q - p) * (alpha_p + beta_p y_q + gamma_p x_q), so
  // the full gradient needs three more filtered maps.
  ImageD alpha(x.width, x.height, x.channels);
  ImageD beta(x.width, x.height, x.channels);
  ImageD gamma(x.width, x.height, x.channels);
  SsimWithGradient out;
  for (int py = 0; py < x.height; ++py)
    for (int px = 0; px < x.width; ++px) {
      const double wgt = weight.at(py, px);
      for (int c = 0; c < x.channels; ++c) {
        const std::size_t i = (std::size_t(py) * x.width + px) * x.channels + c;
        const double mx = mu_x.data[i], my = mu_y.data[i];
        const double vx = e_xx.data[i] - mx * mx;
        const double vy = e_yy.data[i] - my * my;
        const double cov = e_xy.data[i] - mx * my;
        const double a1 = 2 * mx * my + cfg.c1;
        const double a2 = 2 * cov + cfg.c2;
        const double b1 = mx * mx + my * my + cfg.c1;
        const double b2 = vx + vy + cfg.c2;
        const double s = (a1 * a2) / (b1 * b2);
        out.weighted_sum += wgt * s;
        alpha.data[i] =
            wgt * (2 * my * a2 / (b1 * b2) - 2 * a1 * my / (b1 * b2) -
                   2 * s * mx / b1 + 2 * s * mx / b2);
        beta.data[i] = wgt * 2 * a1 / (b1 * b2);
        gamma.data[i] = wgt * (-2 * s / b2);
      }
    }
  const ImageD fa = filter(alpha, kernel);
  const ImageD fb = filter(beta, kernel);
  const ImageD fc = filter(gamma, kernel);
  out.d_input = ImageD(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < out.d_input.data.size(); ++i)
    out.d_input.data[i] = fa.data[i] + y.data[i] * fb.data[i] + x.data[i] * fc.data[i];
  return out;
}

}  // namespace splatalign
