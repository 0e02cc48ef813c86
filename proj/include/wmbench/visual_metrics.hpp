#pragma once

// Pixel and feature-space fidelity metrics for predicted next-state
// screenshots: PSNR, SSIM, LPIPS aggregation and the Frechet distance
// between Gaussian feature moments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wmbench/error.hpp"
#include "wmbench/image.hpp"

namespace wmbench {

/// H x W x C reals in [0, max_value], stored row-major with interleaved channels.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  double max_value = 255.0;
  std::vector<double> pixels;

  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                      static_cast<std::size_t>(channels) +
                  static_cast<std::size_t>(c)];
  }

  void validate() const {
    if (height <= 0 || width <= 0 || channels <= 0) fail(Errc::DimensionMismatch, "tensor dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(height) * width * channels) {
      fail(Errc::DimensionMismatch, "pixel count does not equal H*W*C");
    }
    for (double v : pixels) {
      if (!(v >= 0.0 && v <= max_value)) fail(Errc::DimensionMismatch, "pixel value outside [0, MAX]");
    }
  }

  static ImageTensor from_image(const Image& img, double max_value = 255.0) {
    ImageTensor t;
    t.height = img.height;
    t.width = img.width;
    t.channels = Image::kChannels;
    t.max_value = max_value;
    t.pixels.resize(img.rgb.size());
    const double scale = max_value / 255.0;
    for (std::size_t i = 0; i < img.rgb.size(); ++i) t.pixels[i] = img.rgb[i] * scale;
    return t;
  }
};

namespace detail {
inline void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    fail(Errc::DimensionMismatch, "images differ in shape");
  }
  if (a.max_value != b.max_value) fail(Errc::DimensionMismatch, "images use different dynamic ranges");
}
}  // namespace detail

inline double mean_squared_error(const ImageTensor& pred, const ImageTensor& gt) {
  detail::require_same_shape(pred, gt);
  pred.validate();
  gt.validate();
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const double d = pred.pixels[i] - gt.pixels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.pixels.size());
}

/// Decibels; +infinity when the images are identical.
inline double psnr(const ImageTensor& pred, const ImageTensor& gt) {
  const double mse = mean_squared_error(pred, gt);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(pred.max_value * pred.max_value / mse);
}

struct WindowConfig {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  int size = 8;
  double sigma = 1.5;
  int stride = 1;
  double k1 = 0.01;
  double k2 = 0.03;

  static WindowConfig uniform(int size = 8) { return WindowConfig{Kind::Uniform, size, 1.5, 1, 0.01, 0.03}; }
  static WindowConfig gaussian(int size = 11, double sigma = 1.5) {
    return WindowConfig{Kind::Gaussian, size, sigma, 1, 0.01, 0.03};
  }
};

namespace detail {

inline double ssim_from_moments(double mp, double mg, double vp, double vg, double cov, double c1, double c2) {
  return ((2.0 * mp * mg + c1) * (2.0 * cov + c2)) / ((mp * mp + mg * mg + c1) * (vp + vg + c2));
}

// Window sums through summed-area tables.
inline double ssim_uniform_channel(const ImageTensor& p, const ImageTensor& g, int c, const WindowConfig& w, double c1,
                                   double c2, std::size_t& windows) {
  const int H = p.height, W = p.width;
  const std::size_t stride = static_cast<std::size_t>(W) + 1;
  std::vector<double> sp((H + 1) * stride), sg(sp.size()), spp(sp.size()), sgg(sp.size()), spg(sp.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double a = p.at(y, x, c), b = g.at(y, x, c);
      const std::size_t i = (y + 1) * stride + (x + 1);
      const std::size_t up = y * stride + (x + 1), left = (y + 1) * stride + x, diag = y * stride + x;
      sp[i] = a + sp[up] + sp[left] - sp[diag];
      sg[i] = b + sg[up] + sg[left] - sg[diag];
      spp[i] = a * a + spp[up] + spp[left] - spp[diag];
      sgg[i] = b * b + sgg[up] + sgg[left] - sgg[diag];
      spg[i] = a * b + spg[up] + spg[left] - spg[diag];
    }
  }
  auto box = [&](const std::vector<double>& s, int y0, int x0) {
    const int y1 = y0 + w.size, x1 = x0 + w.size;
    return s[y1 * stride + x1] - s[y0 * stride + x1] - s[y1 * stride + x0] + s[y0 * stride + x0];
  };
  const double n = static_cast<double>(w.size) * w.size;
  double total = 0.0;
  windows = 0;
  for (int y = 0; y + w.size <= H; y += w.stride) {
    for (int x = 0; x + w.size <= W; x += w.stride) {
      const double mp = box(sp, y, x) / n, mg = box(sg, y, x) / n;
      const double vp = box(spp, y, x) / n - mp * mp;
      const double vg = box(sgg, y, x) / n - mg * mg;
      const double cov = box(spg, y, x) / n - mp * mg;
      total += ssim_from_moments(mp, mg, vp, vg, cov, c1, c2);
      ++windows;
    }
  }
  return total;
}

// Separable Gaussian weighting, valid positions only.
inline double ssim_gaussian_channel(const ImageTensor& p, const ImageTensor& g, int c, const WindowConfig& w, double c1,
                                    double c2, std::size_t& windows) {
  const int H = p.height, W = p.width, K = w.size;
  std::vector<double> k(static_cast<std::size_t>(K));
  const double centre = (K - 1) / 2.0;
  double ksum = 0.0;
  for (int i = 0; i < K; ++i) {
    k[i] = std::exp(-((i - centre) * (i - centre)) / (2.0 * w.sigma * w.sigma));
    ksum += k[i];
  }
  for (double& v : k) v /= ksum;

  const int Wo = W - K + 1, Ho = H - K + 1;
  // maps: p, g, p^2, g^2, p*g
  std::vector<std::vector<double>> horiz(5, std::vector<double>(static_cast<std::size_t>(H) * Wo, 0.0));
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < Wo; ++x) {
      double acc[5] = {0, 0, 0, 0, 0};
      for (int i = 0; i < K; ++i) {
        const double a = p.at(y, x + i, c), b = g.at(y, x + i, c), wt = k[i];
        acc[0] += wt * a;
        acc[1] += wt * b;
        acc[2] += wt * a * a;
        acc[3] += wt * b * b;
        acc[4] += wt * a * b;
      }
      for (int m = 0; m < 5; ++m) horiz[m][static_cast<std::size_t>(y) * Wo + x] = acc[m];
    }
  }
  double total = 0.0;
  windows = 0;
  for (int y = 0; y < Ho; y += w.stride) {
    for (int x = 0; x < Wo; x += w.stride) {
      double acc[5] = {0, 0, 0, 0, 0};
      for (int i = 0; i < K; ++i) {
        for (int m = 0; m < 5; ++m) acc[m] += k[i] * horiz[m][static_cast<std::size_t>(y + i) * Wo + x];
      }
      const double mp = acc[0], mg = acc[1];
      total += ssim_from_moments(mp, mg, acc[2] - mp * mp, acc[3] - mg * mg, acc[4] - mp * mg, c1, c2);
      ++windows;
    }
  }
  return total;
}

}  // namespace detail

/// Mean SSIM over all valid window positions and channels. Local variances
/// and covariance use the 1/N (window-weighted) estimator.
inline double ssim(const ImageTensor& pred, const ImageTensor& gt, const WindowConfig& window = {}) {
  detail::require_same_shape(pred, gt);
  pred.validate();
  gt.validate();
  if (window.size < 1 || window.stride < 1) fail(Errc::ConfigError, "window size and stride must be positive");
  if (window.size > pred.height || window.size > pred.width) {
    fail(Errc::WindowTooLarge, "window of " + std::to_string(window.size) + " does not fit a " +
                                   std::to_string(pred.width) + "x" + std::to_string(pred.height) + " image");
  }
  const double c1 = (window.k1 * pred.max_value) * (window.k1 * pred.max_value);
  const double c2 = (window.k2 * pred.max_value) * (window.k2 * pred.max_value);
  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < pred.channels; ++c) {
    std::size_t windows = 0;
    total += window.kind == WindowConfig::Kind::Uniform
                 ? detail::ssim_uniform_channel(pred, gt, c, window, c1, c2, windows)
                 : detail::ssim_gaussian_channel(pred, gt, c, window, c1, c2, windows);
    count += windows;
  }
  return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// LPIPS aggregation over externally supplied feature maps.

struct FeatureLayer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;     ///< H x W x C, channels fastest.
  std::vector<double> weights;  ///< One non-negative weight per channel.

  void validate() const {
    if (height <= 0 || width <= 0 || channels <= 0) fail(Errc::LayerMismatch, "layer dimensions must be positive");
    if (data.size() != static_cast<std::size_t>(height) * width * channels) {
      fail(Errc::LayerMismatch, "layer data size does not equal H*W*C");
    }
    if (weights.size() != static_cast<std::size_t>(channels)) {
      fail(Errc::LayerMismatch, "layer weight count does not equal channel count");
    }
    for (double w : weights) {
      if (!(w >= 0.0)) fail(Errc::LayerMismatch, "layer weights must be non-negative");
    }
  }
};

struct FeatureStack {
  std::vector<FeatureLayer> layers;
};

struct LpipsOptions {
  /// Error on an all-zero channel vector instead of letting it contribute 0.
  bool strict_zero_norm = false;
};

inline double lpips_aggregate(const FeatureStack& pred, const FeatureStack& gt, const LpipsOptions& opts = {}) {
  if (pred.layers.size() != gt.layers.size()) fail(Errc::LayerMismatch, "feature stacks have different depths");
  if (pred.layers.empty()) fail(Errc::LayerMismatch, "feature stacks are empty");
  double total = 0.0;
  for (std::size_t l = 0; l < pred.layers.size(); ++l) {
    const auto& a = pred.layers[l];
    const auto& b = gt.layers[l];
    a.validate();
    b.validate();
    if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
      fail(Errc::LayerMismatch, "layer " + std::to_string(l) + " shapes differ");
    }
    if (a.weights != b.weights) fail(Errc::LayerMismatch, "layer " + std::to_string(l) + " weights differ");
    const auto C = static_cast<std::size_t>(a.channels);
    double layer_sum = 0.0;
    for (std::size_t pos = 0; pos < static_cast<std::size_t>(a.height) * a.width; ++pos) {
      const double* va = a.data.data() + pos * C;
      const double* vb = b.data.data() + pos * C;
      double na = 0.0, nb = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        na += va[c] * va[c];
        nb += vb[c] * vb[c];
      }
      if ((na == 0.0 || nb == 0.0) && opts.strict_zero_norm) {
        fail(Errc::ZeroNormFeature, "layer " + std::to_string(l) + " has an all-zero channel vector");
      }
      const double ia = na > 0.0 ? 1.0 / std::sqrt(na) : 0.0;
      const double ib = nb > 0.0 ? 1.0 / std::sqrt(nb) : 0.0;
      double d2 = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = a.weights[c] * (va[c] * ia - vb[c] * ib);
        d2 += d * d;
      }
      layer_sum += d2;
    }
    total += layer_sum / (static_cast<double>(a.height) * a.width);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Gaussian moments and the Frechet distance.

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// Empirical mean and unbiased (n-1) covariance, two-pass.
inline GaussianMoments compute_moments(std::span<const std::vector<double>> features) {
  if (features.size() < 2) fail(Errc::TooFewSamples, "moments need at least 2 feature vectors");
  const auto d = static_cast<Eigen::Index>(features.front().size());
  if (d == 0) fail(Errc::DimensionMismatch, "feature vectors are empty");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(features.size()), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (static_cast<Eigen::Index>(features[i].size()) != d) fail(Errc::DimensionMismatch, "feature vectors differ in length");
    X.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(features[i].data(), d);
  }
  GaussianMoments m;
  m.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centred = X.rowwise() - m.mean.transpose();
  m.cov = (centred.transpose() * centred) / static_cast<double>(X.rows() - 1);
  return m;
}

/// Streaming mean/covariance that can be sharded and merged.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Eigen::Index dim) : mean_(Eigen::VectorXd::Zero(dim)), comoment_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) != mean_.size()) fail(Errc::DimensionMismatch, "feature has the wrong length");
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), mean_.size());
    ++n_;
    const Eigen::VectorXd delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    comoment_.noalias() += delta * (v - mean_).transpose();
  }

  void merge(const MomentAccumulator& other) {
    if (other.mean_.size() != mean_.size()) fail(Errc::DimensionMismatch, "accumulators differ in dimension");
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    comoment_ += other.comoment_ + delta * delta.transpose() * (na * nb / n);
    mean_ += delta * (nb / n);
    n_ += other.n_;
  }

  std::size_t count() const { return n_; }

  GaussianMoments moments() const {
    if (n_ < 2) fail(Errc::TooFewSamples, "moments need at least 2 feature vectors");
    return GaussianMoments{mean_, comoment_ / static_cast<double>(n_ - 1)};
  }

 private:
  std::size_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd comoment_;
};

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kPsdTolerance = 1e-6;

namespace detail {

inline Eigen::MatrixXd checked_symmetric(const Eigen::MatrixXd& m, const char* which) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    fail(Errc::NonPSD, std::string(which) + " covariance is not symmetric");
  }
  return 0.5 * (m + m.transpose());
}

}  // namespace detail

/// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2)). The trace of the
/// product root is taken as Tr((A S_g A)^(1/2)) with A = S_r^(1/2), which is
/// symmetric PSD and has the same spectrum as S_r S_g.
inline double frechet_distance(const GaussianMoments& real, const GaussianMoments& gen) {
  const auto d = real.dim();
  if (d == 0 || gen.dim() != d || real.cov.rows() != d || real.cov.cols() != d || gen.cov.rows() != d ||
      gen.cov.cols() != d) {
    fail(Errc::DimensionMismatch, "moment dimensions disagree");
  }
  const Eigen::MatrixXd sr = detail::checked_symmetric(real.cov, "real");
  const Eigen::MatrixXd sg = detail::checked_symmetric(gen.cov, "generated");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(sr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(sg);
  if (er.eigenvalues().minCoeff() < -kPsdTolerance) fail(Errc::NonPSD, "real covariance is not positive semi-definite");
  if (eg.eigenvalues().minCoeff() < -kPsdTolerance) fail(Errc::NonPSD, "generated covariance is not positive semi-definite");

  const double mean_term = (real.mean - gen.mean).squaredNorm();
  // Equal covariances cancel exactly.
  if (sr == sg) return mean_term;

  const Eigen::VectorXd root_vals = er.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root_r = er.eigenvectors() * root_vals.asDiagonal() * er.eigenvectors().transpose();
  Eigen::MatrixXd inner = root_r * sg * root_r;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  const double tr_root = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double value = mean_term + sr.trace() + sg.trace() - 2.0 * tr_root;
  return std::max(0.0, value);
}

}  // namespace wmbench
