#include <cmath>
#include <limits>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "oracles.hpp"
#include "wmbench/image.hpp"
#include "wmbench/synthetic.hpp"
#include "wmbench/visual_metrics.hpp"

namespace wmbench {
namespace {

using testing::moments_1d;
using testing::naive_ssim;
using testing::random_moments;
using testing::random_tensor;

ImageTensor constant(int h, int w, double v) { return testing::constant_tensor(h, w, v); }

TEST(Psnr, IdenticalIsInfinite) {
  testing::Gen gen(1);
  const auto a = random_tensor(gen, 16, 16);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, BlackVersusWhiteIsZeroDecibels) {
  EXPECT_NEAR(psnr(constant(8, 8, 0.0), constant(8, 8, 255.0)), 0.0, 1e-9);
}

TEST(Psnr, KnownMse) {
  // MSE 1 at MAX 255 -> 20 log10(255).
  EXPECT_NEAR(psnr(constant(4, 4, 10.0), constant(4, 4, 11.0)), 20.0 * std::log10(255.0), 1e-9);
}

TEST(Psnr, ShapeMismatch) {
  try {
    psnr(constant(4, 4, 0.0), constant(4, 5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Ssim, MatchesNaiveWindowLoop) {
  testing::Gen gen(2024);
  for (int i = 0; i < 50; ++i) {
    const auto [p, g] = testing::ssim_pair(gen, i);
    ASSERT_NEAR(ssim(p, g, WindowConfig::uniform()), naive_ssim(p, g, 8), 1e-6) << i;
  }
}

TEST(Ssim, IdenticalIsOneAndWindowTooLarge) {
  testing::Gen gen(3);
  const auto a = random_tensor(gen, 16, 16);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, a, WindowConfig::gaussian()), 1.0, 1e-12);
  try {
    ssim(constant(4, 4, 0.0), constant(4, 4, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::WindowTooLarge);
  }
}

TEST(Ssim, GaussianIsSymmetricAndBounded) {
  testing::Gen gen(4);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_tensor(gen, 24, 24), b = random_tensor(gen, 24, 24);
    const double ab = ssim(a, b, WindowConfig::gaussian());
    EXPECT_NEAR(ab, ssim(b, a, WindowConfig::gaussian()), 1e-12);
    EXPECT_LE(ab, 1.0);
    EXPECT_GE(ab, -1.0);
  }
}

TEST(Frechet, OneDimensionalClosedForm) {
  // (0 - 1)^2 + 1 + 4 - 2 sqrt(1 * 4) = 2
  EXPECT_NEAR(frechet_distance(moments_1d(0, 1), moments_1d(1, 4)), 2.0, 1e-9);
}

TEST(Frechet, SymmetricAndNonNegativeOnRandomPsdPairs) {
  testing::Gen gen(77);
  for (int i = 0; i < 1000; ++i) {
    const int d = gen.uniform(1, 6);
    const auto a = random_moments(gen, d), b = random_moments(gen, d);
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    ASSERT_GE(ab, 0.0);
    ASSERT_NEAR(ab, ba, 1e-9 * std::max(1.0, ab));
    ASSERT_NEAR(frechet_distance(a, a), 0.0, 1e-9);
  }
}

TEST(Frechet, RejectsNonPsdAndMismatch) {
  auto bad = moments_1d(0, -1);
  try {
    frechet_distance(bad, moments_1d(0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPSD);
  }
  GaussianMoments two;
  two.mean = Eigen::VectorXd::Zero(2);
  two.cov = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(frechet_distance(two, moments_1d(0, 1)), Error);
}

TEST(Moments, MatchStreamingOracle) {
  testing::Gen gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = gen.uniform(1, 5);
    const int n = gen.uniform(2, 200);
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& x : xs)
      for (auto& v : x) v = gen.real(-10.0, 10.0);
    const auto oracle = testing::welford_moments(xs);
    const auto m = compute_moments(xs);
    MomentAccumulator left(d), right(d);
    for (int k = 0; k < n; ++k) (k < n / 2 ? left : right).add(xs[static_cast<std::size_t>(k)]);
    left.merge(right);
    const auto streamed = left.moments();
    ASSERT_LE((m.mean - oracle.mean).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_LE((m.cov - oracle.cov).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_LE((streamed.mean - oracle.mean).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_LE((streamed.cov - oracle.cov).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Moments, TooFewSamples) {
  const std::vector<std::vector<double>> one{{1.0, 2.0}};
  try {
    compute_moments(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewSamples);
  }
}

FeatureLayer layer(int h, int w, int c, std::vector<double> data, std::vector<double> weights) {
  return FeatureLayer{h, w, c, std::move(data), std::move(weights)};
}

TEST(Lpips, IdenticalIsZeroAndScaleInvariant) {
  const FeatureStack a{{layer(1, 2, 2, {1, 2, 3, 4}, {1, 1})}};
  const FeatureStack b{{layer(1, 2, 2, {2, 4, 30, 40}, {1, 1})}};
  EXPECT_NEAR(lpips_aggregate(a, a), 0.0, 1e-15);
  EXPECT_NEAR(lpips_aggregate(a, b), 0.0, 1e-15);
}

TEST(Lpips, OrthogonalUnitVectors) {
  // Per position ||w (e1 - e2)||^2 = w0^2 + w1^2; averaged over the map.
  const FeatureStack a{{layer(1, 1, 2, {1, 0}, {1.0, 0.5})}};
  const FeatureStack b{{layer(1, 1, 2, {0, 1}, {1.0, 0.5})}};
  EXPECT_NEAR(lpips_aggregate(a, b), 1.25, 1e-12);
}

TEST(Lpips, ZeroNormAndMismatch) {
  const FeatureStack z{{layer(1, 1, 2, {0, 0}, {1, 1})}};
  const FeatureStack u{{layer(1, 1, 2, {1, 0}, {1, 1})}};
  EXPECT_NEAR(lpips_aggregate(z, u), 1.0, 1e-12);
  try {
    lpips_aggregate(z, u, LpipsOptions{true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroNormFeature);
  }
  const FeatureStack other{{layer(1, 2, 1, {1, 0}, {1})}};
  EXPECT_THROW(lpips_aggregate(u, other), Error);
}

TEST(Resample, AgreesWithOpenCvBilinear) {
  for (auto [sw, sh, tw, th] : std::vector<std::array<int, 4>>{{64, 36, 128, 72}, {64, 36, 32, 18}, {50, 30, 37, 23}, {7, 5, 16, 16}}) {
    const Image src = synthetic::pattern_image(sw, sh, static_cast<std::uint64_t>(sw * 31 + th));
    const Image ours = normalize_resolution(src, Resolution{tw, th});
    cv::Mat ref;
    cv::resize(image_to_mat(src), ref, cv::Size(tw, th), 0, 0, cv::INTER_LINEAR);
    const Image theirs = image_from_mat(ref);
    ASSERT_EQ(ours.rgb.size(), theirs.rgb.size());
    int worst = 0;
    for (std::size_t i = 0; i < ours.rgb.size(); ++i) worst = std::max(worst, std::abs(int(ours.rgb[i]) - int(theirs.rgb[i])));
    EXPECT_LE(worst, 1) << sw << "x" << sh << " -> " << tw << "x" << th;
  }
}

TEST(Resample, SameSizeIsIdentity) {
  const Image src = synthetic::pattern_image(20, 10, 5);
  EXPECT_EQ(normalize_resolution(src, Resolution{20, 10}).rgb, src.rgb);
}

TEST(Caption, RoundTrip) {
  const Image base = synthetic::pattern_image(32, 18, 6);
  EXPECT_FALSE(read_caption(base).has_value());
  EXPECT_EQ(read_caption(stamp_caption(base, "dialog opens")), "dialog opens");
}

}  // namespace
}  // namespace wmbench
