#pragma once

// 8-bit RGB images: decoding, encoding, resolution normalisation and the
// unchanged-frame test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "wmbench/error.hpp"

namespace wmbench {

/// Reference to a stored image. Dimensions are those of the stored file.
struct ImageRef {
  std::string path;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct Resolution {
  int width = 1280;
  int height = 720;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Interleaved RGB, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * kChannels +
               static_cast<std::size_t>(c)];
  }
  std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * kChannels +
               static_cast<std::size_t>(c)];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline Image image_from_mat(const cv::Mat& bgr) {
  Image img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(x, y, 0) = row[x][2];
      img.at(x, y, 1) = row[x][1];
      img.at(x, y, 2) = row[x][0];
    }
  }
  return img;
}

inline cv::Mat image_to_mat(const Image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      row[x] = cv::Vec3b(img.at(x, y, 2), img.at(x, y, 1), img.at(x, y, 0));
    }
  }
  return bgr;
}

/// Decodes PNG or JPEG bytes; grey and alpha inputs are converted to RGB.
inline Image decode_image(std::span<const std::uint8_t> bytes, const std::string& what = "image") {
  if (bytes.empty()) fail(Errc::CorruptImage, what + " is empty");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    bgr.release();
  }
  if (bgr.empty()) fail(Errc::CorruptImage, what + " could not be decoded");
  return image_from_mat(bgr);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingImage, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Image load_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) fail(Errc::MissingImage, "no such image: " + path.string());
  auto bytes = read_file_bytes(path);
  return decode_image(bytes, path.string());
}

/// PNG-encoded bytes (lossless, deterministic for identical input).
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", image_to_mat(img), out)) fail(Errc::CorruptImage, "PNG encoding failed");
  return out;
}

inline void save_png(const Image& img, const std::filesystem::path& path) {
  auto bytes = encode_png(img);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::ConfigError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline ImageRef make_ref(const std::filesystem::path& path, const Image& img) {
  return ImageRef{path.string(), img.width, img.height};
}

/// Bilinear resample with pixel centres at half-integer positions and edge
/// clamping; no letterboxing. An image already at the target is returned as-is.
inline Image normalize_resolution(const Image& src, Resolution target) {
  if (target.width <= 0 || target.height <= 0) fail(Errc::ConfigError, "target resolution must be positive");
  if (src.width <= 0 || src.height <= 0 || src.rgb.size() != static_cast<std::size_t>(src.width) * src.height * 3) {
    fail(Errc::CorruptImage, "source image has no pixels");
  }
  if (src.width == target.width && src.height == target.height) return src;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int out_n, int in_n) {
    std::vector<Tap> t(static_cast<std::size_t>(out_n));
    const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
    for (int o = 0; o < out_n; ++o) {
      double s = (o + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in_n - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, in_n - 1);
      t[static_cast<std::size_t>(o)] = Tap{i0, i1, s - i0};
    }
    return t;
  };
  const auto tx = taps(target.width, src.width);
  const auto ty = taps(target.height, src.height);

  Image out(target.width, target.height);
  for (int y = 0; y < target.height; ++y) {
    const Tap& ry = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < target.width; ++x) {
      const Tap& rx = tx[static_cast<std::size_t>(x)];
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = src.at(rx.i0, ry.i0, c) * (1.0 - rx.w1) + src.at(rx.i1, ry.i0, c) * rx.w1;
        const double bot = src.at(rx.i0, ry.i1, c) * (1.0 - rx.w1) + src.at(rx.i1, ry.i1, c) * rx.w1;
        const double v = top * (1.0 - ry.w1) + bot * ry.w1;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

/// True (reject) iff the two frames are pixel-identical. Both must already be
/// at a common resolution.
inline bool filter_unchanged(const Image& before, const Image& after) {
  if (before.width != after.width || before.height != after.height) {
    fail(Errc::DimensionMismatch, "frames differ in size: " + std::to_string(before.width) + "x" +
                                      std::to_string(before.height) + " vs " + std::to_string(after.width) + "x" +
                                      std::to_string(after.height));
  }
  return before.rgb == after.rgb;
}

// A caption hidden in the low pixels of an image lets deterministic mock
// realizers hand a predicted transition to a mock selector through the image
// channel alone: the selector never sees the text unless it reads the image.
namespace caption {
inline constexpr std::uint8_t kMagic[4] = {'W', 'M', 'C', '1'};
}

inline Image stamp_caption(const Image& base, std::string_view text) {
  Image out = base;
  std::vector<std::uint8_t> payload(std::begin(caption::kMagic), std::end(caption::kMagic));
  const auto n = static_cast<std::uint32_t>(text.size());
  for (int s = 0; s < 4; ++s) payload.push_back(static_cast<std::uint8_t>((n >> (8 * s)) & 0xFF));
  payload.insert(payload.end(), text.begin(), text.end());
  if (payload.size() > out.rgb.size()) fail(Errc::PreconditionViolation, "image too small to carry the caption");
  std::copy(payload.begin(), payload.end(), out.rgb.begin());
  return out;
}

inline std::optional<std::string> read_caption(const Image& img) {
  if (img.rgb.size() < 8 || !std::equal(std::begin(caption::kMagic), std::end(caption::kMagic), img.rgb.begin())) {
    return std::nullopt;
  }
  std::uint32_t n = 0;
  for (int s = 0; s < 4; ++s) n |= static_cast<std::uint32_t>(img.rgb[4 + static_cast<std::size_t>(s)]) << (8 * s);
  if (8 + static_cast<std::size_t>(n) > img.rgb.size()) return std::nullopt;
  return std::string(img.rgb.begin() + 8, img.rgb.begin() + 8 + n);
}

}  // namespace wmbench
