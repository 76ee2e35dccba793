#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mshist/error.hpp"

namespace mshist {

/// Upper bound on the display range; every display-domain value lies in [0, kDisplayMax].
inline constexpr double kDisplayMax = 255.0;

/// Largest window side accepted as "small enough" by the automatic pyramid rule.
inline constexpr int kSmallestWindowSide = 64;

namespace detail {

inline void check_dimensions(int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::invalid_argument,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
}

inline std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

inline int halve_up(int side) { return side / 2 + side % 2; }

}  // namespace detail

/// Linear-light RGB radiance map. Immutable once constructed.
class WdrImage {
 public:
  WdrImage(int width, int height, std::vector<double> red, std::vector<double> green,
           std::vector<double> blue)
      : width_(width), height_(height), red_(std::move(red)), green_(std::move(green)),
        blue_(std::move(blue)) {
    detail::check_dimensions(width_, height_);
    const std::size_t n = detail::pixel_count(width_, height_);
    if (red_.size() != n || green_.size() != n || blue_.size() != n)
      throw Error(ErrorCode::invalid_argument, "channel planes must hold width*height samples");
    for (const auto* plane : {&red_, &green_, &blue_})
      for (double v : *plane)
        if (!std::isfinite(v) || v < 0.0)
          throw Error(ErrorCode::invalid_sample, "radiance must be finite and non-negative");
  }

  /// Gray image with all three channels equal to `values`.
  static WdrImage gray(int width, int height, std::vector<double> values) {
    auto g = values;
    auto b = values;
    return WdrImage(width, height, std::move(values), std::move(g), std::move(b));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return red_.size(); }

  std::span<const double> red() const noexcept { return red_; }
  std::span<const double> green() const noexcept { return green_; }
  std::span<const double> blue() const noexcept { return blue_; }

 private:
  int width_;
  int height_;
  std::vector<double> red_;
  std::vector<double> green_;
  std::vector<double> blue_;
};

enum class Domain { linear, log, display };

inline const char* to_string(Domain d) {
  switch (d) {
    case Domain::linear: return "linear";
    case Domain::log: return "log";
    case Domain::display: return "display";
  }
  return "?";
}

/// Single-channel working image. The domain tag constrains the admissible sample range.
class LuminanceField {
 public:
  LuminanceField(int width, int height, std::vector<double> samples, Domain domain)
      : width_(width), height_(height), samples_(std::move(samples)), domain_(domain) {
    detail::check_dimensions(width_, height_);
    if (samples_.size() != detail::pixel_count(width_, height_))
      throw Error(ErrorCode::invalid_argument, "field must hold width*height samples");
    for (double v : samples_) {
      if (!std::isfinite(v))
        throw Error(ErrorCode::invalid_sample, "field samples must be finite");
      if (domain_ == Domain::linear && v < 0.0)
        throw Error(ErrorCode::invalid_sample, "linear luminance must be non-negative");
      if (domain_ == Domain::display && (v < 0.0 || v > kDisplayMax))
        throw Error(ErrorCode::out_of_range_sample, "display samples must lie in [0, 255]");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }
  Domain domain() const noexcept { return domain_; }
  std::span<const double> samples() const noexcept { return samples_; }

  double at(int x, int y) const {
    return samples_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(x)];
  }

  double min() const { return *std::min_element(samples_.begin(), samples_.end()); }
  double max() const { return *std::max_element(samples_.begin(), samples_.end()); }

 private:
  int width_;
  int height_;
  std::vector<double> samples_;
  Domain domain_;
};

/// Three-plane display image. Samples are expected in [0, 255]; encoders verify this.
struct DisplayImage {
  int width = 0;
  int height = 0;
  std::vector<double> red;
  std::vector<double> green;
  std::vector<double> blue;

  static DisplayImage from_gray(const LuminanceField& f) {
    std::vector<double> v(f.samples().begin(), f.samples().end());
    return DisplayImage{f.width(), f.height(), v, v, v};
  }
};

struct ToneParams {
  int bins = 5;
  double epsilon = 0.1;
  std::optional<int> scales;  ///< nullopt resolves through the pyramid rule
  double sat = 0.6;
  double log_floor = 1e-6;  ///< relative to the image's maximum linear luminance
  double fallback_tolerance = 1e-8;

  bool operator==(const ToneParams&) const = default;
};

/// Inclusive pixel rectangle.
struct WindowRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  std::size_t area() const noexcept {
    return (x1 < x0 || y1 < y0) ? 0
                                : static_cast<std::size_t>(width()) *
                                      static_cast<std::size_t>(height());
  }
  bool operator==(const WindowRect&) const = default;
};

inline void check_rect(const WindowRect& r, int width, int height) {
  if (r.x0 < 0 || r.y0 < 0 || r.x1 >= width || r.y1 >= height || r.x0 > r.x1 || r.y0 > r.y1)
    throw Error(ErrorCode::out_of_bounds,
                "rectangle [" + std::to_string(r.x0) + "," + std::to_string(r.y0) + "]-[" +
                    std::to_string(r.x1) + "," + std::to_string(r.y1) + "] outside " +
                    std::to_string(width) + "x" + std::to_string(height));
}

/// Window of the requested size containing pixel (x, y), centered on it where possible.
/// Near the border the window is shifted inward so it never leaves the image and keeps
/// its full size; a window as large as the image therefore covers the image for every pixel.
inline WindowRect window_around(int x, int y, int window_width, int window_height, int width,
                                int height) {
  const int ww = std::clamp(window_width, 1, width);
  const int wh = std::clamp(window_height, 1, height);
  const int x0 = std::clamp(x - ww / 2, 0, width - ww);
  const int y0 = std::clamp(y - wh / 2, 0, height - wh);
  return {x0, y0, x0 + ww - 1, y0 + wh - 1};
}

/// Number of pyramid levels the automatic rule picks: halve (rounding up) from the full image
/// until both sides are at most kSmallestWindowSide, or the window reaches 1x1.
inline int auto_scale_count(int width, int height) {
  detail::check_dimensions(width, height);
  int count = 1;
  while (std::max(width, height) > kSmallestWindowSide && (width > 1 || height > 1)) {
    width = detail::halve_up(width);
    height = detail::halve_up(height);
    ++count;
  }
  return count;
}

/// Largest explicit scale count: one more halving past 1x1 would go below a pixel.
inline int max_scale_count(int width, int height) {
  detail::check_dimensions(width, height);
  int count = 1;
  while (width > 1 || height > 1) {
    width = detail::halve_up(width);
    height = detail::halve_up(height);
    ++count;
  }
  return count;
}

/// Checks user-supplied parameters against an image size and resolves the scale count.
inline ToneParams validate_params(ToneParams p, int width, int height) {
  detail::check_dimensions(width, height);
  if (p.bins < 1)
    throw Error(ErrorCode::invalid_argument, "bins must be >= 1, got " + std::to_string(p.bins));
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    throw Error(ErrorCode::invalid_argument, "epsilon must be positive and finite");
  if (!(p.sat > 0.0 && p.sat <= 1.0))
    throw Error(ErrorCode::invalid_argument, "sat must lie in (0, 1]");
  if (!(p.log_floor > 0.0) || !std::isfinite(p.log_floor))
    throw Error(ErrorCode::invalid_argument, "log floor must be positive and finite");
  if (!(p.fallback_tolerance > 0.0) || !std::isfinite(p.fallback_tolerance))
    throw Error(ErrorCode::invalid_argument, "fallback tolerance must be positive and finite");
  if (p.scales) {
    const int limit = max_scale_count(width, height);
    if (*p.scales < 1 || *p.scales > limit)
      throw Error(ErrorCode::invalid_argument,
                  "scale count " + std::to_string(*p.scales) + " invalid for " +
                      std::to_string(width) + "x" + std::to_string(height) + " (allowed 1.." +
                      std::to_string(limit) + ")");
  } else {
    p.scales = auto_scale_count(width, height);
  }
  return p;
}

}  // namespace mshist
