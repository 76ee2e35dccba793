#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "mshist/core.hpp"
#include "mshist/error.hpp"
#include "mshist/tonemap.hpp"

namespace mshist {

namespace detail {

/// Pairwise summation; the split order depends only on the length, so results are reproducible.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 32) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline std::vector<double> gradient_magnitudes(const LuminanceField& f) {
  const int w = f.width();
  const int h = f.height();
  if (w < 2 || h < 2)
    throw Error(ErrorCode::invalid_argument, "sharpness needs an image of at least 2x2");
  std::vector<double> mag(f.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx;
      if (x == 0)
        gx = f.at(1, y) - f.at(0, y);
      else if (x == w - 1)
        gx = f.at(w - 1, y) - f.at(w - 2, y);
      else
        gx = 0.5 * (f.at(x + 1, y) - f.at(x - 1, y));
      double gy;
      if (y == 0)
        gy = f.at(x, 1) - f.at(x, 0);
      else if (y == h - 1)
        gy = f.at(x, h - 1) - f.at(x, h - 2);
      else
        gy = 0.5 * (f.at(x, y + 1) - f.at(x, y - 1));
      mag[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          std::sqrt(gx * gx + gy * gy);
    }
  }
  return mag;
}

}  // namespace detail

/// Mean display level.
inline double brightness(const LuminanceField& f) {
  return detail::pairwise_sum(f.samples()) / static_cast<double>(f.size());
}

/// Total gradient magnitude over all pixels (central differences, one-sided at borders).
inline double sharpness_sum(const LuminanceField& f) {
  return detail::pairwise_sum(detail::gradient_magnitudes(f));
}

/// Per-pixel mean gradient magnitude.
inline double sharpness(const LuminanceField& f) {
  return sharpness_sum(f) / static_cast<double>(f.size());
}

/// Population standard deviation.
inline double contrast(const LuminanceField& f) {
  const double mean = brightness(f);
  std::vector<double> dev(f.size());
  const auto s = f.samples();
  for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = (s[i] - mean) * (s[i] - mean);
  return std::sqrt(detail::pairwise_sum(dev) / static_cast<double>(f.size()));
}

struct QualityReport {
  double brightness = 0.0;
  double sharpness = 0.0;
  double contrast = 0.0;
  double sharpness_sum = 0.0;
};

inline QualityReport evaluate_quality(const LuminanceField& f) {
  if (f.domain() != Domain::display)
    throw Error(ErrorCode::invalid_argument, "quality metrics expect a display-domain field");
  QualityReport r;
  r.brightness = brightness(f);
  r.sharpness_sum = sharpness_sum(f);
  r.sharpness = r.sharpness_sum / static_cast<double>(f.size());
  r.contrast = contrast(f);
  return r;
}

/// Luminance of a display image, the field the quality metrics are reported on.
inline LuminanceField display_luminance(const DisplayImage& img) {
  std::vector<double> l(img.red.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    l[i] = std::clamp(kLumaRed * img.red[i] + kLumaGreen * img.green[i] + kLumaBlue * img.blue[i],
                      0.0, kDisplayMax);
  return LuminanceField(img.width, img.height, std::move(l), Domain::display);
}

inline QualityReport evaluate_quality(const DisplayImage& img) {
  return evaluate_quality(display_luminance(img));
}

/// 20 log10(max / min) over the non-zero luminance samples of a radiance map.
inline double dynamic_range_db(const WdrImage& img) {
  const LuminanceField l = extract_luminance(img);
  double lo = 0.0;
  double hi = 0.0;
  for (double v : l.samples()) {
    if (v <= 0.0) continue;
    lo = lo == 0.0 ? v : std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == 0.0) throw Error(ErrorCode::degenerate_image, "no non-zero luminance");
  return 20.0 * std::log10(hi / lo);
}

inline std::string csv_header() { return "brightness,sharpness,contrast,sharpness_sum"; }

inline std::string to_csv_row(const QualityReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f", r.brightness, r.sharpness, r.contrast,
                r.sharpness_sum);
  return buf;
}

inline std::string to_text(const QualityReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "brightness (mean level)      %10.4f\n"
                "sharpness  (mean |grad|)     %10.4f\n"
                "contrast   (std deviation)   %10.4f\n"
                "sharpness  (sum |grad|)      %10.1f\n",
                r.brightness, r.sharpness, r.contrast, r.sharpness_sum);
  return buf;
}

}  // namespace mshist
