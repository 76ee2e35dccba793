#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mshist/core.hpp"
#include "mshist/error.hpp"
#include "mshist/integral.hpp"
#include "mshist/parallel.hpp"

namespace mshist {

inline constexpr double kLumaRed = 0.299;
inline constexpr double kLumaGreen = 0.587;
inline constexpr double kLumaBlue = 0.114;

inline LuminanceField extract_luminance(const WdrImage& img) {
  std::vector<double> l(img.size());
  const auto r = img.red();
  const auto g = img.green();
  const auto b = img.blue();
  for (std::size_t i = 0; i < l.size(); ++i)
    l[i] = kLumaRed * r[i] + kLumaGreen * g[i] + kLumaBlue * b[i];
  return LuminanceField(img.width(), img.height(), std::move(l), Domain::linear);
}

/// Absolute luminance floor: `relative_floor` times the brightest pixel.
inline double luminance_floor(const LuminanceField& linear, double relative_floor) {
  const double peak = linear.max();
  if (!(peak > 0.0))
    throw Error(ErrorCode::degenerate_image, "all-zero luminance has no dynamic range");
  return relative_floor * peak;
}

/// Natural log of the floored luminance.
inline LuminanceField to_log_domain(const LuminanceField& linear, double relative_floor) {
  if (linear.domain() != Domain::linear)
    throw Error(ErrorCode::invalid_argument, "log transform expects a linear field");
  if (!(relative_floor > 0.0))
    throw Error(ErrorCode::invalid_argument, "log floor must be positive");
  const double floor = luminance_floor(linear, relative_floor);
  std::vector<double> out(linear.size());
  const auto in = linear.samples();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(in[i], floor));
  return LuminanceField(linear.width(), linear.height(), std::move(out), Domain::log);
}

/// Log field rescaled to [0, 1]; all zeros when the field is constant.
inline LuminanceField normalize_unit(const LuminanceField& l) {
  const double lo = l.min();
  const double span = l.max() - lo;
  std::vector<double> out(l.size(), 0.0);
  if (span > 0.0) {
    const auto in = l.samples();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = std::clamp((in[i] - lo) / span, 0.0, 1.0);
  }
  return LuminanceField(l.width(), l.height(), std::move(out), Domain::log);
}

struct WindowSize {
  int width = 0;
  int height = 0;
  bool operator==(const WindowSize&) const = default;
};

/// Window sizes of the pyramid; index 0 is the full image, each next level halves (rounding up).
struct ScalePlan {
  std::vector<WindowSize> windows;

  std::size_t size() const noexcept { return windows.size(); }
  const WindowSize& operator[](std::size_t i) const { return windows[i]; }
};

inline ScalePlan scale_windows(int width, int height, std::optional<int> scales) {
  detail::check_dimensions(width, height);
  int count = 0;
  if (scales) {
    if (*scales < 1 || *scales > max_scale_count(width, height))
      throw Error(ErrorCode::invalid_argument,
                  "scale count " + std::to_string(*scales) + " halves below one pixel");
    count = *scales;
  } else {
    count = auto_scale_count(width, height);
  }
  ScalePlan plan;
  plan.windows.reserve(static_cast<std::size_t>(count));
  WindowSize w{width, height};
  for (int i = 0; i < count; ++i) {
    plan.windows.push_back(w);
    w = {detail::halve_up(w.width), detail::halve_up(w.height)};
  }
  return plan;
}

/// Local tone curve: levels[k] is the top display level of bin k.
struct ToneCurve {
  std::vector<double> edges;
  std::vector<double> levels;

  /// Piecewise-linear evaluation: inside bin k the output runs from levels[k-1]
  /// (0 for the first bin) to levels[k] by the value's fractional position in the bin.
  double operator()(double v) const {
    const int k = bin_index(edges, v);
    const auto ku = static_cast<std::size_t>(k);
    const double lo = k == 0 ? 0.0 : levels[ku - 1];
    const double width = edges[ku + 1] - edges[ku];
    const double t = std::clamp((v - edges[ku]) / width, 0.0, 1.0);
    return lo + t * (levels[ku] - lo);
  }
};

/// Normalized cumulative histogram scaled to the display range.
inline ToneCurve tone_curve(std::span<const std::uint32_t> populations,
                            std::span<const double> edges) {
  if (populations.empty() || edges.size() != populations.size() + 1)
    throw Error(ErrorCode::invalid_argument, "need n populations and n+1 edges");
  std::uint64_t total = 0;
  for (auto p : populations) total += p;
  if (total == 0) throw Error(ErrorCode::empty_window, "tone curve of an empty histogram");
  ToneCurve curve{{edges.begin(), edges.end()}, std::vector<double>(populations.size())};
  std::uint64_t cumulative = 0;
  for (std::size_t k = 0; k < populations.size(); ++k) {
    cumulative += populations[k];
    curve.levels[k] = kDisplayMax * static_cast<double>(cumulative) / static_cast<double>(total);
  }
  return curve;
}

namespace detail {

/// Per-pixel position on the global bin grid: the bin and the fractional offset inside it.
struct BinPosition {
  int bin = 0;
  double fraction = 0.0;
};

inline BinPosition bin_position(std::span<const double> edges, double v) {
  const int k = bin_index(edges, v);
  const auto ku = static_cast<std::size_t>(k);
  const double t = std::clamp((v - edges[ku]) / (edges[ku + 1] - edges[ku]), 0.0, 1.0);
  return {k, t};
}

/// Tone value of a pixel at `pos` against the windowed histogram of `r`. Only bins up to the
/// pixel's own are needed; the total is the window area because bins partition the image.
inline double tone_value(const IntegralHistogram& h, const WindowRect& r, BinPosition pos) {
  const std::uint32_t* a = h.cell(r.x0, r.y0);
  const std::uint32_t* b = h.cell(r.x1 + 1, r.y0);
  const std::uint32_t* c = h.cell(r.x1 + 1, r.y1 + 1);
  const std::uint32_t* d = h.cell(r.x0, r.y1 + 1);
  std::uint64_t below = 0;
  for (int k = 0; k < pos.bin; ++k) below += static_cast<std::uint32_t>(a[k] + c[k] - b[k] - d[k]);
  const std::uint32_t own = a[pos.bin] + c[pos.bin] - b[pos.bin] - d[pos.bin];
  const double total = static_cast<double>(r.area());
  const double lo = kDisplayMax * static_cast<double>(below) / total;
  const double hi = kDisplayMax * static_cast<double>(below + own) / total;
  return lo + pos.fraction * (hi - lo);
}

inline double texture_score(const IntegralImage& sum, const IntegralImage& sum_sq,
                            const WindowRect& r, double epsilon) {
  const double var = window_variance(sum, sum_sq, r);
  return var / (var + epsilon);
}

}  // namespace detail

/// Single-scale tone value of pixel (x, y) with log luminance `log_value`, using the window
/// of the given size placed around the pixel.
inline double tone_value_at(int x, int y, double log_value, WindowSize window,
                            const IntegralHistogram& h) {
  check_rect({x, y, x, y}, h.width(), h.height());
  const WindowRect r = window_around(x, y, window.width, window.height, h.width(), h.height());
  return detail::tone_value(h, r, detail::bin_position(h.edges(), log_value));
}

/// Textural score var / (var + epsilon) of the window around (x, y). The tables must be built
/// over the log field rescaled to [0, 1].
inline double texture_score_at(int x, int y, WindowSize window, const IntegralImage& sum,
                               const IntegralImage& sum_sq, double epsilon) {
  check_rect({x, y, x, y}, sum.width(), sum.height());
  const WindowRect r = window_around(x, y, window.width, window.height, sum.width(), sum.height());
  return detail::texture_score(sum, sum_sq, r, epsilon);
}

/// Weighted mean of per-scale tone values with weights a_i^i (i = 1 for the full-image scale).
/// Falls back to the full-image value when the weights sum below `tolerance`.
inline double fuse(std::span<const double> tones, std::span<const double> scores,
                   double tolerance) {
  if (tones.empty() || tones.size() != scores.size())
    throw Error(ErrorCode::invalid_argument, "fusion needs one score per tone value");
  if (tones.size() == 1) return tones[0];
  double num = 0.0;
  double den = 0.0;
  double weight = 1.0;
  double lo = tones[0];
  double hi = tones[0];
  for (std::size_t i = 0; i < tones.size(); ++i) {
    weight *= scores[i];
    num += weight * tones[i];
    den += weight;
    lo = std::min(lo, tones[i]);
    hi = std::max(hi, tones[i]);
  }
  if (!(den >= tolerance)) return tones[0];
  return std::clamp(num / den, lo, hi);
}

/// Prepared multi-scale operator for one luminance field: the shared integral histogram and
/// moment tables are built once; per-pixel queries are read-only and thread-safe.
class MultiScaleToneMapper {
 public:
  MultiScaleToneMapper(const LuminanceField& linear, const ToneParams& params)
      : params_(validate_params(params, linear.width(), linear.height())),
        log_(to_log_domain(linear, params_.log_floor)),
        plan_(scale_windows(linear.width(), linear.height(), params_.scales)),
        hist_(build_integral_histogram(log_, uniform_bin_edges(log_.min(), log_.max(),
                                                               params_.bins))) {
    const LuminanceField unit = normalize_unit(log_);
    sum_ = build_integral(unit);
    sum_sq_ = build_integral_of_squares(unit);
    positions_.reserve(log_.size());
    for (double v : log_.samples()) positions_.push_back(detail::bin_position(hist_.edges(), v));
  }

  const ToneParams& params() const noexcept { return params_; }
  const ScalePlan& plan() const noexcept { return plan_; }
  const LuminanceField& log_field() const noexcept { return log_; }
  const IntegralHistogram& histogram() const noexcept { return hist_; }
  int width() const noexcept { return log_.width(); }
  int height() const noexcept { return log_.height(); }

  double scale_tone(std::size_t scale, int x, int y) const {
    return detail::tone_value(hist_, window(scale, x, y), position(x, y));
  }

  double scale_score(std::size_t scale, int x, int y) const {
    return detail::texture_score(sum_, sum_sq_, window(scale, x, y), params_.epsilon);
  }

  double pixel(int x, int y) const {
    const std::size_t s = plan_.size();
    // Pyramids are short (ceil(log2(side)) + 1 levels at most).
    double tones[64];
    double scores[64];
    for (std::size_t i = 0; i < s; ++i) {
      const WindowRect r = window(i, x, y);
      tones[i] = detail::tone_value(hist_, r, position(x, y));
      scores[i] = detail::texture_score(sum_, sum_sq_, r, params_.epsilon);
    }
    return fuse({tones, s}, {scores, s}, params_.fallback_tolerance);
  }

  LuminanceField run(int threads = 1) const {
    return render(threads, [this](int x, int y) { return pixel(x, y); });
  }

  LuminanceField scale_tone_map(std::size_t scale, int threads = 1) const {
    return render(threads, [this, scale](int x, int y) { return scale_tone(scale, x, y); });
  }

  /// Textural scores of one scale, in [0, 1).
  LuminanceField scale_score_map(std::size_t scale, int threads = 1) const {
    return render(threads, [this, scale](int x, int y) { return scale_score(scale, x, y); },
                  Domain::log);
  }

 private:
  WindowRect window(std::size_t scale, int x, int y) const {
    const WindowSize w = plan_.windows.at(scale);
    return window_around(x, y, w.width, w.height, width(), height());
  }

  detail::BinPosition position(int x, int y) const {
    return positions_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width()) +
                      static_cast<std::size_t>(x)];
  }

  template <typename PixelFn>
  LuminanceField render(int threads, PixelFn&& fn, Domain domain = Domain::display) const {
    const int w = width();
    std::vector<double> out(log_.size());
    parallel_rows(height(), threads, [&](int y) {
      double* row = out.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
      for (int x = 0; x < w; ++x) row[x] = fn(x, y);
    });
    return LuminanceField(w, height(), std::move(out), domain);
  }

  ToneParams params_;
  LuminanceField log_;
  ScalePlan plan_;
  IntegralHistogram hist_;
  IntegralImage sum_;
  IntegralImage sum_sq_;
  std::vector<detail::BinPosition> positions_;
};

inline LuminanceField tonemap_luminance(const LuminanceField& linear, const ToneParams& params,
                                        int threads = 1) {
  if (linear.domain() != Domain::linear)
    throw Error(ErrorCode::invalid_argument, "tone mapping expects linear luminance");
  return MultiScaleToneMapper(linear, params).run(threads);
}

/// Reapplies the input chroma to the tone-mapped luminance: C_out = (C_in / L_in)^sat * L_out,
/// with L_in floored like the log transform and the result clamped to the display range.
inline DisplayImage restore_color(const WdrImage& img, const LuminanceField& linear,
                                  const LuminanceField& display, double sat,
                                  double relative_floor = ToneParams{}.log_floor) {
  if (linear.width() != img.width() || linear.height() != img.height() ||
      display.width() != img.width() || display.height() != img.height())
    throw Error(ErrorCode::invalid_argument, "color restoration inputs differ in size");
  if (!(sat > 0.0 && sat <= 1.0)) throw Error(ErrorCode::invalid_argument, "sat must lie in (0, 1]");
  const double floor = luminance_floor(linear, relative_floor);
  DisplayImage out{img.width(), img.height(), std::vector<double>(img.size()),
                   std::vector<double>(img.size()), std::vector<double>(img.size())};
  const auto lin = linear.samples();
  const auto disp = display.samples();
  auto restore = [&](std::span<const double> in, std::vector<double>& dst) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double ratio = in[i] / std::max(lin[i], floor);
      dst[i] = std::clamp(std::pow(ratio, sat) * disp[i], 0.0, kDisplayMax);
    }
  };
  restore(img.red(), out.red);
  restore(img.green(), out.green);
  restore(img.blue(), out.blue);
  return out;
}

/// Full color pipeline: luminance, multi-scale tone mapping, color restoration.
inline DisplayImage tonemap_image(const WdrImage& img, const ToneParams& params, int threads = 1) {
  const LuminanceField linear = extract_luminance(img);
  const ToneParams resolved = validate_params(params, img.width(), img.height());
  const LuminanceField display = tonemap_luminance(linear, resolved, threads);
  return restore_color(img, linear, display, resolved.sat, resolved.log_floor);
}

}  // namespace mshist
