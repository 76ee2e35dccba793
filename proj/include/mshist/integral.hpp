#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mshist/core.hpp"
#include "mshist/error.hpp"

namespace mshist {

/// Summed-area table with a zero guard row and column:
/// at(x, y) is the sum of all samples with x' < x and y' < y.
class IntegralImage {
 public:
  IntegralImage() = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double at(int x, int y) const noexcept {
    return table_[static_cast<std::size_t>(y) * stride() + static_cast<std::size_t>(x)];
  }

  std::span<const double> table() const noexcept { return table_; }

 private:
  friend IntegralImage build_integral(std::span<const double>, int, int);

  std::size_t stride() const noexcept { return static_cast<std::size_t>(width_) + 1; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

inline IntegralImage build_integral(std::span<const double> samples, int width, int height) {
  detail::check_dimensions(width, height);
  if (samples.size() != detail::pixel_count(width, height))
    throw Error(ErrorCode::invalid_argument, "sample count does not match dimensions");

  IntegralImage t;
  t.width_ = width;
  t.height_ = height;
  const std::size_t stride = t.stride();
  t.table_.assign(stride * (static_cast<std::size_t>(height) + 1), 0.0);
  for (int y = 0; y < height; ++y) {
    const double* src = samples.data() + static_cast<std::size_t>(y) * width;
    const double* above = t.table_.data() + static_cast<std::size_t>(y) * stride;
    double* row = t.table_.data() + static_cast<std::size_t>(y + 1) * stride;
    double running = 0.0;
    for (int x = 0; x < width; ++x) {
      running += src[x];
      row[x + 1] = above[x + 1] + running;
    }
  }
  return t;
}

inline IntegralImage build_integral(const LuminanceField& f) {
  return build_integral(f.samples(), f.width(), f.height());
}

/// Integral image of the squared samples, the second moment table for window_variance.
inline IntegralImage build_integral_of_squares(const LuminanceField& f) {
  std::vector<double> sq(f.samples().begin(), f.samples().end());
  for (double& v : sq) v *= v;
  return build_integral(sq, f.width(), f.height());
}

/// Sum over the inclusive rectangle via the four corners of the table.
inline double rect_sum(const IntegralImage& t, const WindowRect& r) {
  check_rect(r, t.width(), t.height());
  return t.at(r.x1 + 1, r.y1 + 1) - t.at(r.x0, r.y1 + 1) - t.at(r.x1 + 1, r.y0) + t.at(r.x0, r.y0);
}

/// Population variance of the window, from first and second moment tables.
/// Results within the rounding noise of the corner lookups are reported as 0, so constant
/// windows give exactly zero and cancellation never goes negative.
inline double window_variance(const IntegralImage& sum, const IntegralImage& sum_sq,
                              const WindowRect& r) {
  if (r.area() == 0) throw Error(ErrorCode::empty_window, "variance of an empty window");
  const double n = static_cast<double>(r.area());
  const double mean = rect_sum(sum, r) / n;
  const double mean_sq = rect_sum(sum_sq, r) / n;
  const double var = mean_sq - mean * mean;
  const double corners = std::abs(sum_sq.at(r.x1 + 1, r.y1 + 1)) + std::abs(sum_sq.at(r.x0, r.y1 + 1)) +
                         std::abs(sum_sq.at(r.x1 + 1, r.y0)) + std::abs(sum_sq.at(r.x0, r.y0));
  const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (corners / n + mean_sq);
  return var > noise ? var : 0.0;
}

/// n+1 equally spaced edges over [lo, hi]; the last edge is exactly hi.
/// A degenerate range (hi <= lo) yields edges over [hi - 1, hi] so every sample sits on the top edge.
inline std::vector<double> uniform_bin_edges(double lo, double hi, int bins) {
  if (bins < 1) throw Error(ErrorCode::invalid_argument, "bins must be >= 1");
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::invalid_argument, "bin range must be finite");
  if (!(hi > lo)) lo = hi - 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  const double step = (hi - lo) / bins;
  for (int k = 0; k < bins; ++k) edges[static_cast<std::size_t>(k)] = lo + step * k;
  edges.back() = hi;
  return edges;
}

/// Bin of `v` under the fixed tie rule: a value on the upper edge of bin k goes to bin k+1,
/// the last edge belongs to the last bin. Values outside the edge range clamp to the end bins.
inline int bin_index(std::span<const double> edges, double v) {
  const int bins = static_cast<int>(edges.size()) - 1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const int k = static_cast<int>(it - edges.begin()) - 1;
  return std::clamp(k, 0, bins - 1);
}

/// One integral image of bin-indicator planes per histogram bin. Counts are stored
/// interleaved (all bins of one table cell are contiguous) so a window query touches
/// four contiguous runs.
class IntegralHistogram {
 public:
  int bins() const noexcept { return bins_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const double> edges() const noexcept { return edges_; }

  /// Guard-row convention, as IntegralImage::at, for channel k.
  std::uint32_t at(int k, int x, int y) const noexcept { return cell(x, y)[k]; }

  const std::uint32_t* cell(int x, int y) const noexcept {
    return counts_.data() +
           (static_cast<std::size_t>(y) * stride() + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(bins_);
  }

 private:
  friend IntegralHistogram build_integral_histogram(const LuminanceField&, std::vector<double>);

  std::size_t stride() const noexcept { return static_cast<std::size_t>(width_) + 1; }

  int bins_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> edges_;
  std::vector<std::uint32_t> counts_;
};

inline IntegralHistogram build_integral_histogram(const LuminanceField& l,
                                                  std::vector<double> edges) {
  if (edges.size() < 2) throw Error(ErrorCode::invalid_argument, "need at least two bin edges");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1]))
      throw Error(ErrorCode::invalid_argument,
                  "bin edges must be strictly ascending (edge " + std::to_string(k) + ")");

  IntegralHistogram h;
  h.bins_ = static_cast<int>(edges.size()) - 1;
  h.width_ = l.width();
  h.height_ = l.height();
  h.edges_ = std::move(edges);

  const auto n = static_cast<std::size_t>(h.bins_);
  const std::size_t stride = h.stride();
  h.counts_.assign(stride * (static_cast<std::size_t>(h.height_) + 1) * n, 0u);
  std::vector<std::uint32_t> running(n);
  for (int y = 0; y < h.height_; ++y) {
    std::fill(running.begin(), running.end(), 0u);
    const std::uint32_t* above = h.counts_.data() + static_cast<std::size_t>(y) * stride * n;
    std::uint32_t* row = h.counts_.data() + static_cast<std::size_t>(y + 1) * stride * n;
    for (int x = 0; x < h.width_; ++x) {
      ++running[static_cast<std::size_t>(bin_index(h.edges_, l.at(x, y)))];
      const std::size_t cell = (static_cast<std::size_t>(x) + 1) * n;
      for (std::size_t k = 0; k < n; ++k) row[cell + k] = above[cell + k] + running[k];
    }
  }
  return h;
}

/// Per-bin pixel counts of the rectangle; `out` must hold bins() entries.
inline void window_bin_populations(const IntegralHistogram& h, const WindowRect& r,
                                   std::span<std::uint32_t> out) {
  check_rect(r, h.width(), h.height());
  if (out.size() != static_cast<std::size_t>(h.bins()))
    throw Error(ErrorCode::invalid_argument, "population buffer size must equal bin count");
  const std::uint32_t* a = h.cell(r.x0, r.y0);
  const std::uint32_t* b = h.cell(r.x1 + 1, r.y0);
  const std::uint32_t* c = h.cell(r.x1 + 1, r.y1 + 1);
  const std::uint32_t* d = h.cell(r.x0, r.y1 + 1);
  // Unsigned wrap-around cancels exactly: the true result is non-negative.
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] + c[k] - b[k] - d[k];
}

inline std::vector<std::uint32_t> window_bin_populations(const IntegralHistogram& h,
                                                         const WindowRect& r) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(h.bins()));
  window_bin_populations(h, r, out);
  return out;
}

}  // namespace mshist
