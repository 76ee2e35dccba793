#pragma once

// Brute-force reference implementations. These deliberately avoid the library's integral
// structures and fast paths: every query loops over the pixels it covers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace oracle {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline double rect_sum(const Image& img, int x0, int y0, int x1, int y1) {
  double s = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) s += img.at(x, y);
  return s;
}

/// Two-pass population variance.
inline double variance(const Image& img, int x0, int y0, int x1, int y1) {
  const double n = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
  const double mean = rect_sum(img, x0, y0, x1, y1) / n;
  double ss = 0.0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) ss += (img.at(x, y) - mean) * (img.at(x, y) - mean);
  return ss / n;
}

/// Bin by linear scan: [e_k, e_{k+1}) for all but the last bin, which also takes its upper edge.
inline int bin_of(const std::vector<double>& edges, double v) {
  const int n = static_cast<int>(edges.size()) - 1;
  if (v < edges[0]) return 0;
  for (int k = 0; k < n; ++k)
    if (v >= edges[k] && v < edges[k + 1]) return k;
  return n - 1;
}

inline std::vector<double> uniform_edges(double lo, double hi, int n) {
  std::vector<double> e(n + 1);
  for (int k = 0; k < n; ++k) e[k] = lo + (hi - lo) / n * k;
  e[n] = hi;
  return e;
}

inline std::vector<std::uint32_t> histogram(const Image& img, const std::vector<double>& edges,
                                            int x0, int y0, int x1, int y1) {
  std::vector<std::uint32_t> h(edges.size() - 1, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) ++h[bin_of(edges, img.at(x, y))];
  return h;
}

/// Tone value from a freshly counted histogram: cumulative levels scaled to 255 and linear
/// interpolation inside the value's bin.
inline double tone_from_histogram(const std::vector<std::uint32_t>& h,
                                  const std::vector<double>& edges, double v) {
  double total = 0.0;
  for (auto c : h) total += c;
  std::vector<double> u(h.size());
  double cum = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    cum += h[k];
    u[k] = cum / total * 255.0;
  }
  const int k = bin_of(edges, v);
  const double lo = k == 0 ? 0.0 : u[k - 1];
  double t = (v - edges[k]) / (edges[k + 1] - edges[k]);
  t = std::min(1.0, std::max(0.0, t));
  return lo + t * (u[k] - lo);
}

/// Start of a window of size `size` around `c`, kept inside [0, extent).
inline int window_start(int c, int size, int extent) {
  size = std::min(size, extent);
  int s = c - size / 2;
  if (s < 0) s = 0;
  if (s + size > extent) s = extent - size;
  return s;
}

inline double tone_at(const Image& log_img, const std::vector<double>& edges, int x, int y,
                      int ww, int wh) {
  const int x0 = window_start(x, ww, log_img.width);
  const int y0 = window_start(y, wh, log_img.height);
  const int x1 = x0 + std::min(ww, log_img.width) - 1;
  const int y1 = y0 + std::min(wh, log_img.height) - 1;
  return tone_from_histogram(histogram(log_img, edges, x0, y0, x1, y1), edges, log_img.at(x, y));
}

/// Single-scale global operator on linear luminance: log with max-relative floor, uniform edges
/// over the log range, one whole-image histogram.
inline Image global_operator(const Image& linear, int bins, double rel_floor) {
  double peak = 0.0;
  for (double v : linear.v) peak = std::max(peak, v);
  const double floor = rel_floor * peak;
  Image l{linear.width, linear.height, {}};
  for (double v : linear.v) l.v.push_back(std::log(std::max(v, floor)));
  double lo = l.v[0], hi = l.v[0];
  for (double v : l.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) lo = hi - 1.0;
  const auto edges = uniform_edges(lo, hi, bins);
  const auto h = histogram(l, edges, 0, 0, l.width - 1, l.height - 1);
  Image out{l.width, l.height, {}};
  for (double v : l.v) out.v.push_back(tone_from_histogram(h, edges, v));
  return out;
}

/// Byte-level RGBE decoder for -Y h +X w files, flat or new-style run-length scanlines.
struct DecodedRgbe {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // interleaved, top row first
};

inline DecodedRgbe decode_rgbe(const std::vector<std::uint8_t>& f) {
  std::size_t p = 0;
  auto line = [&] {
    std::string s;
    while (f.at(p) != '\n') s.push_back(static_cast<char>(f[p++]));
    ++p;
    return s;
  };
  line();  // signature
  while (!line().empty()) {
  }
  const std::string res = line();
  DecodedRgbe d;
  std::sscanf(res.c_str(), "-Y %d +X %d", &d.height, &d.width);
  std::vector<std::uint8_t> q(4 * d.width);
  for (int y = 0; y < d.height; ++y) {
    if (d.width >= 8 && f.at(p) == 2 && f.at(p + 1) == 2) {
      p += 4;
      for (int c = 0; c < 4; ++c) {
        int x = 0;
        while (x < d.width) {
          int n = f.at(p++);
          if (n > 128) {
            n -= 128;
            const std::uint8_t val = f.at(p++);
            while (n--) q[4 * x++ + c] = val;
          } else {
            while (n--) q[4 * x++ + c] = f.at(p++);
          }
        }
      }
    } else {
      for (int i = 0; i < 4 * d.width; ++i) q[i] = f.at(p++);
    }
    for (int x = 0; x < d.width; ++x) {
      const int e = q[4 * x + 3];
      for (int c = 0; c < 3; ++c) {
        float v = 0.0f;
        if (e != 0) {
          v = static_cast<float>((q[4 * x + c] + 0.5) / 256.0);
          for (int k = 0; k < e - 128; ++k) v *= 2.0f;
          for (int k = 0; k < 128 - e; ++k) v *= 0.5f;
        }
        d.rgb.push_back(v);
      }
    }
  }
  return d;
}

/// Byte-level PFM decoder; gray files are replicated to three channels, rows returned top first.
inline DecodedRgbe decode_pfm(const std::vector<std::uint8_t>& f) {
  const bool color = f[1] == 'F';
  std::string header;
  std::size_t p = 0;
  int newlines = 0;
  while (newlines < 3) {
    if (f[p] == '\n') ++newlines;
    header.push_back(static_cast<char>(f[p++]));
  }
  DecodedRgbe d;
  double scale = 0.0;
  char magic[3] = {};
  std::sscanf(header.c_str(), "%2s %d %d %lf", magic, &d.width, &d.height, &scale);
  const int ch = color ? 3 : 1;
  d.rgb.assign(static_cast<std::size_t>(3) * d.width * d.height, 0.0f);
  for (int row = 0; row < d.height; ++row) {
    const int y = d.height - 1 - row;
    for (int x = 0; x < d.width; ++x) {
      for (int c = 0; c < ch; ++c) {
        std::uint32_t bits;
        if (scale < 0)
          bits = f[p] | f[p + 1] << 8 | f[p + 2] << 16 | static_cast<std::uint32_t>(f[p + 3]) << 24;
        else
          bits = static_cast<std::uint32_t>(f[p]) << 24 | f[p + 1] << 16 | f[p + 2] << 8 | f[p + 3];
        p += 4;
        float v;
        std::memcpy(&v, &bits, 4);
        if (v < 0.0f) v = 0.0f;
        for (int r = 0; r < (color ? 1 : 3); ++r)
          d.rgb[3 * (static_cast<std::size_t>(y) * d.width + x) + (color ? c : r)] = v;
      }
    }
  }
  return d;
}

}  // namespace oracle
