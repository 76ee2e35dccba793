#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mshist/core.hpp"
#include "mshist/error.hpp"

namespace mshist {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class ImageFileKind { radiance_hdr, pfm, png, ppm };

inline const char* to_string(ImageFileKind k) {
  switch (k) {
    case ImageFileKind::radiance_hdr: return "radiance_hdr";
    case ImageFileKind::pfm: return "pfm";
    case ImageFileKind::png: return "png";
    case ImageFileKind::ppm: return "ppm";
  }
  return "?";
}

namespace detail {

inline bool starts_with(ByteView bytes, std::string_view prefix) {
  return bytes.size() >= prefix.size() &&
         std::memcmp(bytes.data(), prefix.data(), prefix.size()) == 0;
}

inline bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Largest accepted side and pixel count for decoded images.
inline constexpr long long kMaxSide = 1 << 16;
inline constexpr long long kMaxPixels = 1LL << 28;

inline void check_decoded_dimensions(long long w, long long h, std::size_t offset) {
  if (w < 1 || h < 1 || w > kMaxSide || h > kMaxSide || w * h > kMaxPixels)
    throw Error(ErrorCode::dimension_overflow,
                "image size " + std::to_string(w) + "x" + std::to_string(h) + " not supported",
                offset);
}

}  // namespace detail

/// File kind from the leading magic bytes.
inline ImageFileKind detect_kind(ByteView bytes) {
  if (detail::starts_with(bytes, "#?RADIANCE") || detail::starts_with(bytes, "#?RGBE"))
    return ImageFileKind::radiance_hdr;
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == 'F' || bytes[1] == 'f') &&
      detail::is_space(bytes[2]))
    return ImageFileKind::pfm;
  if (detail::starts_with(bytes, "\x89PNG\r\n\x1a\n")) return ImageFileKind::png;
  if (bytes.size() >= 3 && bytes[0] == 'P' && bytes[1] == '6' && detail::is_space(bytes[2]))
    return ImageFileKind::ppm;
  throw Error(ErrorCode::bad_magic, "unrecognized image signature", 0);
}

// ---------------------------------------------------------------------------------------------
// Radiance RGBE

/// Linear value of one RGBE channel: (m + 0.5) / 256 * 2^(e - 128), zero when e == 0.
inline double rgbe_channel(std::uint8_t mantissa, std::uint8_t exponent) {
  if (exponent == 0) return 0.0;
  return std::ldexp(static_cast<double>(mantissa) + 0.5, static_cast<int>(exponent) - (128 + 8));
}

/// Shared-exponent encoding of one pixel.
inline std::array<std::uint8_t, 4> rgbe_encode(double r, double g, double b) {
  const double v = std::max({r, g, b});
  if (!(v >= 1e-32)) return {0, 0, 0, 0};
  int e = 0;
  const double m = std::frexp(v, &e);
  if (e + 128 > 255) return {255, 255, 255, 255};
  const double scale = m * 256.0 / v;
  auto q = [scale](double c) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(c * scale), 0.0, 255.0));
  };
  if (e + 128 < 1) return {0, 0, 0, 0};
  return {q(r), q(g), q(b), static_cast<std::uint8_t>(e + 128)};
}

namespace detail {

class Cursor {
 public:
  explicit Cursor(ByteView bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::uint8_t next(const char* what) {
    if (at_end()) throw Error(ErrorCode::truncated, what, pos_);
    return bytes_[pos_++];
  }

  /// Line without its terminating newline; throws when no newline is found.
  std::string line(const char* what) {
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
    if (pos_ >= bytes_.size()) throw Error(ErrorCode::truncated, what, start);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + start), pos_ - start);
    ++pos_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  ByteView take(std::size_t n, ErrorCode code, const char* what) {
    if (remaining() < n) throw Error(code, what, pos_);
    ByteView v = bytes_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  std::uint8_t peek(std::size_t ahead) const noexcept { return bytes_[pos_ + ahead]; }

 private:
  ByteView bytes_;
  std::size_t pos_ = 0;
};

struct RadianceLayout {
  bool major_is_y = true;  // scanlines run along x
  bool major_forward = true;
  bool minor_forward = true;
  int width = 0;
  int height = 0;
  int scanlines = 0;
  int scan_length = 0;
};

inline RadianceLayout parse_resolution(const std::string& line, std::size_t offset) {
  char s1 = 0, a1 = 0, s2 = 0, a2 = 0;
  long long n1 = 0, n2 = 0;
  char trailing = 0;
  const int got =
      std::sscanf(line.c_str(), " %c%c %lld %c%c %lld %c", &s1, &a1, &n1, &s2, &a2, &n2, &trailing);
  auto valid_sign = [](char c) { return c == '+' || c == '-'; };
  if (got != 6 || !valid_sign(s1) || !valid_sign(s2) ||
      !((a1 == 'Y' && a2 == 'X') || (a1 == 'X' && a2 == 'Y')))
    throw Error(ErrorCode::unsupported_format, "bad resolution line '" + line + "'", offset);
  RadianceLayout layout;
  layout.major_is_y = a1 == 'Y';
  // -Y lists rows top to bottom; +X lists columns left to right.
  layout.major_forward = layout.major_is_y ? s1 == '-' : s1 == '+';
  layout.minor_forward = layout.major_is_y ? s2 == '+' : s2 == '-';
  if (layout.major_is_y)
    check_decoded_dimensions(n2, n1, offset);
  else
    check_decoded_dimensions(n1, n2, offset);
  layout.scanlines = static_cast<int>(n1);
  layout.scan_length = static_cast<int>(n2);
  layout.width = static_cast<int>(layout.major_is_y ? n2 : n1);
  layout.height = static_cast<int>(layout.major_is_y ? n1 : n2);
  return layout;
}

/// Reads one scanline of `length` RGBE quadruples into `out` (4 * length bytes).
inline void read_rgbe_scanline(Cursor& in, int length, std::span<std::uint8_t> out) {
  const std::size_t start = in.offset();
  const bool new_rle = length >= 8 && length <= 0x7fff && in.remaining() >= 4 &&
                       in.peek(0) == 2 && in.peek(1) == 2 && (in.peek(2) & 0x80) == 0;
  if (new_rle) {
    in.next("scanline header");
    in.next("scanline header");
    const int hi = in.next("scanline header");
    const int lo = in.next("scanline header");
    const int declared = (hi << 8) | lo;
    if (declared != length)
      throw Error(ErrorCode::corrupt_rle,
                  "scanline length " + std::to_string(declared) + " != " + std::to_string(length),
                  start);
    for (int c = 0; c < 4; ++c) {
      int x = 0;
      while (x < length) {
        const std::size_t run_at = in.offset();
        int count = in.next("run-length scanline");
        if (count > 128) {
          count -= 128;
          if (x + count > length) throw Error(ErrorCode::corrupt_rle, "run overruns scanline", run_at);
          const std::uint8_t v = in.next("run-length scanline");
          for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(4 * (x++) + c)] = v;
        } else {
          if (count == 0 || x + count > length)
            throw Error(ErrorCode::corrupt_rle, "bad literal count", run_at);
          for (int i = 0; i < count; ++i)
            out[static_cast<std::size_t>(4 * (x++) + c)] = in.next("run-length scanline");
        }
      }
    }
    return;
  }
  // Flat pixels, with the original (1,1,1,n) repeat encoding.
  int x = 0;
  int shift = 0;
  while (x < length) {
    const std::size_t px_at = in.offset();
    ByteView px = in.take(4, ErrorCode::truncated, "flat scanline");
    if (px[0] == 1 && px[1] == 1 && px[2] == 1) {
      if (x == 0) throw Error(ErrorCode::corrupt_rle, "repeat run with no previous pixel", px_at);
      const long long count = static_cast<long long>(px[3]) << shift;
      if (x + count > length) throw Error(ErrorCode::corrupt_rle, "repeat run overruns scanline", px_at);
      for (long long i = 0; i < count; ++i, ++x)
        std::copy_n(&out[static_cast<std::size_t>(4 * (x - 1))], 4, &out[static_cast<std::size_t>(4 * x)]);
      shift += 8;
    } else {
      std::copy(px.begin(), px.end(), &out[static_cast<std::size_t>(4 * x)]);
      ++x;
      shift = 0;
    }
  }
}

}  // namespace detail

inline WdrImage read_radiance_hdr(ByteView bytes) {
  detail::Cursor in(bytes);
  if (!detail::starts_with(bytes, "#?RADIANCE") && !detail::starts_with(bytes, "#?RGBE"))
    throw Error(ErrorCode::bad_magic, "missing #?RADIANCE / #?RGBE signature", 0);
  in.line("signature line");

  double exposure = 1.0;
  for (;;) {
    const std::size_t at = in.offset();
    const std::string line = in.line("header");
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0) {
      std::string value = line.substr(7);
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
      if (value != "32-bit_rle_rgbe")
        throw Error(ErrorCode::unsupported_format, "pixel format '" + value + "'", at);
    } else if (line.rfind("EXPOSURE=", 0) == 0) {
      char* end = nullptr;
      const double e = std::strtod(line.c_str() + 9, &end);
      if (end == line.c_str() + 9 || !(e > 0.0) || !std::isfinite(e))
        throw Error(ErrorCode::unsupported_format, "bad EXPOSURE value", at);
      exposure *= e;
    }
  }
  const std::size_t res_at = in.offset();
  const auto layout = detail::parse_resolution(in.line("resolution line"), res_at);

  const std::size_t n = detail::pixel_count(layout.width, layout.height);
  std::vector<double> r(n), g(n), b(n);
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(4 * layout.scan_length));
  for (int s = 0; s < layout.scanlines; ++s) {
    detail::read_rgbe_scanline(in, layout.scan_length, scan);
    const int major = layout.major_forward ? s : layout.scanlines - 1 - s;
    for (int p = 0; p < layout.scan_length; ++p) {
      const int minor = layout.minor_forward ? p : layout.scan_length - 1 - p;
      const int x = layout.major_is_y ? minor : major;
      const int y = layout.major_is_y ? major : minor;
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(layout.width) +
                            static_cast<std::size_t>(x);
      const std::uint8_t* q = &scan[static_cast<std::size_t>(4 * p)];
      r[i] = rgbe_channel(q[0], q[3]) / exposure;
      g[i] = rgbe_channel(q[1], q[3]) / exposure;
      b[i] = rgbe_channel(q[2], q[3]) / exposure;
    }
  }
  return WdrImage(layout.width, layout.height, std::move(r), std::move(g), std::move(b));
}

namespace detail {

// Run-length encodes one component plane of a scanline (runs of 4+ equal bytes become runs).
inline void rle_encode_component(const std::uint8_t* data, int length, int stride, Bytes& out) {
  constexpr int kMinRun = 4;
  int cur = 0;
  auto at = [&](int i) { return data[static_cast<std::size_t>(i * stride)]; };
  while (cur < length) {
    int beg_run = cur;
    int run_count = 0;
    int old_run_count = 0;
    while (run_count < kMinRun && beg_run < length) {
      beg_run += run_count;
      old_run_count = run_count;
      run_count = 1;
      while (beg_run + run_count < length && run_count < 127 &&
             at(beg_run) == at(beg_run + run_count))
        ++run_count;
    }
    if (old_run_count > 1 && old_run_count == beg_run - cur) {
      out.push_back(static_cast<std::uint8_t>(128 + old_run_count));
      out.push_back(at(cur));
      cur = beg_run;
    }
    while (cur < beg_run) {
      const int nonrun = std::min(128, beg_run - cur);
      out.push_back(static_cast<std::uint8_t>(nonrun));
      for (int i = 0; i < nonrun; ++i) out.push_back(at(cur + i));
      cur += nonrun;
    }
    if (run_count >= kMinRun) {
      out.push_back(static_cast<std::uint8_t>(128 + run_count));
      out.push_back(at(beg_run));
      cur += run_count;
    }
  }
}

}  // namespace detail

/// Radiance file with a -Y h +X w layout; run-length scanlines where the format allows them.
inline Bytes write_radiance_hdr(const WdrImage& img, bool run_length = true) {
  const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " +
                             std::to_string(img.height()) + " +X " +
                             std::to_string(img.width()) + "\n";
  Bytes out(header.begin(), header.end());
  const int w = img.width();
  std::vector<std::uint8_t> scan(static_cast<std::size_t>(4 * w));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                            static_cast<std::size_t>(x);
      const auto q = rgbe_encode(img.red()[i], img.green()[i], img.blue()[i]);
      std::copy(q.begin(), q.end(), &scan[static_cast<std::size_t>(4 * x)]);
    }
    if (run_length && w >= 8 && w <= 0x7fff) {
      out.insert(out.end(), {2, 2, static_cast<std::uint8_t>(w >> 8),
                             static_cast<std::uint8_t>(w & 0xff)});
      for (int c = 0; c < 4; ++c) detail::rle_encode_component(scan.data() + c, w, 4, out);
    } else {
      out.insert(out.end(), scan.begin(), scan.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// PFM

namespace detail {

inline void skip_space(Cursor& in) {
  while (!in.at_end() && is_space(in.peek(0))) in.next("header");
}

inline std::string token(Cursor& in, const char* what) {
  skip_space(in);
  std::string t;
  while (!in.at_end() && !is_space(in.peek(0))) t.push_back(static_cast<char>(in.next(what)));
  if (t.empty()) throw Error(ErrorCode::truncated, what, in.offset());
  return t;
}

inline long long parse_int(const std::string& t, std::size_t offset, const char* what) {
  if (t.empty() || t.size() > 12 || !std::all_of(t.begin(), t.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
      }))
    throw Error(ErrorCode::dimension_overflow, std::string(what) + " '" + t + "'", offset);
  return std::stoll(t);
}

}  // namespace detail

/// Decodes a PF (color) or Pf (gray) float map. Negative samples clamp to zero and are counted
/// in `clamped_negatives`.
inline WdrImage read_pfm(ByteView bytes, std::size_t& clamped_negatives) {
  clamped_negatives = 0;
  if (bytes.size() < 3 || bytes[0] != 'P' || (bytes[1] != 'F' && bytes[1] != 'f') ||
      !detail::is_space(bytes[2]))
    throw Error(ErrorCode::bad_magic, "missing PF / Pf signature", 0);
  const int channels = bytes[1] == 'F' ? 3 : 1;
  detail::Cursor in(bytes);
  in.next("signature");
  in.next("signature");

  std::size_t at = in.offset();
  const long long w = detail::parse_int(detail::token(in, "width"), at, "width");
  at = in.offset();
  const long long h = detail::parse_int(detail::token(in, "height"), at, "height");
  detail::check_decoded_dimensions(w, h, at);
  at = in.offset();
  const std::string scale_text = detail::token(in, "scale");
  char* end = nullptr;
  const double scale = std::strtod(scale_text.c_str(), &end);
  if (end != scale_text.c_str() + scale_text.size() || scale == 0.0 || !std::isfinite(scale))
    throw Error(ErrorCode::unsupported_format, "bad scale '" + scale_text + "'", at);
  if (in.at_end() || !detail::is_space(in.peek(0)))
    throw Error(ErrorCode::truncated, "missing separator before payload", in.offset());
  in.next("separator");

  const bool little = scale < 0.0;
  const std::size_t n = detail::pixel_count(static_cast<int>(w), static_cast<int>(h));
  const std::size_t payload_at = in.offset();
  const ByteView payload =
      in.take(n * static_cast<std::size_t>(channels) * 4, ErrorCode::short_payload, "PFM payload");

  std::vector<double> planes[3] = {std::vector<double>(n), std::vector<double>(n),
                                   std::vector<double>(n)};
  std::size_t k = 0;
  for (long long row = 0; row < h; ++row) {
    const long long y = h - 1 - row;  // bottom row first
    for (long long x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c, ++k) {
        std::uint8_t b[4];
        std::memcpy(b, payload.data() + 4 * k, 4);
        if (little != (std::endian::native == std::endian::little)) {
          std::swap(b[0], b[3]);
          std::swap(b[1], b[2]);
        }
        float f;
        std::memcpy(&f, b, 4);
        if (!std::isfinite(f))
          throw Error(ErrorCode::invalid_sample, "non-finite sample", payload_at + 4 * k);
        if (f < 0.0f) {
          f = 0.0f;
          ++clamped_negatives;
        }
        planes[c][static_cast<std::size_t>(y * w + x)] = f;
      }
    }
  }
  if (channels == 1) {
    planes[1] = planes[0];
    planes[2] = planes[0];
  }
  return WdrImage(static_cast<int>(w), static_cast<int>(h), std::move(planes[0]),
                  std::move(planes[1]), std::move(planes[2]));
}

inline WdrImage read_pfm(ByteView bytes) {
  std::size_t ignored = 0;
  return read_pfm(bytes, ignored);
}

/// Little-endian color PFM.
inline Bytes write_pfm(const WdrImage& img) {
  const std::string header =
      "PF\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + img.size() * 12);
  for (int row = img.height() - 1; row >= 0; --row) {
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(row) * static_cast<std::size_t>(img.width()) +
                            static_cast<std::size_t>(x);
      for (double v : {img.red()[i], img.green()[i], img.blue()[i]}) {
        const float f = static_cast<float>(v);
        std::uint8_t b[4];
        std::memcpy(b, &f, 4);
        if (std::endian::native == std::endian::big) {
          std::swap(b[0], b[3]);
          std::swap(b[1], b[2]);
        }
        out.insert(out.end(), b, b + 4);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Display images (8-bit PNG / binary PPM)

enum class DisplayKind { png, ppm };

/// Round half away from zero to an 8-bit level.
inline std::uint8_t quantize_display(double v) { return static_cast<std::uint8_t>(std::lround(v)); }

namespace detail {

inline std::vector<std::uint8_t> interleave_display(const DisplayImage& img) {
  const std::size_t n = detail::pixel_count(img.width, img.height);
  if (img.red.size() != n || img.green.size() != n || img.blue.size() != n)
    throw Error(ErrorCode::invalid_argument, "display planes must hold width*height samples");
  std::vector<std::uint8_t> rgb(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v[3] = {img.red[i], img.green[i], img.blue[i]};
    for (int c = 0; c < 3; ++c) {
      if (!(v[c] >= 0.0 && v[c] <= kDisplayMax))
        throw Error(ErrorCode::out_of_range_sample,
                    "display sample " + std::to_string(v[c]) + " at pixel " + std::to_string(i));
      rgb[3 * i + static_cast<std::size_t>(c)] = quantize_display(v[c]);
    }
  }
  return rgb;
}

// libpng reports through these instead of printing to stderr; the error path unwinds to the
// setjmp in the caller.
inline void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
inline void png_quiet_warning(png_structp, png_const_charp) {}

struct PngWriteState {
  Bytes* out;
};

inline void png_write_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + length);
}

inline void png_flush_noop(png_structp) {}

// Returns false when libpng reported an error; no C++ objects live in this frame.
inline bool encode_png_rows(png_structp png, png_infop info, PngWriteState* state, int width,
                            int height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, state, png_write_bytes, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

inline Bytes encode_png(const std::vector<std::uint8_t>& rgb, int width, int height) {
  Bytes out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(rgb.data()) +
                                        static_cast<std::size_t>(y) * 3 *
                                            static_cast<std::size_t>(width);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error,
                                                 png_quiet_warning);
  if (!png) throw Error(ErrorCode::io_failure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  PngWriteState state{&out};
  const bool ok = info && encode_png_rows(png, info, &state, width, height, rows.data());
  png_destroy_write_struct(&png, info ? &info : nullptr);
  if (!ok) throw Error(ErrorCode::io_failure, "libpng failed to encode image");
  return out;
}

struct PngReadState {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_read_bytes(png_structp png, png_bytep out, png_size_t length) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->size - st->pos < length) png_error(png, "truncated PNG stream");
  std::memcpy(out, st->data + st->pos, length);
  st->pos += length;
}

struct PngHeader {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
};

inline bool decode_png_header(png_structp png, png_infop info, PngReadState* state,
                              PngHeader* header) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, state, png_read_bytes);
  png_read_info(png, info);
  header->width = png_get_image_width(png, info);
  header->height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  return true;
}

inline bool decode_png_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

inline DisplayImage decode_png(ByteView bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error,
                                               png_quiet_warning);
  if (!png) throw Error(ErrorCode::io_failure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadState state{bytes.data(), bytes.size(), 0};
  PngHeader header;
  bool ok = info && decode_png_header(png, info, &state, &header);
  std::vector<std::uint8_t> rgb;
  if (ok) {
    ok = header.width >= 1 && header.height >= 1 && header.width <= kMaxSide &&
         header.height <= kMaxSide;
    if (ok) {
      rgb.resize(3 * static_cast<std::size_t>(header.width) * header.height);
      std::vector<png_bytep> rows(header.height);
      for (png_uint_32 y = 0; y < header.height; ++y) rows[y] = rgb.data() + 3 * y * header.width;
      ok = decode_png_rows(png, rows.data());
    }
  }
  png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  if (!ok) throw Error(ErrorCode::unsupported_format, "libpng could not decode image", state.pos);

  const int w = static_cast<int>(header.width);
  const int h = static_cast<int>(header.height);
  const std::size_t n = pixel_count(w, h);
  DisplayImage img{w, h, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    img.red[i] = rgb[3 * i];
    img.green[i] = rgb[3 * i + 1];
    img.blue[i] = rgb[3 * i + 2];
  }
  return img;
}

inline void skip_ppm_space(Cursor& in) {
  for (;;) {
    skip_space(in);
    if (in.at_end() || in.peek(0) != '#') return;
    while (!in.at_end() && in.peek(0) != '\n') in.next("comment");
  }
}

inline DisplayImage decode_ppm(ByteView bytes) {
  Cursor in(bytes);
  if (bytes.size() < 3 || bytes[0] != 'P' || bytes[1] != '6' || !is_space(bytes[2]))
    throw Error(ErrorCode::bad_magic, "missing P6 signature", 0);
  in.next("signature");
  in.next("signature");
  long long fields[3];
  for (auto& f : fields) {
    skip_ppm_space(in);
    const std::size_t at = in.offset();
    std::string t;
    while (!in.at_end() && !is_space(in.peek(0))) t.push_back(static_cast<char>(in.next("header")));
    f = parse_int(t, at, "PPM header field");
  }
  check_decoded_dimensions(fields[0], fields[1], 0);
  if (fields[2] != 255)
    throw Error(ErrorCode::unsupported_format, "only maxval 255 is supported", in.offset());
  in.next("separator");
  const int w = static_cast<int>(fields[0]);
  const int h = static_cast<int>(fields[1]);
  const std::size_t n = pixel_count(w, h);
  const ByteView px = in.take(3 * n, ErrorCode::short_payload, "PPM payload");
  DisplayImage img{w, h, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    img.red[i] = px[3 * i];
    img.green[i] = px[3 * i + 1];
    img.blue[i] = px[3 * i + 2];
  }
  return img;
}

}  // namespace detail

/// 8-bit encoding of a display image. Every sample must lie in [0, 255].
inline Bytes write_display(const DisplayImage& img, DisplayKind kind) {
  detail::check_dimensions(img.width, img.height);
  const auto rgb = detail::interleave_display(img);
  if (kind == DisplayKind::png) return detail::encode_png(rgb, img.width, img.height);
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), rgb.begin(), rgb.end());
  return out;
}

/// Decodes an 8-bit PNG or binary PPM back to display levels.
inline DisplayImage read_display(ByteView bytes) {
  switch (detect_kind(bytes)) {
    case ImageFileKind::png: return detail::decode_png(bytes);
    case ImageFileKind::ppm: return detail::decode_ppm(bytes);
    default: throw Error(ErrorCode::unsupported_format, "not a display image", 0);
  }
}

// ---------------------------------------------------------------------------------------------
// Files

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "'");
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw Error(ErrorCode::io_failure, "error reading '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, ByteView data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io_failure, "cannot create '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw Error(ErrorCode::io_failure, "error writing '" + path.string() + "'");
}

/// Decodes a radiance map, choosing the decoder from the file's magic bytes.
inline WdrImage decode_wdr(ByteView bytes, std::size_t* clamped_negatives = nullptr) {
  switch (detect_kind(bytes)) {
    case ImageFileKind::radiance_hdr: return read_radiance_hdr(bytes);
    case ImageFileKind::pfm: {
      std::size_t clamped = 0;
      WdrImage img = read_pfm(bytes, clamped);
      if (clamped_negatives) *clamped_negatives = clamped;
      return img;
    }
    default:
      throw Error(ErrorCode::unsupported_format, "8-bit images are not radiance maps", 0);
  }
}

inline WdrImage load_wdr(const std::filesystem::path& path,
                         std::size_t* clamped_negatives = nullptr) {
  const Bytes data = read_file(path);
  return decode_wdr(data, clamped_negatives);
}

}  // namespace mshist
