#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mshist/integral.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace mshist;

namespace {

LuminanceField field(int w, int h, std::vector<double> v, Domain d = Domain::log) {
  return LuminanceField(w, h, std::move(v), d);
}

std::pair<LuminanceField, oracle::Image> random_field(corpus::Rng& rng, int w, int h, double lo = 0.0,
                                                      double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (double& x : v) x = rng.uniform(lo, hi);
  oracle::Image img{w, h, v};
  return {field(w, h, std::move(v)), std::move(img)};
}

}  // namespace

TEST(BuildIntegral, TwoByTwo) {
  const IntegralImage t = build_integral(field(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(t.at(1, 1), 1);
  EXPECT_EQ(t.at(2, 1), 3);
  EXPECT_EQ(t.at(1, 2), 4);
  EXPECT_EQ(t.at(2, 2), 10);
  for (int i = 0; i <= 2; ++i) {
    EXPECT_EQ(t.at(i, 0), 0);
    EXPECT_EQ(t.at(0, i), 0);
  }
}

TEST(BuildIntegral, OnesThreeByThree) {
  EXPECT_EQ(build_integral(field(3, 3, std::vector<double>(9, 1.0))).at(3, 3), 9);
}

TEST(BuildIntegral, MatchesNaivePrefixSums) {
  corpus::Rng rng(1);
  auto [f, img] = random_field(rng, 16, 16);
  const IntegralImage t = build_integral(f);
  for (int y = 0; y <= 16; ++y)
    for (int x = 0; x <= 16; ++x) {
      const double naive = (x == 0 || y == 0) ? 0.0 : oracle::rect_sum(img, 0, 0, x - 1, y - 1);
      EXPECT_LE(std::abs(t.at(x, y) - naive), 1e-9 * std::max(1.0, std::abs(naive)));
    }
}

TEST(BuildIntegral, MonotoneForNonNegativeInput) {
  corpus::Rng rng(2);
  auto [f, img] = random_field(rng, 20, 13);
  const IntegralImage t = build_integral(f);
  for (int y = 1; y <= 13; ++y)
    for (int x = 1; x <= 20; ++x) {
      EXPECT_GE(t.at(x, y), t.at(x - 1, y));
      EXPECT_GE(t.at(x, y), t.at(x, y - 1));
    }
}

TEST(RectSum, SmallExamples) {
  const IntegralImage t = build_integral(field(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(rect_sum(t, {0, 0, 1, 1}), 10);
  EXPECT_EQ(rect_sum(t, {1, 1, 1, 1}), 4);
  EXPECT_EQ(rect_sum(t, {0, 1, 1, 1}), 7);
}

TEST(RectSum, OutOfBoundsThrows) {
  const IntegralImage t = build_integral(field(2, 2, {1, 2, 3, 4}));
  EXPECT_THROW(rect_sum(t, {0, 0, 2, 1}), Error);
  EXPECT_THROW(rect_sum(t, {-1, 0, 1, 1}), Error);
  EXPECT_THROW(rect_sum(t, {1, 0, 0, 1}), Error);
}

TEST(RectSum, RandomRectanglesMatchNaive) {
  corpus::Rng rng(3);
  auto [f, img] = random_field(rng, 16, 16);
  const IntegralImage t = build_integral(f);
  for (int i = 0; i < 200; ++i) {
    const WindowRect r = corpus::random_rect(rng, 16, 16);
    const double naive = oracle::rect_sum(img, r.x0, r.y0, r.x1, r.y1);
    EXPECT_LE(std::abs(rect_sum(t, r) - naive), 1e-9 * std::max(1.0, std::abs(naive)));
  }
}

TEST(RectSum, AdditiveExactlyOnIntegers) {
  corpus::Rng rng(4);
  std::vector<double> v(30 * 20);
  for (double& x : v) x = rng.integer(0, 1000);
  const IntegralImage t = build_integral(field(30, 20, v));
  for (int i = 0; i < 500; ++i) {
    WindowRect r = corpus::random_rect(rng, 30, 20);
    if (r.x0 == r.x1) continue;
    const int split = rng.integer(r.x0, r.x1 - 1);
    EXPECT_EQ(rect_sum(t, r), rect_sum(t, {r.x0, r.y0, split, r.y1}) +
                                  rect_sum(t, {split + 1, r.y0, r.x1, r.y1}));
  }
}

TEST(WindowVariance, SmallExamples) {
  const LuminanceField f = field(2, 2, {2, 2, 0, 2});
  const IntegralImage s = build_integral(f), s2 = build_integral_of_squares(f);
  EXPECT_EQ(window_variance(s, s2, {0, 0, 1, 0}), 0.0);
  EXPECT_EQ(window_variance(s, s2, {0, 0, 0, 1}), 1.0);
  EXPECT_THROW(window_variance(s, s2, {1, 0, 0, 0}), Error);
}

TEST(WindowVariance, MatchesTwoPassOracle) {
  corpus::Rng rng(5);
  auto [f, img] = random_field(rng, 16, 16);
  const IntegralImage s = build_integral(f), s2 = build_integral_of_squares(f);
  for (int i = 0; i < 100; ++i) {
    const WindowRect r = corpus::random_rect(rng, 16, 16);
    EXPECT_NEAR(window_variance(s, s2, r), oracle::variance(img, r.x0, r.y0, r.x1, r.y1), 1e-7);
  }
}

TEST(WindowVariance, NonNegativeAndZeroOnConstantWindows) {
  corpus::Rng rng(6);
  // Large offset provokes cancellation in the moment difference.
  std::vector<double> v(24 * 24);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 48 < 24) ? 1e4 + 0.1 : rng.uniform(1e4, 1e4 + 1);
  const LuminanceField f = field(24, 24, v);
  const IntegralImage s = build_integral(f), s2 = build_integral_of_squares(f);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(window_variance(s, s2, corpus::random_rect(rng, 24, 24)), 0.0);
  EXPECT_NEAR(window_variance(s, s2, {0, 0, 23, 0}), 0.0, 1e-7);
}

TEST(BinEdges, UniformAndDegenerate) {
  const auto e = uniform_bin_edges(0.0, 3.0, 2);
  EXPECT_EQ(e, (std::vector<double>{0.0, 1.5, 3.0}));
  const auto d = uniform_bin_edges(2.0, 2.0, 4);
  EXPECT_EQ(d.back(), 2.0);
  EXPECT_EQ(d.front(), 1.0);
  EXPECT_EQ(bin_index(d, 2.0), 3);
}

TEST(BinIndex, TieRule) {
  const std::vector<double> e{0.0, 1.0, 2.0, 3.0};
  EXPECT_EQ(bin_index(e, 0.0), 0);
  EXPECT_EQ(bin_index(e, 0.999), 0);
  EXPECT_EQ(bin_index(e, 1.0), 1);
  EXPECT_EQ(bin_index(e, 2.0), 2);
  EXPECT_EQ(bin_index(e, 3.0), 2);
  EXPECT_EQ(bin_index(e, -5.0), 0);
  EXPECT_EQ(bin_index(e, 9.0), 2);
}

TEST(IntegralHistogram, ConstantFieldSingleBin) {
  const LuminanceField f = field(5, 4, std::vector<double>(20, 0.7));
  for (int n : {1, 3, 8}) {
    const auto h = build_integral_histogram(f, uniform_bin_edges(0.7, 0.7, n));
    const auto p = window_bin_populations(h, {0, 0, 4, 3});
    EXPECT_EQ(p[static_cast<std::size_t>(n - 1)], 20u);
    EXPECT_EQ(std::accumulate(p.begin(), p.end(), 0u), 20u);
  }
}

TEST(IntegralHistogram, EvenSplitWithUpperEdgeRule) {
  const LuminanceField f = field(4, 1, {0, 1, 2, 3});
  const auto h = build_integral_histogram(f, uniform_bin_edges(0.0, 3.0, 2));
  EXPECT_EQ(window_bin_populations(h, {0, 0, 3, 0}), (std::vector<std::uint32_t>{2, 2}));
}

TEST(IntegralHistogram, RejectsNonAscendingEdges) {
  const LuminanceField f = field(2, 1, {0, 1});
  EXPECT_THROW(build_integral_histogram(f, {0.0, 0.0, 1.0}), Error);
  EXPECT_THROW(build_integral_histogram(f, {1.0, 0.5}), Error);
  EXPECT_THROW(build_integral_histogram(f, {0.0}), Error);
}

TEST(IntegralHistogram, SinglePixelAndFullImageQueries) {
  corpus::Rng rng(7);
  auto [f, img] = random_field(rng, 16, 16, -3.0, 2.0);
  const auto edges = uniform_bin_edges(f.min(), f.max(), 5);
  const auto h = build_integral_histogram(f, edges);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const auto p = window_bin_populations(h, {x, y, x, y});
      EXPECT_EQ(std::count(p.begin(), p.end(), 1u), 1);
      EXPECT_EQ(std::accumulate(p.begin(), p.end(), 0u), 1u);
    }
  EXPECT_EQ(window_bin_populations(h, {0, 0, 15, 15}), oracle::histogram(img, edges, 0, 0, 15, 15));
}

TEST(IntegralHistogram, RandomWindowsMatchNaiveCounts) {
  corpus::Rng rng(8);
  auto [f, img] = random_field(rng, 16, 16, -8.0, 4.0);
  const auto edges = uniform_bin_edges(f.min(), f.max(), 5);
  const auto h = build_integral_histogram(f, edges);
  for (int i = 0; i < 200; ++i) {
    const WindowRect r = corpus::random_rect(rng, 16, 16);
    const auto p = window_bin_populations(h, r);
    EXPECT_EQ(p, oracle::histogram(img, edges, r.x0, r.y0, r.x1, r.y1));
    EXPECT_EQ(std::accumulate(p.begin(), p.end(), std::size_t{0}), r.area());
  }
}

TEST(IntegralHistogram, QueryErrors) {
  const LuminanceField f = field(2, 2, {0, 1, 2, 3});
  const auto h = build_integral_histogram(f, uniform_bin_edges(0.0, 3.0, 3));
  EXPECT_THROW(window_bin_populations(h, {0, 0, 2, 0}), Error);
  std::vector<std::uint32_t> small(2);
  EXPECT_THROW(window_bin_populations(h, {0, 0, 1, 1}, small), Error);
}
