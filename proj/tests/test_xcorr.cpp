#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ego2top/xcorr.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ego2top;

namespace
{

XCorrConfig config(XCorrNormalization n, double min_overlap = 0.5)
{
  XCorrConfig c;
  c.normalize = n;
  c.min_overlap_fraction = min_overlap;
  return c;
}

}  // namespace

TEST(XCorr2, ConstantOnesMeanProduct)
{
  const Matrix ones(10, 10, 1.0);
  const auto r = xcorr2_max(ones, ones, config(XCorrNormalization::mean_product));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.dr, 0);
  EXPECT_EQ(r.dc, 0);
}

TEST(XCorr2, ConstantOnesZnccIsFlat)
{
  // Constant overlaps carry no correlation structure under ZNCC.
  const Matrix ones(10, 10, 1.0);
  const auto r = xcorr2_max(ones, ones, config(XCorrNormalization::zncc));
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_EQ(r.dr, 0);
  EXPECT_EQ(r.dc, 0);
}

TEST(XCorr2, IdenticalRandomMatricesPeakAtZeroShift)
{
  std::mt19937_64 rng(1);
  const auto a = testsupport::random_matrix(12, 12, rng);
  const auto r = xcorr2_max(a, a, XCorrConfig{});
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_EQ(r.dr, 0);
  EXPECT_EQ(r.dc, 0);
}

TEST(XCorr2, RecoversPlantedShift)
{
  for (auto norm : {XCorrNormalization::mean_product, XCorrNormalization::zncc}) {
    Matrix a(24, 24);
    for (std::size_t r = 4; r < 8; ++r)
      for (std::size_t c = 2; c < 5; ++c) a(r, c) = 1.0;
    // b: a copied cyclically with offset (3, 7) into a zero field.
    Matrix b(24, 24);
    for (std::size_t r = 0; r < 24; ++r)
      for (std::size_t c = 0; c < 24; ++c) b((r + 3) % 24, (c + 7) % 24) = a(r, c);
    const auto res = xcorr2_max(a, b, config(norm));
    EXPECT_EQ(res.dr, 3);
    EXPECT_EQ(res.dc, 7);
  }
}

TEST(XCorr2, MatchesBruteForceOnRectangularPair)
{
  std::mt19937_64 rng(8);
  const auto a = testsupport::random_matrix(8, 8, rng);
  const auto b = testsupport::random_matrix(12, 9, rng);
  for (auto norm : {XCorrNormalization::mean_product, XCorrNormalization::zncc}) {
    const auto cfg = config(norm);
    const auto got = xcorr2_max(a, b, cfg);
    const auto want = oracle::brute_force_xcorr2(a, b, cfg);
    ASSERT_TRUE(want.found);
    EXPECT_NEAR(got.value, want.value, 1e-12);
    EXPECT_EQ(got.dr, want.dr);
    EXPECT_EQ(got.dc, want.dc);
  }
}

TEST(XCorr2, MatchesBruteForceAcrossOverlapFractions)
{
  std::mt19937_64 rng(81);
  std::uniform_int_distribution<int> dim(1, 9);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = testsupport::random_matrix(dim(rng), dim(rng), rng);
    const auto b = testsupport::random_matrix(dim(rng), dim(rng), rng);
    for (double frac : {0.1, 0.5, 0.9}) {
      const auto cfg = config(XCorrNormalization::zncc, frac);
      const auto want = oracle::brute_force_xcorr2(a, b, cfg);
      if (!want.found) {
        EXPECT_THROW(xcorr2_max(a, b, cfg), Error);
        continue;
      }
      const auto got = xcorr2_max(a, b, cfg);
      EXPECT_NEAR(got.value, want.value, 1e-12);
    }
  }
}

TEST(XCorr2, InsufficientOverlapIsReported)
{
  const Matrix a(2, 2, 1.0), b(2, 2, 1.0);
  XCorrConfig cfg;
  cfg.min_overlap_fraction = 1.0;
  EXPECT_NO_THROW(xcorr2_max(a, b, cfg));
  // A 1x4 against a 4x1 overlaps in one cell at most: 1 < 0.5 * 4.
  const Matrix row(1, 4, 1.0), col(4, 1, 1.0);
  try {
    xcorr2_max(row, col, XCorrConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_overlap);
  }
}

TEST(XCorr2, EmptyMatrixIsInvalid) { EXPECT_THROW(xcorr2_max(Matrix{}, Matrix(2, 2), XCorrConfig{}), Error); }

TEST(XCorr2, TieBreakPrefersSmallestShift)
{
  // Mean product of a constant pair is the same at every admissible shift.
  const Matrix a(4, 4, 0.5), b(4, 4, 0.5);
  const auto r = xcorr2_max(a, b, config(XCorrNormalization::mean_product, 0.25));
  EXPECT_EQ(r.dr, 0);
  EXPECT_EQ(r.dc, 0);
}

TEST(XCorr1, ConstantOnesMeanProduct)
{
  const std::vector<double> ones(12, 1.0);
  const auto r = xcorr1_max(ones, ones, config(XCorrNormalization::mean_product));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.shift, 0);
}

TEST(XCorr1, RecoversTriangularPulseDelay)
{
  std::vector<double> a(40, 0.0), b(40, 0.0);
  for (int k = 0; k < 7; ++k) a[static_cast<std::size_t>(10 + k)] = 3.0 - std::abs(k - 3);
  for (std::size_t t = 6; t < 40; ++t) b[t] = a[t - 6];
  for (auto norm : {XCorrNormalization::mean_product, XCorrNormalization::zncc}) {
    const auto r = xcorr1_max(a, b, config(norm));
    EXPECT_EQ(r.shift, 6);
  }
  EXPECT_NEAR(xcorr1_max(a, b, XCorrConfig{}).value, 1.0, 1e-12);
}

TEST(XCorr1, DisjointSupportsScoreZero)
{
  // a lives in the first 4 samples, b in the last 4; with a 90% overlap
  // requirement the pulses never meet.
  std::vector<double> a(20, 0.0), b(20, 0.0);
  for (int i = 0; i < 4; ++i) a[static_cast<std::size_t>(i)] = 1.0, b[static_cast<std::size_t>(16 + i)] = 1.0;
  for (auto norm : {XCorrNormalization::mean_product, XCorrNormalization::zncc})
    EXPECT_DOUBLE_EQ(xcorr1_max(a, b, config(norm, 0.9)).value, 0.0);
}

TEST(XCorr1, ScalesIntoUnitRangeBeforeCorrelating)
{
  const std::vector<double> a(5, 4.0), b(5, 2.0);
  // Divided by max(1, 4): 1.0 and 0.5, mean product 0.5.
  EXPECT_DOUBLE_EQ(xcorr1_max(a, b, config(XCorrNormalization::mean_product)).value, 0.5);
  const std::vector<double> c(5, 0.5);
  // Peak below one leaves values as they are.
  EXPECT_DOUBLE_EQ(xcorr1_max(c, c, config(XCorrNormalization::mean_product)).value, 0.25);
}

TEST(XCorr1, MatchesBruteForce)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_int_distribution<int> len(2, 30);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& v : a) v = std::floor(u(rng));
    for (auto& v : b) v = std::floor(u(rng));
    Matrix ma(1, a.size()), mb(1, b.size());
    double peak = 1.0;
    for (double v : a) peak = std::max(peak, v);
    for (double v : b) peak = std::max(peak, v);
    for (std::size_t i = 0; i < a.size(); ++i) ma(0, i) = a[i] / peak;
    for (std::size_t i = 0; i < b.size(); ++i) mb(0, i) = b[i] / peak;
    for (auto norm : {XCorrNormalization::mean_product, XCorrNormalization::zncc}) {
      const auto cfg = config(norm);
      const auto want = oracle::brute_force_xcorr2(ma, mb, cfg);
      const auto got = xcorr1_max(a, b, cfg);
      EXPECT_NEAR(got.value, want.value, 1e-12);
      EXPECT_EQ(got.shift, want.dc);
    }
  }
}

TEST(XCorrConfig, Validation)
{
  XCorrConfig c;
  EXPECT_NO_THROW(c.validate());
  c.min_overlap_fraction = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), Error);
}
