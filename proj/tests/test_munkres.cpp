#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "ego2top/munkres.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ego2top;

namespace
{

double total(const Matrix& p, const std::vector<int>& a)
{
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) s += p(r, static_cast<std::size_t>(a[r]));
  return s;
}

Matrix from_rows(std::vector<std::vector<double>> rows)
{
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

TEST(Munkres, DiagonalDominance)
{
  EXPECT_EQ(max_profit_assignment(from_rows({{0.9, 0.1}, {0.2, 0.8}})), (std::vector<int>{0, 1}));
}

TEST(Munkres, RectangularCompatibleRowMaxima)
{
  const auto p = from_rows({{0.1, 0.1, 0.7, 0.1}, {0.1, 0.6, 0.2, 0.1}});
  EXPECT_EQ(max_profit_assignment(p), (std::vector<int>{2, 1}));
}

TEST(Munkres, ConflictResolvedGlobally)
{
  // Both rows prefer column 0; the optimum gives it to row 1.
  const auto p = from_rows({{0.9, 0.8}, {1.0, 0.1}});
  EXPECT_EQ(max_profit_assignment(p), (std::vector<int>{1, 0}));
}

TEST(Munkres, MatchesExhaustiveOracle)
{
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(1, 7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto nt = static_cast<std::size_t>(size(rng));
    const auto ne = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, static_cast<int>(nt))(rng));
    const auto p = testsupport::random_matrix(ne, nt, rng);
    const auto a = max_profit_assignment(p);
    ASSERT_EQ(a.size(), ne);
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end()) << "column used twice";
    EXPECT_NEAR(total(p, a), oracle::exhaustive_best(p), 1e-12);
  }
}

TEST(Munkres, IntegerProfitsExactlyOptimal)
{
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> v(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix p(5, 6);
    for (auto& x : p.data()) x = v(rng);
    EXPECT_EQ(total(p, max_profit_assignment(p)), oracle::exhaustive_best(p));
  }
}

TEST(Munkres, TiesPickLexicographicallySmallest)
{
  const Matrix flat(3, 3, 1.0);
  EXPECT_EQ(max_profit_assignment(flat), (std::vector<int>{0, 1, 2}));
  // Two optimal assignments of value 2: {0->1, 1->0} and {0->0, 1->1}.
  const auto p = from_rows({{1.0, 1.0}, {1.0, 1.0}});
  EXPECT_EQ(max_profit_assignment(p), (std::vector<int>{0, 1}));
  const auto q = from_rows({{0.0, 1.0, 1.0}, {1.0, 0.0, 0.0}});
  EXPECT_EQ(max_profit_assignment(q), (std::vector<int>{1, 0}));
}

TEST(Munkres, Errors)
{
  try {
    max_profit_assignment(Matrix(3, 2, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_problem);
  }
  Matrix bad(2, 2, 1.0);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(max_profit_assignment(bad), Error);
  EXPECT_TRUE(max_profit_assignment(Matrix(0, 3)).empty());
}
