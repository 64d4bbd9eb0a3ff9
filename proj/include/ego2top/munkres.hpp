#ifndef EGO2TOP_MUNKRES_HPP_
#define EGO2TOP_MUNKRES_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ego2top/core.hpp"

namespace ego2top
{

namespace detail
{

// Shortest-augmenting-path Hungarian method with row/column potentials.
// Minimizes total cost for rows <= cols; returns the column of each row.
inline std::vector<int> hungarian_min_cost(const Matrix& cost)
{
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match[j] != 0) col_of_row[match[j] - 1] = j - 1;
  return col_of_row;
}

inline double assignment_profit(const Matrix& profit, const std::vector<int>& col_of_row)
{
  double total = 0.0;
  for (std::size_t r = 0; r < col_of_row.size(); ++r) total += profit(r, static_cast<std::size_t>(col_of_row[r]));
  return total;
}

inline double max_profit_value(const Matrix& profit)
{
  Matrix cost(profit.rows(), profit.cols());
  for (std::size_t r = 0; r < profit.rows(); ++r)
    for (std::size_t c = 0; c < profit.cols(); ++c) cost(r, c) = -profit(r, c);
  return assignment_profit(profit, hungarian_min_cost(cost));
}

}  // namespace detail

/// Maximum-profit injective assignment of rows to columns (rows <= cols).
/// Among optimal assignments the lexicographically smallest one (row 0's
/// column first, then row 1's, ...) is returned.
inline std::vector<int> max_profit_assignment(const Matrix& profit)
{
  const std::size_t n = profit.rows(), m = profit.cols();
  if (n > m) throw Error(ErrorKind::invalid_problem, "assignment needs at least as many columns as rows");
  for (double v : profit.data())
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "assignment profit is not finite");
  if (n == 0) return {};

  const double optimum = detail::max_profit_value(profit);
  const double tol = 1e-12 * std::max(1.0, std::abs(optimum));

  std::vector<int> chosen(n, -1);
  std::vector<char> used(m, 0);
  double fixed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      if (used[k]) continue;
      // Best completion of rows i+1.. over the columns left after fixing (i, k).
      const std::size_t rest_rows = n - i - 1;
      Matrix rest(rest_rows, m - std::count(used.begin(), used.end(), 1) - 1);
      std::size_t cc = 0;
      for (std::size_t c = 0; c < m; ++c) {
        if (used[c] || c == k) continue;
        for (std::size_t r = 0; r < rest_rows; ++r) rest(r, cc) = profit(i + 1 + r, c);
        ++cc;
      }
      const double total = fixed + profit(i, k) + (rest_rows ? detail::max_profit_value(rest) : 0.0);
      if (total >= optimum - tol) {
        chosen[i] = static_cast<int>(k);
        used[k] = 1;
        fixed += profit(i, k);
        break;
      }
    }
    if (chosen[i] < 0) throw Error(ErrorKind::invalid_problem, "assignment tie-breaking failed");
  }
  return chosen;
}

}  // namespace ego2top

#endif
