#ifndef EGO2TOP_XCORR_HPP_
#define EGO2TOP_XCORR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <vector>

#include "ego2top/core.hpp"

namespace ego2top
{

enum class XCorrNormalization
{
  mean_product,  // mean of a * b over the overlap
  zncc,          // zero-mean normalized correlation over the overlap, clamped at 0 (default)
};

struct XCorrConfig
{
  double min_overlap_fraction = 0.5;
  XCorrNormalization normalize = XCorrNormalization::zncc;
  double alpha = 0.9;
  double gamma = 0.5;

  void validate() const
  {
    if (!(min_overlap_fraction > 0.0 && min_overlap_fraction <= 1.0))
      throw Error(ErrorKind::invalid_input, "min_overlap_fraction must lie in (0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::invalid_input, "alpha must lie in [0, 1]");
    if (!(gamma > 0.0)) throw Error(ErrorKind::invalid_input, "gamma must be positive");
  }
};

struct XCorr2Result
{
  double value = 0.0;
  int dr = 0;
  int dc = 0;
};

struct XCorr1Result
{
  double value = 0.0;
  int shift = 0;
};

namespace detail
{

// Candidate (value, shift) beats the incumbent on larger value, then smaller
// L1 shift norm, then lexicographically smaller shift.
inline bool better_shift(double v, int dr, int dc, double best_v, int best_dr, int best_dc)
{
  if (v != best_v) return v > best_v;
  const int l1 = std::abs(dr) + std::abs(dc);
  const int best_l1 = std::abs(best_dr) + std::abs(best_dc);
  if (l1 != best_l1) return l1 < best_l1;
  if (dr != best_dr) return dr < best_dr;
  return dc < best_dc;
}

inline double required_cells(std::size_t cells_a, std::size_t cells_b, double fraction)
{
  return fraction * static_cast<double>(std::min(cells_a, cells_b));
}

}  // namespace detail

namespace detail
{

// Summed-area table with a zero border: sum over [r0, r1) x [c0, c1).
class IntegralImage
{
 public:
  IntegralImage(const Matrix& m, bool squared) : cols_(m.cols() + 1), sums_((m.rows() + 1) * (m.cols() + 1), 0.0)
  {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        row += squared ? v * v : v;
        sums_[(r + 1) * cols_ + c + 1] = sums_[r * cols_ + c + 1] + row;
      }
    }
  }

  double sum(int r0, int r1, int c0, int c1) const
  {
    const auto at = [&](int r, int c) { return sums_[static_cast<std::size_t>(r) * cols_ + static_cast<std::size_t>(c)]; };
    return at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
  }

 private:
  std::size_t cols_;
  std::vector<double> sums_;
};

// Pearson correlation from raw overlap sums, clamped to [0, 1]. Overlaps on
// which either side is (numerically) constant score 0.
inline double zncc_from_sums(double n, double sab, double sa, double sa2, double sb, double sb2)
{
  const double va = sa2 - sa * sa / n;
  const double vb = sb2 - sb * sb / n;
  constexpr double rel = 1e-12;
  if (!(va > rel * sa2) || !(vb > rel * sb2)) return 0.0;
  const double c = (sab - sa * sb / n) / std::sqrt(va * vb);
  return std::clamp(c, 0.0, 1.0);
}

}  // namespace detail

/// Maximum over admissible shifts (dr, dc) of the correlation between
/// a(r, c) and b(r + dr, c + dc) over the overlapping cells. A shift is
/// admissible when the overlap holds at least min_overlap_fraction of the
/// smaller matrix's cells. The correlation is the mean product or the
/// zero-mean normalized correlation, per cfg.normalize.
inline XCorr2Result xcorr2_max(const Matrix& a, const Matrix& b, const XCorrConfig& cfg)
{
  if (a.empty() || b.empty()) throw Error(ErrorKind::invalid_input, "cross-correlation of an empty matrix");
  const auto ra = static_cast<int>(a.rows()), ca = static_cast<int>(a.cols());
  const auto rb = static_cast<int>(b.rows()), cb = static_cast<int>(b.cols());
  const double need = detail::required_cells(a.rows() * a.cols(), b.rows() * b.cols(), cfg.min_overlap_fraction);
  const bool zncc = cfg.normalize == XCorrNormalization::zncc;
  std::optional<detail::IntegralImage> ia, ia2, ib, ib2;
  if (zncc) {
    ia.emplace(a, false);
    ia2.emplace(a, true);
    ib.emplace(b, false);
    ib2.emplace(b, true);
  }

  bool found = false;
  XCorr2Result best;
  for (int dr = -(ra - 1); dr <= rb - 1; ++dr) {
    const int r0 = std::max(0, -dr);
    const int r1 = std::min(ra, rb - dr);
    const int nr = r1 - r0;
    if (nr <= 0) continue;
    for (int dc = -(ca - 1); dc <= cb - 1; ++dc) {
      const int c0 = std::max(0, -dc);
      const int c1 = std::min(ca, cb - dc);
      const int nc = c1 - c0;
      if (nc <= 0) continue;
      const double cells = static_cast<double>(nr) * nc;
      if (cells < need) continue;
      double sum = 0.0;
      for (int r = r0; r < r1; ++r) {
        const double* pa = a.row(r).data();
        const double* pb = b.row(r + dr).data() + dc;
        double acc = 0.0;
        for (int c = c0; c < c1; ++c) acc += pa[c] * pb[c];
        sum += acc;
      }
      const double v = zncc ? detail::zncc_from_sums(cells, sum, ia->sum(r0, r1, c0, c1), ia2->sum(r0, r1, c0, c1),
                                                     ib->sum(r0 + dr, r1 + dr, c0 + dc, c1 + dc),
                                                     ib2->sum(r0 + dr, r1 + dr, c0 + dc, c1 + dc))
                            : sum / cells;
      if (!found || detail::better_shift(v, dr, dc, best.value, best.dr, best.dc)) {
        best = {v, dr, dc};
        found = true;
      }
    }
  }
  if (!found) throw Error(ErrorKind::insufficient_overlap, "no 2D shift meets the overlap requirement");
  return best;
}

/// 1D analogue of xcorr2_max. Both series are first divided by
/// max(1, largest entry of either series).
inline XCorr1Result xcorr1_max(std::span<const double> a, std::span<const double> b, const XCorrConfig& cfg)
{
  if (a.empty() || b.empty()) throw Error(ErrorKind::invalid_input, "cross-correlation of an empty series");
  double peak = 1.0;
  for (double v : a) peak = std::max(peak, v);
  for (double v : b) peak = std::max(peak, v);
  std::vector<double> sa(a.size()), sb(b.size());
  std::transform(a.begin(), a.end(), sa.begin(), [&](double v) { return v / peak; });
  std::transform(b.begin(), b.end(), sb.begin(), [&](double v) { return v / peak; });

  const auto na = static_cast<int>(sa.size()), nb = static_cast<int>(sb.size());
  const double need = detail::required_cells(sa.size(), sb.size(), cfg.min_overlap_fraction);
  const bool zncc = cfg.normalize == XCorrNormalization::zncc;
  bool found = false;
  XCorr1Result best;
  for (int d = -(na - 1); d <= nb - 1; ++d) {
    const int i0 = std::max(0, -d);
    const int i1 = std::min(na, nb - d);
    const int n = i1 - i0;
    if (n <= 0 || static_cast<double>(n) < need) continue;
    double sab = 0.0, s_a = 0.0, s_a2 = 0.0, s_b = 0.0, s_b2 = 0.0;
    for (int i = i0; i < i1; ++i) {
      const double x = sa[i], y = sb[i + d];
      sab += x * y;
      s_a += x;
      s_a2 += x * x;
      s_b += y;
      s_b2 += y * y;
    }
    const double v = zncc ? detail::zncc_from_sums(n, sab, s_a, s_a2, s_b, s_b2) : sab / n;
    if (!found || detail::better_shift(v, d, 0, best.value, best.shift, 0)) {
      best = {v, d};
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::insufficient_overlap, "no 1D shift meets the overlap requirement");
  return best;
}

}  // namespace ego2top

#endif
