#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/rng.hpp"
#include "iqp/stats.hpp"

namespace iqp {

struct FittedCurve {
  std::vector<double> grid;    // sorted distinct observed x values
  std::vector<double> fitted;  // parallel to grid
  std::vector<double> band_lo;  // filled by bootstrap_band, else empty
  std::vector<double> band_hi;
};

namespace detail {

// Data sorted by x plus robustness weights; can evaluate the local fit at
// any query point, not just the observed ones (the bootstrap needs that).
class LowessEngine {
 public:
  LowessEngine(std::vector<double> xs, std::vector<double> ys, double frac)
      : xs_(std::move(xs)), ys_(std::move(ys)), rw_(xs_.size(), 1.0) {
    window_ = static_cast<std::size_t>(
        std::ceil(frac * static_cast<double>(xs_.size())));
    window_ = std::clamp<std::size_t>(window_, 2, xs_.size());
  }

  // Local quadratic fit at x0 over the nearest `window_` points (plus
  // distance ties), tricube-weighted. Falls back to linear, then to the
  // weighted mean, whenever the higher-degree system is degenerate.
  double at(double x0) const {
    const std::size_t n = xs_.size();
    // Grow [lo, hi) around x0 to the window size, nearer side first.
    auto right = static_cast<std::size_t>(
        std::lower_bound(xs_.begin(), xs_.end(), x0) - xs_.begin());
    std::size_t lo = right, hi = right;
    while (hi - lo < window_) {
      const double dl = lo > 0 ? x0 - xs_[lo - 1] : std::numeric_limits<double>::infinity();
      const double dr = hi < n ? xs_[hi] - x0 : std::numeric_limits<double>::infinity();
      if (dl <= dr)
        --lo;
      else
        ++hi;
    }
    double h = 0.0;
    for (std::size_t i = lo; i < hi; ++i) h = std::max(h, std::abs(xs_[i] - x0));
    // Include every point tied with the window radius so equal inputs get
    // equal treatment (duplication invariance).
    while (lo > 0 && x0 - xs_[lo - 1] <= h) --lo;
    while (hi < n && xs_[hi] - x0 <= h) ++hi;

    // Weighted moments of u = (x - x0)/h, scaled into [-1, 1].
    double S[5] = {0, 0, 0, 0, 0};
    double T[3] = {0, 0, 0};
    double distinct[3];
    int n_distinct = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      double w = rw_[i];
      double u = 0.0;
      if (h > 0.0) {
        u = (xs_[i] - x0) / h;
        const double a = 1.0 - std::abs(u) * std::abs(u) * std::abs(u);
        w *= a * a * a;
      }
      if (w <= 0.0) continue;
      if (n_distinct < 3) {
        bool seen = false;
        for (int k = 0; k < n_distinct; ++k) seen = seen || distinct[k] == xs_[i];
        if (!seen) distinct[n_distinct++] = xs_[i];
      }
      double up = w;
      for (int p = 0; p < 5; ++p) {
        S[p] += up;
        if (p < 3) T[p] += up * ys_[i];
        up *= u;
      }
    }
    if (S[0] <= 0.0) {
      // Everything got zero weight; average the raw window instead.
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += ys_[i];
      return s / static_cast<double>(hi - lo);
    }
    for (int degree = std::min(2, n_distinct - 1); degree >= 1; --degree)
      if (double b0; solve_poly(S, T, degree, b0)) return b0;
    return T[0] / S[0];  // single distinct x: weighted mean
  }

  // One bisquare reweighting pass based on residuals at the observed points.
  // Returns false when the fit is already exact (zero median residual).
  bool robust_pass() {
    std::vector<double> fit(xs_.size());
    double last_x = 0.0, last_f = 0.0;
    bool have_last = false;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!have_last || xs_[i] != last_x) {
        last_x = xs_[i];
        last_f = at(last_x);
        have_last = true;
      }
      fit[i] = last_f;
    }
    std::vector<double> abs_r(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) abs_r[i] = std::abs(ys_[i] - fit[i]);
    const double s = median(abs_r);
    if (s <= 0.0) return false;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double t = (ys_[i] - fit[i]) / (6.0 * s);
      const double a = 1.0 - t * t;
      rw_[i] = t * t >= 1.0 ? 0.0 : a * a;
    }
    return true;
  }

  const std::vector<double>& xs() const { return xs_; }

 private:
  // Solves the (degree+1)-sized weighted normal equations for the intercept
  // at u = 0. Declines (returns false) on a near-singular pivot.
  static bool solve_poly(const double S[5], const double T[3], int degree, double& b0) {
    const int m = degree + 1;
    double A[3][4];
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) A[r][c] = S[r + c];
      A[r][m] = T[r];
    }
    for (int col = 0; col < m; ++col) {
      int piv = col;
      for (int r = col + 1; r < m; ++r)
        if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
      double row_scale = 0.0;
      for (int c = 0; c < m; ++c) row_scale = std::max(row_scale, std::abs(A[piv][c]));
      if (row_scale <= 0.0 || std::abs(A[piv][col]) < 1e-10 * row_scale) return false;
      if (piv != col)
        for (int c = 0; c <= m; ++c) std::swap(A[piv][c], A[col][c]);
      for (int r = col + 1; r < m; ++r) {
        const double factor = A[r][col] / A[col][col];
        for (int c = col; c <= m; ++c) A[r][c] -= factor * A[col][c];
      }
    }
    double beta[3] = {0, 0, 0};
    for (int r = m - 1; r >= 0; --r) {
      double s = A[r][m];
      for (int c = r + 1; c < m; ++c) s -= A[r][c] * beta[c];
      beta[r] = s / A[r][r];
    }
    b0 = beta[0];
    return std::isfinite(b0);
  }

  std::vector<double> xs_, ys_, rw_;
  std::size_t window_;
};

inline LowessEngine make_engine(const std::vector<double>& x, const std::vector<double>& y,
                                double frac, int robust_iters) {
  if (x.size() != y.size()) throw LengthMismatchError("lowess: x/y lengths differ");
  if (x.size() < 10) throw TooFewPointsError("lowess: needs >= 10 points");
  if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("lowess: frac must be in (0,1]");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(x.size()), ys(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  LowessEngine engine(std::move(xs), std::move(ys), frac);
  for (int it = 0; it < robust_iters; ++it)
    if (!engine.robust_pass()) break;
  return engine;
}

}  // namespace detail

inline FittedCurve lowess_fit(const std::vector<double>& x, const std::vector<double>& y,
                              double frac = 0.6, int robust_iters = 1) {
  detail::LowessEngine engine = detail::make_engine(x, y, frac, robust_iters);
  FittedCurve curve;
  for (double v : engine.xs())
    if (curve.grid.empty() || curve.grid.back() != v) curve.grid.push_back(v);
  curve.fitted.reserve(curve.grid.size());
  for (double v : curve.grid) curve.fitted.push_back(engine.at(v));
  return curve;
}

// Pointwise percentile envelope over B resampled-with-replacement refits,
// evaluated on the original fit's grid.
inline FittedCurve bootstrap_band(const std::vector<double>& x, const std::vector<double>& y,
                                  double frac, int robust_iters, int B, double level,
                                  std::uint64_t seed) {
  if (B < 2) throw ConfigError("bootstrap_band: B must be >= 2");
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("bootstrap_band: level must be in (0,1)");
  FittedCurve curve = lowess_fit(x, y, frac, robust_iters);

  Rng rng(seed);
  const std::size_t n = x.size();
  std::vector<std::vector<double>> fits(B);
  std::vector<double> xb(n), yb(n);
  for (int b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.index(n);
      xb[i] = x[j];
      yb[i] = y[j];
    }
    detail::LowessEngine engine = detail::make_engine(xb, yb, frac, robust_iters);
    fits[b].reserve(curve.grid.size());
    for (double g : curve.grid) fits[b].push_back(engine.at(g));
  }

  const double lo_q = 100.0 * (1.0 - level) / 2.0;
  const double hi_q = 100.0 - lo_q;
  curve.band_lo.resize(curve.grid.size());
  curve.band_hi.resize(curve.grid.size());
  std::vector<double> column(B);
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    for (int b = 0; b < B; ++b) column[b] = fits[b][g];
    curve.band_lo[g] = percentile_linear(column, lo_q);
    curve.band_hi[g] = percentile_linear(column, hi_q);
  }
  return curve;
}

}  // namespace iqp
