#pragma once

// Brute-force reference solvers used only by the test suites. None of these
// touch the interior-point code; they enumerate grids over boxes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Multi-level grid search for min f(x) over a box subject to feasible(x).
/// Each level evaluates `points` per axis, then shrinks the box around the
/// incumbent by `shrink`. Returns +inf if no feasible grid point was found.
struct GridResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> x;
};

inline GridResult grid_minimize(const std::function<double(const std::vector<double>&)>& f,
                                const std::function<bool(const std::vector<double>&)>& feasible,
                                std::vector<double> lo, std::vector<double> hi, int points, int levels,
                                double shrink = 0.25) {
  const std::size_t dim = lo.size();
  GridResult best;
  std::vector<double> x(dim);
  const std::vector<double> lo0 = lo, hi0 = hi;
  for (int level = 0; level < levels; ++level) {
    std::vector<int> idx(dim, 0);
    GridResult level_best = best;
    for (;;) {
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = points == 1 ? lo[d] : lo[d] + (hi[d] - lo[d]) * idx[d] / (points - 1);
      if (feasible(x)) {
        const double v = f(x);
        if (v < level_best.value) {
          level_best.value = v;
          level_best.x = x;
        }
      }
      std::size_t d = 0;
      while (d < dim && ++idx[d] == points) idx[d++] = 0;
      if (d == dim) break;
    }
    if (level_best.x.empty()) return best;
    best = level_best;
    for (std::size_t d = 0; d < dim; ++d) {
      const double half = 0.5 * (hi[d] - lo[d]) * shrink;
      lo[d] = std::max(lo0[d], best.x[d] - half);
      hi[d] = std::min(hi0[d], best.x[d] + half);
    }
  }
  return best;
}

/// Maximum of the local generation ratio of a single community by exhaustive
/// enumeration of (P^{S+}_t, P^{S-}_t) on a uniform grid of each box.
///
/// The ratio is separable given its value, so instead of enumerating the full
/// product grid we use the exact per-step decomposition: for a candidate ratio
/// r, max_x sum_t [a_t - r b_t] decouples across t, and we enumerate each
/// step's 2-D grid independently. The outer loop bisects r on the grid
/// objective (Dinkelbach's parametric characterization, applied on the grid).
struct CommunityBox {
  std::vector<double> gen, load, cap_plus, cap_minus;
  std::vector<double> export_upper; // empty = unconstrained
};

inline double brute_force_max_ratio(const CommunityBox& c, int resolution) {
  const std::size_t T = c.load.size();
  double G = 0, L = 0;
  for (std::size_t t = 0; t < T; ++t) {
    G += c.gen[t];
    L += c.load[t];
  }
  // For r >= 0 the best P^{S-} for a given P^{S+} grid value is the smallest
  // feasible grid value, so each step reduces to a list of (a, b_min(a)) pairs
  // and the enumeration over the full 2-D grid is exact.
  struct Point {
    double a, b;
  };
  std::vector<std::vector<Point>> feasible_points(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double db = c.cap_minus[t] / resolution;
    for (int i = 0; i <= resolution; ++i) {
      const double a = c.cap_plus[t] * i / resolution;
      for (int j = 0; j <= resolution; ++j) {
        const double b = db * j;
        if (!c.export_upper.empty() && a - b > c.export_upper[t] + 1e-12) continue;
        feasible_points[t].push_back({a, b});
        break;
      }
    }
  }
  // phi(r) = max over grid of (G + sum a) - r (L + sum b); the max ratio is the root of phi.
  auto phi = [&](double r) {
    double v = G - r * L;
    for (std::size_t t = 0; t < T; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Point& p : feasible_points[t]) best = std::max(best, p.a - r * p.b);
      v += best;
    }
    return v;
  };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) > 0) hi *= 2;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0 ? lo : hi) = mid;
  }
  return lo;
}

/// Minimum-cost dispatch on a 3-bus path 1-2-3 over 2 steps with S+ only.
/// Sheds are single buses with ratio floors x_min[i]. On a tree the flows are
/// fixed by the injections, so the free dimensions are S+[1,t], S+[2,t] (S+[3,t]
/// closes the balance). The first pass enumerates a grid of `points` per axis
/// over each box, later passes zoom around the incumbent.
struct ThreeBus {
  double gen[3][2], load[3][2], cap[3][2];
  double alpha[3];
  double limit12, limit23;
  double x_min[3];
};

struct ThreeBusResult {
  double cost = std::numeric_limits<double>::infinity();
  double s[3][2] = {};
};

inline ThreeBusResult three_bus_min_cost(const ThreeBus& c, int points = 101, int zoom_levels = 6) {
  struct Pair {
    double s1, s2, s3;
  };
  double lo[2][2], hi[2][2]; // [t][bus 0/1]
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 2; ++i) {
      lo[t][i] = 0.0;
      hi[t][i] = c.cap[i][t];
    }
  double need[3];
  for (int i = 0; i < 3; ++i)
    need[i] = c.x_min[i] * (c.load[i][0] + c.load[i][1]) - (c.gen[i][0] + c.gen[i][1]) - 1e-12;

  ThreeBusResult best;
  for (int level = 0; level <= zoom_levels; ++level) {
    const int n = level == 0 ? points : 21;
    std::vector<Pair> feasible[2];
    for (int t = 0; t < 2; ++t) {
      double deficit = 0;
      for (int i = 0; i < 3; ++i) deficit += c.load[i][t] - c.gen[i][t];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double s1 = lo[t][0] + (hi[t][0] - lo[t][0]) * a / (n - 1);
          const double s2 = lo[t][1] + (hi[t][1] - lo[t][1]) * b / (n - 1);
          const double s3 = deficit - s1 - s2;
          if (s3 < -1e-12 || s3 > c.cap[2][t] + 1e-12) continue;
          const double inj1 = c.gen[0][t] - c.load[0][t] + s1;
          const double inj2 = c.gen[1][t] - c.load[1][t] + s2;
          if (std::abs(inj1) > c.limit12 + 1e-12 || std::abs(inj1 + inj2) > c.limit23 + 1e-12) continue;
          feasible[t].push_back({s1, s2, std::max(s3, 0.0)});
        }
    }
    ThreeBusResult level_best = best;
    for (const Pair& p : feasible[0])
      for (const Pair& q : feasible[1]) {
        if (p.s1 + q.s1 < need[0] || p.s2 + q.s2 < need[1] || p.s3 + q.s3 < need[2]) continue;
        const double c1 = std::max(p.s1, q.s1), c2 = std::max(p.s2, q.s2), c3 = std::max(p.s3, q.s3);
        const double cost = c.alpha[0] * c1 * c1 + c.alpha[1] * c2 * c2 + c.alpha[2] * c3 * c3;
        if (cost < level_best.cost) {
          level_best.cost = cost;
          level_best.s[0][0] = p.s1, level_best.s[1][0] = p.s2, level_best.s[2][0] = p.s3;
          level_best.s[0][1] = q.s1, level_best.s[1][1] = q.s2, level_best.s[2][1] = q.s3;
        }
      }
    if (!std::isfinite(level_best.cost)) return best;
    best = level_best;
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < 2; ++i) {
        const double step = (hi[t][i] - lo[t][i]) / (n - 1);
        lo[t][i] = std::max(0.0, best.s[i][t] - 3 * step);
        hi[t][i] = std::min(c.cap[i][t], best.s[i][t] + 3 * step);
      }
  }
  return best;
}

} // namespace oracle
