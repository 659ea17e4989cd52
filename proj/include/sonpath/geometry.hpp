#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sonpath/core.hpp"

namespace sonpath {

// A set of pairwise-distinct points (rows). Distinctness is a hard
// precondition of everything in this header; callers deduplicate first.
struct PointSet {
  Eigen::MatrixXd points;  // m x p

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

struct Witness {
  int index = -1;              // which point is the vantage point
  Eigen::RowVectorXd direction;  // unit viewing direction
  double score = 0.0;          // averaged normalized inner product
};

namespace detail {

inline void check_distinct(const PointSet& s) {
  if (!s.points.allFinite()) fail(Errc::non_finite, "point set must be finite");
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    for (Eigen::Index j = i + 1; j < s.size(); ++j) {
      if ((s.points.row(i) - s.points.row(j)).norm() == 0.0) {
        fail(Errc::duplicate_points, "points must be pairwise distinct");
      }
    }
  }
}

inline void check_unit(const Eigen::RowVectorXd& v) {
  if (std::abs(v.norm() - 1.0) > 1e-9) fail(Errc::not_unit, "direction must be a unit vector");
}

}  // namespace detail

// (1/n) sum_{i != j} <(u_i - u_j)/|u_i - u_j|, v>
inline double direction_score(const PointSet& points, int j, const Eigen::RowVectorXd& v) {
  const int n = static_cast<int>(points.size());
  if (j < 0 || j >= n) fail(Errc::index_out_of_range, "direction_score: bad index");
  detail::check_unit(v);
  detail::check_distinct(points);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == j) continue;
    Eigen::RowVectorXd d = points.points.row(i) - points.points.row(j);
    sum += d.dot(v) / d.norm();
  }
  return sum / static_cast<double>(n);
}

// Directional derivative of sum_{i != j} |u_i - u_j| when u_j moves along v,
// with only the moved point's own terms varying: -sum_{i != j} <(u_i-u_j)/|..|, v>.
inline double penalty_directional_derivative(const PointSet& points, int j,
                                             const Eigen::RowVectorXd& v) {
  const int n = static_cast<int>(points.size());
  if (j < 0 || j >= n) fail(Errc::index_out_of_range, "bad index");
  detail::check_unit(v);
  detail::check_distinct(points);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == j) continue;
    Eigen::RowVectorXd d = points.points.row(i) - points.points.row(j);
    sum += d.dot(v) / d.norm();
  }
  return -sum;
}

// Index of the lexicographically minimal point, an extreme point of the
// convex hull in any dimension.
inline int extreme_start(const PointSet& points) {
  detail::check_distinct(points);
  int best = 0;
  for (int i = 1; i < static_cast<int>(points.size()); ++i) {
    for (Eigen::Index c = 0; c < points.dim(); ++c) {
      double a = points.points(i, c);
      double b = points.points(best, c);
      if (a < b) {
        best = i;
        break;
      }
      if (a > b) break;
    }
  }
  return best;
}

// Finds a vantage point with averaged-inner-product score >= 1/2.
//
// Uses a diameter-realizing pair (u, y): every point then lies within |u - y|
// of both endpoints, which is exactly the constraint under which the two-view
// inequality holds pointwise, so one of the two candidate views
// (u, (y-u)/|y-u|) and (y, -(y-u)/|y-u|) must average at least 1/2. A
// farthest-point-from-an-extreme-point pair does not bound |y - u_i| and can
// leave both views below 1/2. Ties on the diameter break to the smallest
// index pair; of the two candidates the higher-scoring one is returned.
inline Witness witness(const PointSet& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) fail(Errc::too_few_points, "witness needs n >= 3 points");
  detail::check_distinct(points);

  int a = 0, b = 1;
  double best_d = (points.points.row(0) - points.points.row(1)).norm();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = (points.points.row(i) - points.points.row(j)).norm();
      if (d > best_d) {
        best_d = d;
        a = i;
        b = j;
      }
    }
  }

  Eigen::RowVectorXd v = (points.points.row(b) - points.points.row(a)) / best_d;
  double score_a = direction_score(points, a, v);
  double score_b = direction_score(points, b, Eigen::RowVectorXd(-v));

  Witness w;
  if (score_a >= score_b) {
    w.index = a;
    w.direction = v;
    w.score = score_a;
  } else {
    w.index = b;
    w.direction = -v;
    w.score = score_b;
  }
  return w;
}

// Peeling construction: apply witness to the remaining set, remove the
// vantage point, repeat. Yields floor(n/6)+1 witnesses; re-scored against the
// full original set each satisfies score >= 1/4, because removing k points
// costs the sum at most k and (n-k)/2 - k >= n/4 for k <= n/6.
inline std::vector<Witness> witness_set(const PointSet& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) fail(Errc::too_few_points, "witness_set needs n >= 3 points");
  detail::check_distinct(points);

  const int count = n / 6 + 1;
  std::vector<int> remaining(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) remaining[static_cast<size_t>(i)] = i;

  std::vector<Witness> out;
  out.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    PointSet sub;
    sub.points.resize(static_cast<Eigen::Index>(remaining.size()), points.dim());
    for (size_t r = 0; r < remaining.size(); ++r) {
      sub.points.row(static_cast<Eigen::Index>(r)) = points.points.row(remaining[r]);
    }
    Witness local = witness(sub);
    Witness full;
    full.index = remaining[static_cast<size_t>(local.index)];
    full.direction = local.direction;
    full.score = direction_score(points, full.index, full.direction);
    out.push_back(full);
    remaining.erase(remaining.begin() + local.index);
  }
  return out;
}

}  // namespace sonpath
