#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sonpath/core.hpp"

namespace sonpath {

struct TreeWeightConfig {
  double epsilon = 0.01;
  // Optional per-level weights w[0] > w[1] > ... > 0; w[l-1] is assigned to
  // pairs that first share a folder at level l. Empty means powers of epsilon.
  std::vector<double> level_weights;
};

struct GaussianConfig {
  double sigma = 1.0;
};

// w_ij = eps^(l*-1) where l* is the smallest level at which i and j share a
// folder. Equals the minimum edge weight on the tree-graph path between the
// leaves, since edge weights decrease strictly going up.
inline AffinityMatrix tree_affinities(const PartitionTree& tree, const TreeWeightConfig& cfg) {
  int n = 0;
  if (!tree.levels.empty()) {
    for (const auto& folder : tree.levels.front()) n += static_cast<int>(folder.size());
  }
  if (Errc rc = validate_tree(tree, n); rc != Errc::ok) {
    fail(Errc::invalid_tree, std::string("tree failed validation (") + errc_name(rc) + ")");
  }
  const int height = tree.height();

  std::vector<double> weights;
  if (cfg.level_weights.empty()) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
      fail(Errc::bad_epsilon, "epsilon must lie in (0, 1)");
    }
    weights.resize(static_cast<size_t>(std::max(height, 1)));
    for (size_t l = 0; l < weights.size(); ++l) weights[l] = std::pow(cfg.epsilon, static_cast<double>(l));
  } else {
    weights = cfg.level_weights;
    if (static_cast<int>(weights.size()) < height) {
      fail(Errc::bad_epsilon, "need one weight per level 1..L");
    }
    for (size_t l = 0; l < weights.size(); ++l) {
      if (!(weights[l] > 0.0) || !std::isfinite(weights[l])) {
        fail(Errc::bad_epsilon, "level weights must be positive and finite");
      }
      if (l > 0 && !(weights[l] < weights[l - 1])) {
        fail(Errc::bad_epsilon, "level weights must decrease strictly");
      }
    }
  }

  // folder index of each leaf at each level
  std::vector<std::vector<int>> folder_of(tree.levels.size(), std::vector<int>(static_cast<size_t>(n)));
  for (size_t l = 0; l < tree.levels.size(); ++l) {
    const Partition& level = tree.levels[l];
    for (size_t f = 0; f < level.size(); ++f) {
      for (int idx : level[f]) folder_of[l][static_cast<size_t>(idx)] = static_cast<int>(f);
    }
  }

  AffinityMatrix aff(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      int join = height;
      for (int l = 1; l <= height; ++l) {
        if (folder_of[static_cast<size_t>(l)][static_cast<size_t>(i)] ==
            folder_of[static_cast<size_t>(l)][static_cast<size_t>(j)]) {
          join = l;
          break;
        }
      }
      aff.set(i, j, weights[static_cast<size_t>(join - 1)]);
    }
  }
  return aff;
}

// w_ij = exp(-|x_i - x_j|^2 / sigma).
//
// The squared distance is computed as norm()*norm() rather than squaredNorm()
// so that these weights are bit-identical to the erf-variant penalty
// derivative evaluated at the pairwise distances (see concave.hpp).
inline AffinityMatrix gaussian_affinities(const DataSet& data, const GaussianConfig& cfg) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) {
    fail(rc, "gaussian_affinities: invalid dataset");
  }
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) fail(Errc::bad_sigma, "sigma must be positive");
  const int n = static_cast<int>(data.n());
  AffinityMatrix aff(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = (data.points.row(i) - data.points.row(j)).norm();
      aff.set(i, j, std::exp(-(d * d) / cfg.sigma));
    }
  }
  return aff;
}

inline AffinityMatrix unit_affinities(int n) {
  AffinityMatrix aff(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) aff.set(i, j, 1.0);
  }
  return aff;
}

// Drops entries strictly below the threshold; everything else is unchanged.
inline AffinityMatrix sparsify(const AffinityMatrix& aff, double threshold) {
  if (threshold < 0 || !std::isfinite(threshold)) {
    fail(Errc::negative_input, "threshold must be nonnegative");
  }
  AffinityMatrix out(aff.n());
  for (const auto& [ij, w] : aff.pairs()) {
    if (w >= threshold) out.set(ij.first, ij.second, w);
  }
  return out;
}

// Row of affinities seen from point i, sorted by descending weight (ties by
// index). This is the data behind an affinity scale-separation plot.
inline std::vector<std::pair<int, double>> scale_profile(const AffinityMatrix& aff, int i) {
  if (i < 0 || i >= aff.n()) fail(Errc::index_out_of_range, "scale_profile: bad index");
  std::vector<std::pair<int, double>> row;
  row.reserve(static_cast<size_t>(aff.n()) - 1);
  for (int j = 0; j < aff.n(); ++j) {
    if (j != i) row.emplace_back(j, aff.get(i, j));
  }
  std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return row;
}

// Median pairwise squared distance, a common default scale for the Gaussian
// kernel when nothing better is known. Not derived from any recovery theory.
inline double median_squared_distance(const DataSet& data) {
  std::vector<double> d2;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = i + 1; j < data.n(); ++j) {
      d2.push_back((data.points.row(i) - data.points.row(j)).squaredNorm());
    }
  }
  if (d2.empty()) return 1.0;
  std::sort(d2.begin(), d2.end());
  size_t mid = d2.size() / 2;
  return d2.size() % 2 == 1 ? d2[mid] : 0.5 * (d2[mid - 1] + d2[mid]);
}

}  // namespace sonpath
