#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sonpath {

// Fixed absolute tolerance for floating-point invariant checks.
inline constexpr double kCheckTol = 1e-12;

enum class Errc {
  ok = 0,
  // dataset
  non_finite,
  duplicate_id,
  empty_data,
  // partition tree
  not_a_partition,
  not_nested,
  bad_leaves,
  bad_root,
  invalid_tree,
  // affinities
  bad_epsilon,
  bad_sigma,
  index_out_of_range,
  // solver / energy
  shape_mismatch,
  negative_gamma,
  ambiguous_cut,
  negative_input,
  // geometry
  too_few_points,
  duplicate_points,
  not_unit,
  // path / dendrogram
  unfusion_detected,
  no_full_fusion,
  leaf_mismatch,
  // cli / io
  bad_config,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ok: return "ok";
    case Errc::non_finite: return "NonFinite";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::empty_data: return "EmptyData";
    case Errc::not_a_partition: return "NotAPartition";
    case Errc::not_nested: return "NotNested";
    case Errc::bad_leaves: return "BadLeaves";
    case Errc::bad_root: return "BadRoot";
    case Errc::invalid_tree: return "InvalidTree";
    case Errc::bad_epsilon: return "BadEpsilon";
    case Errc::bad_sigma: return "BadSigma";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::negative_gamma: return "NegativeGamma";
    case Errc::ambiguous_cut: return "AmbiguousCut";
    case Errc::negative_input: return "NegativeInput";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::duplicate_points: return "DuplicatePoints";
    case Errc::not_unit: return "NotUnit";
    case Errc::unfusion_detected: return "UnfusionDetected";
    case Errc::no_full_fusion: return "NoFullFusion";
    case Errc::leaf_mismatch: return "LeafMismatch";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

// n points in R^p, one per row, each with a unique string id.
struct DataSet {
  Eigen::MatrixXd points;        // n x p
  std::vector<std::string> ids;  // size n

  Eigen::Index n() const { return points.rows(); }
  Eigen::Index p() const { return points.cols(); }
};

// Centroids u_i, aligned row-for-row with a DataSet.
using CentroidSet = Eigen::MatrixXd;

// Symmetric nonnegative pair weights with zero diagonal, stored sparsely as a
// map over index pairs (i < j). Missing pairs have weight zero.
class AffinityMatrix {
 public:
  using PairMap = std::map<std::pair<int, int>, double>;

  AffinityMatrix() = default;
  explicit AffinityMatrix(int n) : n_(n) {
    if (n < 1) fail(Errc::empty_data, "affinity matrix needs n >= 1");
  }

  int n() const { return n_; }

  void set(int i, int j, double w) {
    check_index(i);
    check_index(j);
    if (i == j) fail(Errc::not_a_partition, "affinity diagonal must stay zero");
    if (!std::isfinite(w)) fail(Errc::non_finite, "affinity weight must be finite");
    if (w < 0) fail(Errc::negative_input, "affinity weight must be nonnegative");
    weights_[ordered(i, j)] = w;
  }

  double get(int i, int j) const {
    check_index(i);
    check_index(j);
    if (i == j) return 0.0;
    auto it = weights_.find(ordered(i, j));
    return it == weights_.end() ? 0.0 : it->second;
  }

  const PairMap& pairs() const { return weights_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto& [ij, v] : weights_) {
      w(ij.first, ij.second) = v;
      w(ij.second, ij.first) = v;
    }
    return w;
  }

 private:
  static std::pair<int, int> ordered(int i, int j) {
    return i < j ? std::make_pair(i, j) : std::make_pair(j, i);
  }
  void check_index(int i) const {
    if (i < 0 || i >= n_) fail(Errc::index_out_of_range, "pair index out of range");
  }

  int n_ = 0;
  PairMap weights_;
};

// One level of a partition tree: disjoint non-empty folders covering {0..n-1}.
using Partition = std::vector<std::vector<int>>;

// Nested partitions P_0 (singletons) .. P_L (single root folder).
struct PartitionTree {
  std::vector<Partition> levels;

  int height() const { return static_cast<int>(levels.size()) - 1; }
};

enum class NormKind { euclidean, one_norm };

inline const char* norm_name(NormKind k) {
  return k == NormKind::euclidean ? "l2" : "l1";
}

// Ordered (gamma, centroid snapshot) samples of the solution path.
struct SolutionPath {
  std::vector<double> gammas;
  std::vector<CentroidSet> snapshots;
  std::vector<bool> converged;  // per-snapshot solver flag
  NormKind norm_kind = NormKind::euclidean;
};

struct MergeEvent {
  double gamma = 0.0;
  std::string cluster_a;
  std::string cluster_b;
  std::string cluster_new;
  int size = 0;  // members in the new cluster
};

// Agglomeration record: n-1 merge events when fully fused, gammas non-decreasing.
struct Dendrogram {
  std::vector<MergeEvent> merges;
  std::vector<std::string> leaf_ids;
};

inline Errc validate_dataset(const DataSet& data) {
  if (data.n() < 1 || data.p() < 1) return Errc::empty_data;
  if (static_cast<Eigen::Index>(data.ids.size()) != data.n()) return Errc::duplicate_id;
  if (!data.points.allFinite()) return Errc::non_finite;
  std::unordered_set<std::string> seen;
  for (const auto& id : data.ids) {
    if (!seen.insert(id).second) return Errc::duplicate_id;
  }
  return Errc::ok;
}

inline Errc validate_tree(const PartitionTree& tree, int n) {
  if (tree.levels.empty() || n < 1) return Errc::bad_leaves;

  for (const auto& level : tree.levels) {
    std::vector<char> hit(static_cast<size_t>(n), 0);
    size_t covered = 0;
    for (const auto& folder : level) {
      if (folder.empty()) return Errc::not_a_partition;
      for (int idx : folder) {
        if (idx < 0 || idx >= n || hit[static_cast<size_t>(idx)]) return Errc::not_a_partition;
        hit[static_cast<size_t>(idx)] = 1;
        ++covered;
      }
    }
    if (covered != static_cast<size_t>(n)) return Errc::not_a_partition;
  }

  const Partition& leaves = tree.levels.front();
  if (static_cast<int>(leaves.size()) != n) return Errc::bad_leaves;
  for (const auto& folder : leaves) {
    if (folder.size() != 1) return Errc::bad_leaves;
  }

  const Partition& root = tree.levels.back();
  if (root.size() != 1 || static_cast<int>(root.front().size()) != n) return Errc::bad_root;

  // nesting: each folder of P_l lies inside one folder of P_{l+1}
  for (size_t l = 0; l + 1 < tree.levels.size(); ++l) {
    std::vector<int> owner(static_cast<size_t>(n), -1);
    const Partition& up = tree.levels[l + 1];
    for (size_t f = 0; f < up.size(); ++f) {
      for (int idx : up[f]) owner[static_cast<size_t>(idx)] = static_cast<int>(f);
    }
    for (const auto& folder : tree.levels[l]) {
      int fo = owner[static_cast<size_t>(folder.front())];
      for (int idx : folder) {
        if (owner[static_cast<size_t>(idx)] != fo) return Errc::not_nested;
      }
    }
  }
  return Errc::ok;
}

// Canonical form: members sorted within folders, folders sorted by first member.
inline Partition canonical_partition(Partition part) {
  for (auto& folder : part) std::sort(folder.begin(), folder.end());
  std::sort(part.begin(), part.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return part;
}

inline double data_diameter(const DataSet& data) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = i + 1; j < data.n(); ++j) {
      best = std::max(best, (data.points.row(i) - data.points.row(j)).norm());
    }
  }
  return best;
}

}  // namespace sonpath
