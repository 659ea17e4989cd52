#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sonpath/core.hpp"
#include "sonpath/solver.hpp"

namespace sonpath {

enum class GridKind { geometric, linear };

struct PathOptions {
  double gamma_min = 0.0;                   // geometric grids require > 0; 0 means gamma_max/1e4
  std::optional<double> gamma_max;          // absent: found by doubling search
  int grid_size = 100;
  GridKind grid_kind = GridKind::geometric;
  double fusion_tolerance = 1e-6;           // relative to the data diameter
  std::vector<double> explicit_gammas;      // non-empty overrides the generated grid
};

struct FusionViolation {
  int i = 0, j = 0;            // point indices (0-based)
  double gamma_fused = 0.0;    // first grid gamma at which the pair coincided
  double gamma_split = 0.0;    // a later grid gamma at which it came apart
};

struct FusionReport {
  std::vector<double> gammas;
  std::vector<Partition> partitions;  // canonical, one per grid gamma
  std::vector<FusionViolation> violations;
};

struct RecoveredTree {
  Dendrogram dendrogram;
  bool complete = false;  // false when the path never reached a single cluster
};

struct LevelMatch {
  int level = 0;
  bool matched = false;
  double gamma_first = std::numeric_limits<double>::quiet_NaN();
  double gamma_last = std::numeric_limits<double>::quiet_NaN();
};

struct TreeAgreement {
  bool exact = false;
  int first_mismatch_level = -1;  // -1 when exact
  std::vector<LevelMatch> levels;
};

enum class LinkageMethod { single, average };

namespace detail {

inline std::vector<double> make_grid(const PathOptions& opts, double gamma_max) {
  if (!opts.explicit_gammas.empty()) {
    const auto& g = opts.explicit_gammas;
    for (size_t k = 0; k < g.size(); ++k) {
      if (!(g[k] >= 0.0) || !std::isfinite(g[k])) fail(Errc::bad_config, "grid gammas must be finite and >= 0");
      if (k > 0 && !(g[k] > g[k - 1])) fail(Errc::bad_config, "grid gammas must increase strictly");
    }
    return g;
  }
  if (opts.grid_size < 2) fail(Errc::bad_config, "grid needs at least 2 points");
  if (!(gamma_max > 0.0)) fail(Errc::bad_config, "gamma_max must be positive");
  double lo = opts.gamma_min;
  if (opts.grid_kind == GridKind::geometric) {
    if (lo <= 0.0) lo = gamma_max / 1e4;
    if (!(lo < gamma_max)) fail(Errc::bad_config, "gamma_min must be below gamma_max");
    std::vector<double> out(static_cast<size_t>(opts.grid_size));
    for (int k = 0; k < opts.grid_size; ++k) {
      double frac = static_cast<double>(k) / static_cast<double>(opts.grid_size - 1);
      out[static_cast<size_t>(k)] = k == opts.grid_size - 1 ? gamma_max : lo * std::pow(gamma_max / lo, frac);
    }
    return out;
  }
  if (!(lo < gamma_max)) fail(Errc::bad_config, "gamma_min must be below gamma_max");
  std::vector<double> out(static_cast<size_t>(opts.grid_size));
  double step = (gamma_max - lo) / static_cast<double>(opts.grid_size - 1);
  for (int k = 0; k < opts.grid_size; ++k) {
    out[static_cast<size_t>(k)] = k == opts.grid_size - 1 ? gamma_max : lo + step * k;
  }
  return out;
}

// Partition induced by centroid coincidence: transitive closure of
// |u_i - u_j| <= tol_abs.
inline Partition coincidence_partition(const CentroidSet& u, double tol_abs) {
  const int n = static_cast<int>(u.rows());
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((u.row(i) - u.row(j)).norm() <= tol_abs) {
        int a = find(i), b = find(j);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<int>> blocks(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) blocks[static_cast<size_t>(find(i))].push_back(i);
  Partition part;
  for (auto& b : blocks) {
    if (!b.empty()) part.push_back(std::move(b));
  }
  return canonical_partition(std::move(part));
}

inline bool single_cluster(const Partition& p) { return p.size() == 1; }

}  // namespace detail

// Smallest gamma of a doubling search at which all centroids coincide within
// the fusion tolerance. Seeded from the leaf-fusion bound 8*sqrt(E)/n; a seed
// of zero means the points already coincide and any positive gamma fuses.
inline double auto_gamma_max(const DataSet& data, const AffinityMatrix& aff,
                             const PathOptions& opts = {}, const SolveOptions& solve_opts = {}) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  const double diam = data_diameter(data);
  const double seed =
      leaf_fusion_gamma_bound(energy_upper_bound(data), static_cast<int>(data.n()));
  if (seed == 0.0 || diam == 0.0) {
    return opts.gamma_min > 0.0 ? opts.gamma_min : 1e-8;
  }
  const double tol_abs = opts.fusion_tolerance * diam;
  double gamma = seed;
  std::optional<CentroidSet> warm;
  for (int step = 0; step <= 40; ++step) {
    SolveReport rep = solve(data, aff, gamma, solve_opts, warm);
    if (detail::single_cluster(detail::coincidence_partition(rep.centroids, tol_abs))) {
      return gamma;
    }
    warm = std::move(rep.centroids);
    gamma *= 2.0;
  }
  fail(Errc::no_full_fusion,
       "no full fusion up to 2^40 times the seed; affinity support is likely disconnected");
}

// Solves along the gamma grid in increasing order, warm-starting each solve
// from the previous snapshot.
inline SolutionPath solve_path(const DataSet& data, const AffinityMatrix& aff,
                               const PathOptions& opts = {}, const SolveOptions& solve_opts = {}) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  double gmax = 0.0;
  if (opts.explicit_gammas.empty()) {
    gmax = opts.gamma_max ? *opts.gamma_max : auto_gamma_max(data, aff, opts, solve_opts);
  }
  std::vector<double> grid = detail::make_grid(opts, gmax);

  SolutionPath path;
  path.norm_kind = solve_opts.norm_kind;
  path.gammas = grid;
  path.snapshots.reserve(grid.size());
  std::optional<CentroidSet> warm;
  for (double g : grid) {
    SolveReport rep = solve(data, aff, g, solve_opts, warm);
    path.converged.push_back(rep.converged);
    warm = rep.centroids;
    path.snapshots.push_back(std::move(rep.centroids));
  }
  return path;
}

// Partition at every grid gamma plus every pair that fused and later split.
inline FusionReport detect_fusions(const SolutionPath& path, const DataSet& data,
                                   double fusion_tolerance = 1e-6) {
  if (path.gammas.size() != path.snapshots.size()) fail(Errc::shape_mismatch, "ragged path");
  const double tol_abs = fusion_tolerance * data_diameter(data);
  FusionReport report;
  report.gammas = path.gammas;
  report.partitions.reserve(path.snapshots.size());
  for (const auto& snap : path.snapshots) {
    report.partitions.push_back(detail::coincidence_partition(snap, tol_abs));
  }

  const int n = static_cast<int>(data.n());
  std::vector<std::vector<int>> block_of(report.partitions.size(), std::vector<int>(static_cast<size_t>(n)));
  for (size_t s = 0; s < report.partitions.size(); ++s) {
    const Partition& part = report.partitions[s];
    for (size_t b = 0; b < part.size(); ++b) {
      for (int idx : part[b]) block_of[s][static_cast<size_t>(idx)] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      int fused_at = -1;
      for (size_t s = 0; s < report.partitions.size(); ++s) {
        bool together = block_of[s][static_cast<size_t>(i)] == block_of[s][static_cast<size_t>(j)];
        if (fused_at < 0 && together) fused_at = static_cast<int>(s);
        if (fused_at >= 0 && !together) {
          report.violations.push_back({i, j, report.gammas[static_cast<size_t>(fused_at)],
                                       report.gammas[s]});
          break;
        }
      }
    }
  }
  return report;
}

// Builds the merge record from the first grid gamma at which clusters
// coincide. Multi-way coincidences become a chain of binary merges at equal
// gamma, ordered by smallest member. Refuses on unfusion violations; a path
// that never fully fuses yields a partial record with complete = false.
inline RecoveredTree recover_tree(const FusionReport& report,
                                  const std::vector<std::string>& leaf_ids) {
  if (!report.violations.empty()) {
    fail(Errc::unfusion_detected,
         "path is not a tree: " + std::to_string(report.violations.size()) +
             " pair(s) fused and later separated");
  }
  const int n = static_cast<int>(leaf_ids.size());
  RecoveredTree out;
  out.dendrogram.leaf_ids = leaf_ids;

  struct Cluster {
    std::string name;
    int smallest = 0;
    int size = 0;
  };
  std::vector<Cluster> cluster_of(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) cluster_of[static_cast<size_t>(i)] = {leaf_ids[static_cast<size_t>(i)], i, 1};

  int next_id = 1;
  for (size_t s = 0; s < report.partitions.size(); ++s) {
    const Partition& part = report.partitions[s];
    const double gamma = report.gammas[s];
    for (const auto& block : part) {
      // distinct live clusters inside this block, ordered by smallest member
      std::vector<int> reps;
      for (int idx : block) {
        if (cluster_of[static_cast<size_t>(idx)].smallest == idx) reps.push_back(idx);
      }
      if (reps.size() < 2) continue;
      std::sort(reps.begin(), reps.end());
      Cluster acc = cluster_of[static_cast<size_t>(reps[0])];
      for (size_t r = 1; r < reps.size(); ++r) {
        const Cluster& rhs = cluster_of[static_cast<size_t>(reps[r])];
        MergeEvent ev;
        ev.gamma = gamma;
        ev.cluster_a = acc.name;
        ev.cluster_b = rhs.name;
        ev.cluster_new = "m" + std::to_string(next_id++);
        ev.size = acc.size + rhs.size;
        out.dendrogram.merges.push_back(ev);
        acc = {ev.cluster_new, acc.smallest, ev.size};
      }
      for (int idx : block) cluster_of[static_cast<size_t>(idx)] = acc;
    }
  }
  out.complete = !report.partitions.empty() && report.partitions.back().size() == 1;
  return out;
}

// Checks whether the merge sequence, cut between fusion waves, reproduces
// each target level exactly, with every wave finishing at strictly smaller
// gamma than the next wave starts.
inline TreeAgreement tree_agreement(const Dendrogram& dendro, const PartitionTree& target) {
  const int n = static_cast<int>(dendro.leaf_ids.size());
  if (Errc rc = validate_tree(target, n); rc != Errc::ok) {
    fail(rc == Errc::bad_leaves || rc == Errc::bad_root ? Errc::leaf_mismatch : rc,
         "target tree does not fit the dendrogram leaf set");
  }

  std::map<std::string, std::vector<int>> members;
  for (int i = 0; i < n; ++i) members[dendro.leaf_ids[static_cast<size_t>(i)]] = {i};

  TreeAgreement agree;
  std::vector<Partition> canon_target;
  canon_target.reserve(target.levels.size());
  for (const auto& lvl : target.levels) canon_target.push_back(canonical_partition(lvl));

  auto current_partition = [&]() {
    Partition p;
    for (const auto& [name, mem] : members) p.push_back(mem);
    return canonical_partition(std::move(p));
  };

  size_t l = 1;  // level 0 is the singleton start, matched by construction
  agree.levels.push_back({0, true, std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()});
  Partition cur = current_partition();
  double wave_first = std::numeric_limits<double>::quiet_NaN();
  double prev_wave_last = std::numeric_limits<double>::quiet_NaN();

  // levels identical to the previous one need no merges
  while (l < canon_target.size() && canon_target[l] == cur) {
    agree.levels.push_back({static_cast<int>(l), true, std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN()});
    ++l;
  }

  bool failed = false;
  for (const auto& ev : dendro.merges) {
    if (l >= canon_target.size()) {
      failed = true;  // merges beyond the root level
      break;
    }
    auto ita = members.find(ev.cluster_a);
    auto itb = members.find(ev.cluster_b);
    if (ita == members.end() || itb == members.end()) {
      fail(Errc::leaf_mismatch, "merge references an unknown cluster: " + ev.cluster_a);
    }
    if (std::isnan(wave_first)) wave_first = ev.gamma;
    std::vector<int> joined = ita->second;
    joined.insert(joined.end(), itb->second.begin(), itb->second.end());
    std::sort(joined.begin(), joined.end());
    members.erase(ita);
    members.erase(itb);
    members[ev.cluster_new] = std::move(joined);

    cur = current_partition();
    if (cur == canon_target[l]) {
      bool strict = std::isnan(prev_wave_last) || wave_first > prev_wave_last;
      agree.levels.push_back({static_cast<int>(l), strict, wave_first, ev.gamma});
      if (!strict && !failed) {
        failed = true;
        agree.first_mismatch_level = static_cast<int>(l);
      }
      prev_wave_last = ev.gamma;
      wave_first = std::numeric_limits<double>::quiet_NaN();
      ++l;
      while (l < canon_target.size() && canon_target[l] == cur) {
        agree.levels.push_back({static_cast<int>(l), true,
                                std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN()});
        ++l;
      }
    } else if (cur.size() <= canon_target[l].size()) {
      // coarsened past the target level without hitting it
      failed = true;
      agree.first_mismatch_level = static_cast<int>(l);
      break;
    }
  }

  if (l < canon_target.size() && !failed) {
    failed = true;
    agree.first_mismatch_level = static_cast<int>(l);
  }
  for (size_t lvl = agree.levels.size(); lvl < canon_target.size(); ++lvl) {
    agree.levels.push_back({static_cast<int>(lvl), false,
                            std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN()});
  }
  agree.exact = !failed;
  if (agree.exact) agree.first_mismatch_level = -1;
  return agree;
}

// Agglomerative hierarchical clustering on Euclidean distances; the merge
// gamma field carries the linkage distance.
inline Dendrogram linkage_baseline(const DataSet& data, LinkageMethod method) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  const int n = static_cast<int>(data.n());
  if (n < 2) fail(Errc::too_few_points, "linkage needs n >= 2");

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double d = (data.points.row(i) - data.points.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  struct Cluster {
    std::string name;
    std::vector<int> members;
    bool alive = true;
  };
  std::vector<Cluster> clusters(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) clusters[static_cast<size_t>(i)] = {data.ids[static_cast<size_t>(i)], {i}, true};

  auto cluster_distance = [&](const Cluster& a, const Cluster& b) {
    double acc = method == LinkageMethod::single ? std::numeric_limits<double>::infinity() : 0.0;
    for (int x : a.members) {
      for (int y : b.members) {
        if (method == LinkageMethod::single) {
          acc = std::min(acc, dist(x, y));
        } else {
          acc += dist(x, y);
        }
      }
    }
    if (method == LinkageMethod::average) {
      acc /= static_cast<double>(a.members.size() * b.members.size());
    }
    return acc;
  };

  Dendrogram dendro;
  dendro.leaf_ids = data.ids;
  int next_id = 1;
  for (int step = 0; step < n - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    size_t ba = 0, bb = 0;
    for (size_t a = 0; a < clusters.size(); ++a) {
      if (!clusters[a].alive) continue;
      for (size_t b = a + 1; b < clusters.size(); ++b) {
        if (!clusters[b].alive) continue;
        double d = cluster_distance(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          ba = a;
          bb = b;
        }
      }
    }
    MergeEvent ev;
    ev.gamma = best;
    ev.cluster_a = clusters[ba].name;
    ev.cluster_b = clusters[bb].name;
    ev.cluster_new = "m" + std::to_string(next_id++);
    ev.size = static_cast<int>(clusters[ba].members.size() + clusters[bb].members.size());
    dendro.merges.push_back(ev);

    clusters[ba].name = ev.cluster_new;
    clusters[ba].members.insert(clusters[ba].members.end(), clusters[bb].members.begin(),
                                clusters[bb].members.end());
    std::sort(clusters[ba].members.begin(), clusters[ba].members.end());
    clusters[bb].alive = false;
  }
  return dendro;
}

}  // namespace sonpath
