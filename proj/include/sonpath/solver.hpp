#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <optional>
#include <vector>

#include "sonpath/core.hpp"

namespace sonpath {

struct SolveOptions {
  NormKind norm_kind = NormKind::euclidean;
  int max_iterations = 100000;
  double tolerance = 1e-8;  // relative change of iterate AND objective
  double rho = 1.0;         // splitting penalty parameter (initial value)
  bool adaptive_rho = true;
  bool record_energy_trace = false;
};

struct SolveReport {
  CentroidSet centroids;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  std::vector<double> energy_trace;  // per-iteration objective, when recorded
};

namespace detail {

inline void check_shapes(const DataSet& data, const AffinityMatrix& aff, double gamma,
                         const CentroidSet& u) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  if (aff.n() != static_cast<int>(data.n())) fail(Errc::shape_mismatch, "affinity size != n");
  if (u.rows() != data.n() || u.cols() != data.p()) {
    fail(Errc::shape_mismatch, "centroid matrix shape differs from data");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(Errc::negative_gamma, "gamma must be >= 0");
}

inline double pair_norm(const Eigen::RowVectorXd& d, NormKind k) {
  return k == NormKind::euclidean ? d.norm() : d.template lpNorm<1>();
}

struct Pair {
  int i, j;
  double w;
};

inline std::vector<Pair> active_pairs(const AffinityMatrix& aff) {
  std::vector<Pair> out;
  out.reserve(aff.pairs().size());
  for (const auto& [ij, w] : aff.pairs()) {
    if (w > 0.0) out.push_back({ij.first, ij.second, w});
  }
  return out;
}

}  // namespace detail

// E_gamma(u) = 1/2 sum_i |x_i - u_i|^2 + gamma sum_{i<j} w_ij |u_i - u_j|,
// with the penalty norm chosen by norm_kind.
inline double energy(const DataSet& data, const AffinityMatrix& aff, double gamma,
                     const CentroidSet& u, NormKind norm_kind = NormKind::euclidean) {
  detail::check_shapes(data, aff, gamma, u);
  double fid = 0.5 * (data.points - u).squaredNorm();
  double pen = 0.0;
  for (const auto& [ij, w] : aff.pairs()) {
    if (w == 0.0) continue;
    Eigen::RowVectorXd d = u.row(ij.first) - u.row(ij.second);
    pen += w * detail::pair_norm(d, norm_kind);
  }
  return fid + gamma * pen;
}

// Splits the energy into the dominant part E1 (fidelity plus pairs with
// weight above the cut) and the small-weight remainder E2. The cut must
// separate the weight set; a weight equal to the cut is ambiguous.
inline std::pair<double, double> energy_split(const DataSet& data, const AffinityMatrix& aff,
                                              double gamma, const CentroidSet& u,
                                              double epsilon_cut,
                                              NormKind norm_kind = NormKind::euclidean) {
  detail::check_shapes(data, aff, gamma, u);
  double e1 = 0.5 * (data.points - u).squaredNorm();
  double e2 = 0.0;
  for (const auto& [ij, w] : aff.pairs()) {
    if (w == epsilon_cut) fail(Errc::ambiguous_cut, "a weight equals the cut");
    if (w == 0.0) continue;
    Eigen::RowVectorXd d = u.row(ij.first) - u.row(ij.second);
    double term = gamma * w * detail::pair_norm(d, norm_kind);
    if (w > epsilon_cut) {
      e1 += term;
    } else {
      e2 += term;
    }
  }
  return {e1, e2};
}

// Upper bound on the optimal energy, uniform over gamma: the energy of the
// all-fused configuration u_i = mean(x), i.e. 1/2 sum_i |x_i - xbar|^2.
inline double energy_upper_bound(const DataSet& data) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  Eigen::RowVectorXd mean = data.points.colwise().mean();
  return 0.5 * (data.points.rowwise() - mean).squaredNorm();
}

// gamma above which every mutually-unit-affinity leaf set must be fused.
inline double leaf_fusion_gamma_bound(double E, int n) {
  if (!(E >= 0.0)) fail(Errc::negative_input, "E must be >= 0");
  if (n < 1) fail(Errc::empty_data, "n must be >= 1");
  return 8.0 * std::sqrt(E) / static_cast<double>(n);
}

// Minimizes E_gamma by operator splitting over the weighted pairs: a
// closed-form quadratic update of the centroids against a cached sparse
// Cholesky factor of (I + rho*L), a proximal update of one auxiliary
// difference variable per pair (block soft-thresholding for the Euclidean
// penalty, componentwise for l1), and a scaled multiplier update.
inline SolveReport solve(const DataSet& data, const AffinityMatrix& aff, double gamma,
                         const SolveOptions& opts = {},
                         const std::optional<CentroidSet>& warm_start = std::nullopt) {
  if (warm_start) detail::check_shapes(data, aff, gamma, *warm_start);
  else detail::check_shapes(data, aff, gamma, CentroidSet(data.points));
  if (opts.max_iterations < 1 || !(opts.tolerance > 0.0)) {
    fail(Errc::bad_config, "max_iterations >= 1 and tolerance > 0 required");
  }

  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  const std::vector<detail::Pair> pairs = detail::active_pairs(aff);
  const int m = static_cast<int>(pairs.size());

  SolveReport rep;
  if (gamma == 0.0 || m == 0 || n == 1) {
    rep.centroids = data.points;
    rep.objective = energy(data, aff, gamma, rep.centroids, opts.norm_kind);
    rep.converged = true;
    if (opts.record_energy_trace) rep.energy_trace.push_back(rep.objective);
    return rep;
  }

  double rho = opts.rho;
  Eigen::SparseMatrix<double> laplacian(n, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(4 * m + n));
    for (const auto& pr : pairs) {
      trip.emplace_back(pr.i, pr.i, 1.0);
      trip.emplace_back(pr.j, pr.j, 1.0);
      trip.emplace_back(pr.i, pr.j, -1.0);
      trip.emplace_back(pr.j, pr.i, -1.0);
    }
    laplacian.setFromTriplets(trip.begin(), trip.end());
  }
  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> chol;
  auto refactor = [&]() {
    Eigen::SparseMatrix<double> sys = identity + rho * laplacian;
    chol.compute(sys);
    if (chol.info() != Eigen::Success) fail(Errc::bad_config, "splitting system not SPD");
  };
  refactor();

  CentroidSet u = warm_start ? *warm_start : CentroidSet(data.points);
  Eigen::MatrixXd v(m, p);
  for (int k = 0; k < m; ++k) v.row(k) = u.row(pairs[k].i) - u.row(pairs[k].j);
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(m, p);

  double obj = energy(data, aff, gamma, u, opts.norm_kind);
  if (opts.record_energy_trace) rep.energy_trace.push_back(obj);
  CentroidSet u_prev = u;
  double obj_prev = obj;
  double primal = 0.0;

  int it = 0;
  for (it = 1; it <= opts.max_iterations; ++it) {
    // centroid update: (I + rho L) u = x + rho E^T (v - lambda)
    Eigen::MatrixXd rhs = data.points;
    for (int k = 0; k < m; ++k) {
      Eigen::RowVectorXd z = rho * (v.row(k) - lambda.row(k));
      rhs.row(pairs[k].i) += z;
      rhs.row(pairs[k].j) -= z;
    }
    u = chol.solve(rhs);

    // per-pair proximal update and multiplier step
    double primal_sq = 0.0;
    double dual_sq = 0.0;
    for (int k = 0; k < m; ++k) {
      Eigen::RowVectorXd d = u.row(pairs[k].i) - u.row(pairs[k].j);
      Eigen::RowVectorXd a = d + lambda.row(k);
      const double kappa = gamma * pairs[k].w / rho;
      Eigen::RowVectorXd v_new(p);
      if (opts.norm_kind == NormKind::euclidean) {
        double na = a.norm();
        double scale = na > kappa ? 1.0 - kappa / na : 0.0;
        v_new = scale * a;
      } else {
        for (int c = 0; c < p; ++c) {
          double ac = a(c);
          v_new(c) = ac > kappa ? ac - kappa : (ac < -kappa ? ac + kappa : 0.0);
        }
      }
      dual_sq += (v_new - v.row(k)).squaredNorm();
      v.row(k) = v_new;
      lambda.row(k) += d - v_new;
      primal_sq += (d - v_new).squaredNorm();
    }
    primal = std::sqrt(primal_sq);

    obj = energy(data, aff, gamma, u, opts.norm_kind);
    if (opts.record_energy_trace) rep.energy_trace.push_back(obj);

    double du = (u - u_prev).norm() / (1.0 + u.norm());
    double dobj = std::abs(obj - obj_prev) / (1.0 + std::abs(obj));
    // the first centroid update is a no-op when v matches the warm start,
    // so convergence may only be declared from the second iteration on
    if (it >= 2 && du < opts.tolerance && dobj < opts.tolerance) {
      rep.converged = true;
      break;
    }
    u_prev = u;
    obj_prev = obj;

    if (opts.adaptive_rho && it % 10 == 0) {
      double dual = rho * std::sqrt(dual_sq);
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        lambda /= 2.0;
        refactor();
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        lambda *= 2.0;
        refactor();
      }
    }
  }

  rep.centroids = std::move(u);
  rep.objective = energy(data, aff, gamma, rep.centroids, opts.norm_kind);
  rep.iterations = std::min(it, opts.max_iterations);
  rep.primal_residual = primal;
  return rep;
}

// Verification oracle: plain subgradient descent with diminishing steps
// 1/(t+1) on the same objective, returning the best iterate seen. Meant for
// small instances (documented for n <= 8, p <= 3); deliberately a different
// algorithm family than solve().
inline CentroidSet oracle_solve(const DataSet& data, const AffinityMatrix& aff, double gamma,
                                NormKind norm_kind, long iterations) {
  detail::check_shapes(data, aff, gamma, CentroidSet(data.points));
  const int p = static_cast<int>(data.p());
  const std::vector<detail::Pair> pairs = detail::active_pairs(aff);

  CentroidSet u = data.points;
  if (gamma == 0.0 || pairs.empty()) return u;

  CentroidSet best = u;
  double best_obj = energy(data, aff, gamma, u, norm_kind);
  Eigen::MatrixXd grad(data.n(), p);

  for (long t = 1; t <= iterations; ++t) {
    grad = u - data.points;
    for (const auto& pr : pairs) {
      Eigen::RowVectorXd d = u.row(pr.i) - u.row(pr.j);
      Eigen::RowVectorXd s(p);
      if (norm_kind == NormKind::euclidean) {
        double nd = d.norm();
        s = nd > 0.0 ? Eigen::RowVectorXd(d / nd) : Eigen::RowVectorXd::Zero(p);
      } else {
        for (int c = 0; c < p; ++c) s(c) = d(c) > 0.0 ? 1.0 : (d(c) < 0.0 ? -1.0 : 0.0);
      }
      grad.row(pr.i) += gamma * pr.w * s;
      grad.row(pr.j) -= gamma * pr.w * s;
    }
    u -= (1.0 / static_cast<double>(t + 1)) * grad;
    double obj = energy(data, aff, gamma, u, norm_kind);
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  return best;
}

}  // namespace sonpath
