#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sonpath/core.hpp"
#include "sonpath/solver.hpp"

namespace sonpath {

enum class PenaltyKind { erf_variant, scad, mcp };

// A folded concave penalty: concave and differentiable on (0, inf), zero at
// the origin, positive right-derivative at 0.
struct Penalty {
  PenaltyKind kind = PenaltyKind::erf_variant;
  double sigma = 1.0;   // erf_variant scale
  double lambda = 1.0;  // scad / mcp
  double a = 3.7;       // scad needs a > 2, mcp a > 1

  static Penalty erf_variant(double sigma) {
    Penalty p;
    p.kind = PenaltyKind::erf_variant;
    if (!(sigma > 0.0)) fail(Errc::bad_sigma, "erf penalty needs sigma > 0");
    p.sigma = sigma;
    return p;
  }
  static Penalty scad(double lambda, double a) {
    Penalty p;
    p.kind = PenaltyKind::scad;
    if (!(lambda > 0.0) || !(a > 2.0)) fail(Errc::bad_config, "scad needs lambda > 0, a > 2");
    p.lambda = lambda;
    p.a = a;
    return p;
  }
  static Penalty mcp(double lambda, double a) {
    Penalty p;
    p.kind = PenaltyKind::mcp;
    if (!(lambda > 0.0) || !(a > 1.0)) fail(Errc::bad_config, "mcp needs lambda > 0, a > 1");
    p.lambda = lambda;
    p.a = a;
    return p;
  }
};

inline const char* penalty_name(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::erf_variant: return "erf";
    case PenaltyKind::scad: return "scad";
    case PenaltyKind::mcp: return "mcp";
  }
  return "unknown";
}

// phi(z) for z >= 0.
inline double penalty_value(const Penalty& pen, double z) {
  if (!(z >= 0.0)) fail(Errc::negative_input, "penalty argument must be >= 0");
  switch (pen.kind) {
    case PenaltyKind::erf_variant: {
      // int_0^z exp(-t^2/sigma) dt = sqrt(pi*sigma)/2 * erf(z/sqrt(sigma))
      double rs = std::sqrt(pen.sigma);
      return 0.5 * std::sqrt(std::numbers::pi) * rs * std::erf(z / rs);
    }
    case PenaltyKind::scad: {
      const double l = pen.lambda, a = pen.a;
      if (z <= l) return l * z;
      if (z <= a * l) return (2.0 * a * l * z - z * z - l * l) / (2.0 * (a - 1.0));
      return l * l * (a + 1.0) / 2.0;
    }
    case PenaltyKind::mcp: {
      const double l = pen.lambda, a = pen.a;
      if (z <= a * l) return l * z - z * z / (2.0 * a);
      return a * l * l / 2.0;
    }
  }
  return 0.0;
}

// phi'(z) for z >= 0 (right-derivative at 0).
inline double penalty_derivative(const Penalty& pen, double z) {
  if (!(z >= 0.0)) fail(Errc::negative_input, "penalty argument must be >= 0");
  switch (pen.kind) {
    case PenaltyKind::erf_variant:
      return std::exp(-(z * z) / pen.sigma);
    case PenaltyKind::scad: {
      const double l = pen.lambda, a = pen.a;
      if (z <= l) return l;
      double t = a * l - z;
      return t > 0.0 ? t / (a - 1.0) : 0.0;
    }
    case PenaltyKind::mcp: {
      double t = pen.lambda - z / pen.a;
      return t > 0.0 ? t : 0.0;
    }
  }
  return 0.0;
}

// 1/2 sum_i |x_i - u_i|^2 + gamma sum_{i<j} phi(|u_i - u_j|).
inline double folded_energy(const DataSet& data, const Penalty& pen, double gamma,
                            const CentroidSet& u) {
  if (Errc rc = validate_dataset(data); rc != Errc::ok) fail(rc, "invalid dataset");
  if (u.rows() != data.n() || u.cols() != data.p()) fail(Errc::shape_mismatch, "centroid shape");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail(Errc::negative_gamma, "gamma must be >= 0");
  double fid = 0.5 * (data.points - u).squaredNorm();
  double pen_sum = 0.0;
  const int n = static_cast<int>(u.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pen_sum += penalty_value(pen, (u.row(i) - u.row(j)).norm());
    }
  }
  return fid + gamma * pen_sum;
}

// Majorization weights at the anchor: w_ij = phi'(|u~_i - u~_j|). For the
// erf-variant penalty with anchor = data this reproduces the Gaussian kernel
// affinities bit for bit.
inline AffinityMatrix lla_weights(const Penalty& pen, const CentroidSet& anchor) {
  if (!anchor.allFinite()) fail(Errc::non_finite, "anchor must be finite");
  const int n = static_cast<int>(anchor.rows());
  if (n < 1) fail(Errc::empty_data, "anchor must be non-empty");
  AffinityMatrix aff(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double z = (anchor.row(i) - anchor.row(j)).norm();
      aff.set(i, j, penalty_derivative(pen, z));
    }
  }
  return aff;
}

// The additive constant that makes the weighted sum-of-norms objective an
// exact tangent majorizer of the folded objective at the anchor.
inline double lla_constant(const Penalty& pen, double gamma, const CentroidSet& anchor) {
  double c = 0.0;
  const int n = static_cast<int>(anchor.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double z = (anchor.row(i) - anchor.row(j)).norm();
      c += penalty_value(pen, z) - penalty_derivative(pen, z) * z;
    }
  }
  return gamma * c;
}

struct LlaTrace {
  std::vector<CentroidSet> iterates;       // u^(0) = data, u^(1), ..., u^(K)
  std::vector<double> energies;            // folded objective per iterate
  std::vector<AffinityMatrix> weights_per_step;
  std::vector<bool> converged;             // solver flag per step
};

// Local linear approximation: each step re-derives affinities from the
// previous iterate and solves the weighted convex clustering subproblem,
// warm-started there. Majorize-minimize, so folded energies do not increase.
inline LlaTrace lla_run(const DataSet& data, const Penalty& pen, double gamma, int steps,
                        const SolveOptions& solve_opts = {}) {
  if (steps < 1) fail(Errc::bad_config, "lla_run needs at least one step");
  if (solve_opts.norm_kind != NormKind::euclidean) {
    fail(Errc::bad_config, "folded objective is defined with the Euclidean penalty norm");
  }
  LlaTrace trace;
  trace.iterates.push_back(data.points);
  trace.energies.push_back(folded_energy(data, pen, gamma, data.points));
  for (int k = 1; k <= steps; ++k) {
    const CentroidSet& prev = trace.iterates.back();
    AffinityMatrix w = lla_weights(pen, prev);
    SolveReport rep = solve(data, w, gamma, solve_opts, prev);
    trace.weights_per_step.push_back(std::move(w));
    trace.converged.push_back(rep.converged);
    trace.energies.push_back(folded_energy(data, pen, gamma, rep.centroids));
    trace.iterates.push_back(std::move(rep.centroids));
  }
  return trace;
}

}  // namespace sonpath
