#pragma once

#include "npsvc/common.hpp"

#include <vector>

namespace npsvc {

// ---------------------------------------------------------------------------
// Box-constrained QP:  min ½ λᵀQλ + bᵀλ  s.t.  0 ≤ λ ≤ c
// ---------------------------------------------------------------------------

struct BoxQP {
  Matrix Q;
  Vector b;
  double upper = 1.0;

  void validate() const;
};

struct BoxQPOptions {
  double tol = 1e-8;
  int max_sweeps = 10000;
};

struct BoxQPResult {
  Vector lambda;
  double residual = 0.0;
  int sweeps = 0;
};

/// Cyclic coordinate descent with exact clipped 1-D minimization, plus a
/// projected Newton step on the free face every 25 sweeps.
/// Stops when ‖λ − Π_box(λ − (Qλ + b))‖_∞ ≤ tol; throws NonConvergedError
/// carrying that residual otherwise.
BoxQPResult solve_box_qp(const BoxQP& prob, const BoxQPOptions& opts = {},
                         const Vector* warm_start = nullptr);

double box_qp_objective(const BoxQP& prob, const Vector& lambda);
double box_qp_residual(const BoxQP& prob, const Vector& lambda);

// ---------------------------------------------------------------------------
// Simplex QP:  min_{τ ∈ Δ} ½‖Σ τ_l g_l‖² − γ Σ τ_l J_l
// ---------------------------------------------------------------------------

struct SimplexQP {
  /// One column per objective; all columns share the same dimension.
  Matrix directions;
  Vector values;
  double tradeoff = 0.0;

  void validate() const;
};

struct SimplexQPOptions {
  double tol = 1e-10;
  int max_updates = 50000;
};

struct SimplexQPResult {
  Vector tau;
  double objective = 0.0;
  /// max_{τ_i > 0} ∂_i − min_j ∂_j at exit.
  double stationarity = 0.0;
  int updates = 0;
};

/// Greedy two-coordinate descent: each update moves mass from the support
/// coordinate with the largest partial derivative to the coordinate with the
/// smallest, with an exact line search.
SimplexQPResult solve_simplex_qp(const SimplexQP& prob,
                                 const SimplexQPOptions& opts = {},
                                 const Vector* warm_start = nullptr);

double simplex_qp_objective(const SimplexQP& prob, const Vector& tau);

// ---------------------------------------------------------------------------
// Stiefel manifold
// ---------------------------------------------------------------------------

/// Compact SVD with each left singular vector's largest-magnitude entry
/// made positive (right vectors flipped to match).
struct CompactSvd {
  Matrix U;
  Vector singular_values;
  Matrix V;
};

CompactSvd compact_svd(const Matrix& A);

/// Nearest point on St(p, d): UVᵀ from the compact SVD of A. Throws
/// rank_deficient when σ_min < 1e−12 · σ_max.
Matrix stiefel_project(const Matrix& A);

struct GpiOptions {
  double tol = 1e-9;
  int max_iter = 1000;
};

struct GpiResult {
  Matrix P;
  /// Objective at P₀ followed by one entry per iteration.
  std::vector<double> objective;
  int iterations = 0;
};

/// Tr(PᵀHP) + 2 Tr(PᵀE)
double gpi_objective(const Matrix& H, const Matrix& E, const Matrix& P);

/// Generalized power iteration for max Tr(PᵀHP) + 2Tr(PᵀE) over PᵀP = I.
/// Stops once the relative objective change drops to `tol`.
GpiResult gpi_maximize(const Matrix& H, const Matrix& E, const Matrix& P0,
                       const GpiOptions& opts = {});

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double largest_eigenvalue_psd(const Matrix& S, double tol = 1e-6, int max_iter = 500);

}  // namespace npsvc
