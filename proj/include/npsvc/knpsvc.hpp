#pragma once

#include "npsvc/common.hpp"
#include "npsvc/dataset.hpp"
#include "npsvc/kernel_graph.hpp"
#include "npsvc/solvers.hpp"

#include <cstdint>
#include <vector>

namespace npsvc {

struct HyperParams {
  double c = 1.0;      ///< dissimilarity (hinge) weight
  double r1 = 0.1;     ///< ‖w_l‖² weight, with w_l = u_l − P v_l
  double r2 = 0.1;     ///< ‖v_l‖² weight
  double mu = 0.1;     ///< manifold regularization weight
  double gamma = 0.1;  ///< dual trade-off in the τ-step
  double eta = 0.01;   ///< projected-descent step on P
  Index dim = 0;       ///< subspace dimension d; 0 → min(4K, p)
  int max_outer = 30;
  double tol_outer = 1e-4;
  Index neighbors = 0;  ///< kNN graph k; 0 → ⌊log₂ n⌋

  BoxQPOptions box;
  GpiOptions gpi;
  SimplexQPOptions simplex;
  double power_tol = 1e-6;
  int power_max_iter = 500;

  void validate() const;
  Index resolved_dim(int num_classes, Index p) const;
};

/// Woodbury blocks for class l (rows of Ψ split into members / others).
struct ClassBlock {
  std::vector<Index> members;
  std::vector<Index> others;
  Matrix q_psi_psi;  ///< p × p, (Ψ_lᵀΨ_l + r1 I)⁻¹
  Matrix q_k_psi;    ///< n₋ₗ × p, Ψ₋ₗ Q_ΨΨ
  Matrix q_k_k;      ///< n₋ₗ × n₋ₗ, Ψ₋ₗ Q_ΨΨ Ψ₋ₗᵀ
};

ClassBlock precompute_class_block(const Matrix& psi, const std::vector<int>& y, int cls,
                                  double r1);
std::vector<ClassBlock> precompute_class_blocks(const Matrix& psi, const std::vector<int>& y,
                                                int num_classes, double r1);

struct UStep {
  Vector u;
  Vector lambda;
  double residual = 0.0;  ///< box-QP KKT residual
};

/// Dual solve for one class: λ from the box QP with Q = Q_KK,
/// b = r1 Q_KΨ P v − 𝟙 and bound c; then û = r1 Q_ΨΨ P v + Q_KΨᵀ λ.
UStep update_u(const ClassBlock& block, const Matrix& P, const Vector& v, double c, double r1,
               const BoxQPOptions& opts = {}, const Vector* warm_start = nullptr);

/// v = r1/(r1 + r2) · Pᵀû
Vector update_v(const Vector& u, const Matrix& P, double r1, double r2);

/// Ψᵀ L Ψ together with its largest eigenvalue.
struct ManifoldTerm {
  Matrix S;
  double sigma_max = 0.0;
};

ManifoldTerm manifold_term(const Matrix& psi, const SparseMatrix& laplacian,
                           double power_tol = 1e-6, int power_max_iter = 500);

struct PStep {
  Matrix P;
  double sigma = 1.0;
  GpiResult gpi;
};

/// GPI on H = σI − μS, E = r1 Û diag(τ) Vᵀ, σ = 1 + μ σ_max(S).
PStep update_p(const Matrix& U, const Matrix& V, const Vector& tau, const ManifoldTerm& manifold,
               double mu, double r1, const Matrix& P_prev, const GpiOptions& opts = {});

/// (G Pᵀ − P Gᵀ) P with G = μ S P − r1 û vᵀ.
Matrix riemannian_grad_p(const Matrix& P, const Vector& u, const Vector& v, const Matrix& S,
                         double mu, double r1);

struct TauStep {
  Vector tau;
  Matrix P;
  /// −Σ τ_l ∇ᴿ J_l
  Matrix direction;
  double qp_objective = 0.0;
};

TauStep update_tau_and_descend(const Matrix& P, const std::vector<Matrix>& grads,
                               const Vector& J, double gamma, double eta,
                               const SimplexQPOptions& opts = {},
                               const Vector* warm_start = nullptr);

/// Per-class objectives J_l at (Û, V, P).
Vector objectives(const Matrix& U, const Matrix& V, const Matrix& P, const Matrix& psi,
                  const std::vector<int>& y, const Matrix& S, const HyperParams& hp);

struct TraceRow {
  int iter = 0;
  double primal = 0.0;  ///< max_l J_l
  double dual = 0.0;    ///< Σ τ_l J_l
  Vector J;
  Vector tau;
  double orth_residual = 0.0;
  // Diagnostics kept in memory only.
  double ustep_residual = 0.0;
  int gpi_iterations = 0;
  double gpi_min_increment = 0.0;
  double tau_qp_objective = 0.0;
  double max_directional_derivative = 0.0;  ///< max_l ⟨∇ᴿ J_l, Δ⟩

  double gap() const { return primal - dual; }
};

struct KModelState {
  Matrix U;  ///< p × K empirical weights
  Matrix V;  ///< d × K
  Matrix P;  ///< p × d, orthonormal columns
  Vector tau;
  std::vector<TraceRow> trace;
  bool converged = false;
  double sigma = 1.0;
};

/// Decision rule argmin_l |f_l(x)| / δ_l, ties to the lowest class.
/// Expansion form: f = Bᵀ k(X, x) over stored samples. Weight form (linear
/// kernel with Ψ = Xᵀ): f = Wᵀx.
struct KernelPredictor {
  KernelSpec kernel;
  Matrix support;  ///< m × n training samples; empty in weight form
  Matrix coef;     ///< n × K (expansion) or m × K (weights)
  Vector denom;    ///< δ_l

  bool expansion() const { return support.size() > 0; }
  int num_classes() const { return static_cast<int>(coef.cols()); }
  Index num_features() const { return expansion() ? support.rows() : coef.rows(); }

  void validate() const;
  /// K × n' raw scores f_l(x).
  Matrix decision(const Matrix& X) const;
  std::vector<int> predict(const Matrix& X) const;
};

struct KFit {
  KModelState state;
  KernelPredictor predictor;
};

KFit fit_knpsvc(const Dataset& data, const HyperParams& hp, const KernelSpec& spec,
                std::uint64_t seed);

/// Same, with an externally built factor (Ψ rows aligned with data columns).
/// `predictor_kernel` evaluates f at prediction time.
KFit fit_knpsvc(const Dataset& data, const GramFactor& factor, const KernelSpec& predictor_kernel,
                const HyperParams& hp, std::uint64_t seed);

std::vector<int> predict_knpsvc(const KernelPredictor& predictor, const Matrix& X);

/// Kernel used for the kNN graph weights: the training kernel when gaussian,
/// otherwise a gaussian with the bandwidth heuristic.
KernelSpec graph_kernel(const KernelSpec& spec, const Matrix& X);

// ---------------------------------------------------------------------------
// One-vs-rest TWSVM baseline: per class
//   min ½‖Ψ_l u‖² + (r/2)‖u‖² + c Σ_{y_i ≠ l} [1 − uᵀψ_i]_+
// ---------------------------------------------------------------------------

struct TwsvmParams {
  double c = 1.0;
  double r = 0.1;
  BoxQPOptions box;
};

struct TwsvmFit {
  Matrix U;
  std::vector<Vector> lambdas;
  KernelPredictor predictor;
};

TwsvmFit fit_twsvm(const Dataset& data, const TwsvmParams& params, const KernelSpec& spec);
TwsvmFit fit_twsvm(const Dataset& data, const GramFactor& factor,
                   const KernelSpec& predictor_kernel, const TwsvmParams& params);

std::vector<int> predict_twsvm(const KernelPredictor& predictor, const Matrix& X);

}  // namespace npsvc
