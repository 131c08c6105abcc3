#pragma once

#include "npsvc/common.hpp"

#include <optional>

namespace npsvc {

// Sample matrices throughout the library are m × n: one column per sample.

enum class KernelKind { linear, gaussian };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  /// t in exp(−‖x − x'‖² / t). Gaussian only.
  double bandwidth = 1.0;
  /// Ridge ε added to the Gram before factorization. Unset: start from
  /// 1e−8 · mean(diag K). Escalated ×10 on failure either way.
  std::optional<double> jitter;

  static KernelSpec linear() { return {KernelKind::linear, 1.0, std::nullopt}; }
  static KernelSpec gaussian(double t) {
    return {KernelKind::gaussian, t, std::nullopt};
  }

  void validate() const;
  double operator()(const Eigen::Ref<const Vector>& a,
                    const Eigen::Ref<const Vector>& b) const;
};

/// Ψ with ΨΨᵀ = K + εI. For factored kernels Ψ is the lower Cholesky factor
/// (n × n); for the linear kernel Ψ = Xᵀ (n × m) and `factored` is false.
struct GramFactor {
  Matrix psi;
  bool factored = false;
  double jitter = 0.0;

  Index n() const { return psi.rows(); }
  Index p() const { return psi.cols(); }
};

/// Exact pairwise squared distances; symmetric with an exactly zero diagonal.
Matrix pairwise_sq_dists(const Matrix& X);

/// t = (1/n²) Σ_ij ‖x_i − x_j‖², computed as 2 · mean ‖x_i − x̄‖².
double gaussian_bandwidth(const Matrix& X);

/// n × n kernel matrix without jitter.
Matrix gram_matrix(const Matrix& X, const KernelSpec& spec);

/// n × n' matrix of 𝒦(x_i, x'_j).
Matrix cross_kernel(const Matrix& X, const Matrix& Xq, const KernelSpec& spec);

GramFactor gram_factor(const Matrix& X, const KernelSpec& spec);

/// Cholesky of K + εI for an externally supplied symmetric K.
GramFactor factor_gram(const Matrix& K, std::optional<double> jitter = {});

/// Default neighbor count ⌊log₂ n⌋ when k == 0; validates 1 ≤ k < n.
Index resolve_neighbor_count(Index k, Index n);

/// Symmetric kNN adjacency: G_ij = 𝒦(x_i, x_j) when either point is among
/// the other's k nearest (self excluded, ties to the lower index).
SparseMatrix knn_graph(const Matrix& X, Index k, const KernelSpec& spec);

struct GraphLaplacian {
  SparseMatrix adjacency;
  /// I − D^{−1/2} G D^{−1/2}; isolated nodes keep an identity row.
  SparseMatrix laplacian;
  Index neighbors = 0;
};

GraphLaplacian normalized_laplacian(const SparseMatrix& G, Index neighbors = 0);

}  // namespace npsvc
