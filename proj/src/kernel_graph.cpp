#include "npsvc/kernel_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace npsvc {

namespace {

constexpr int kMaxJitterEscalations = 6;

}  // namespace

const char* to_string(KernelKind kind) {
  return kind == KernelKind::linear ? "linear" : "gaussian";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "gaussian") return KernelKind::gaussian;
  throw Error(ErrorKind::invalid_argument, "unknown kernel '" + name + "'");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw Error(ErrorKind::invalid_argument,
                "gaussian bandwidth must be positive, got " + std::to_string(bandwidth));
  if (jitter && !(*jitter >= 0.0))
    throw Error(ErrorKind::invalid_argument, "kernel jitter must be non-negative");
}

double KernelSpec::operator()(const Eigen::Ref<const Vector>& a,
                              const Eigen::Ref<const Vector>& b) const {
  if (kind == KernelKind::linear) return a.dot(b);
  return std::exp(-(a - b).squaredNorm() / bandwidth);
}

Matrix pairwise_sq_dists(const Matrix& X) {
  const Index n = X.cols();
  Matrix D = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double d = (X.col(i) - X.col(j)).squaredNorm();
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

double gaussian_bandwidth(const Matrix& X) {
  const Index n = X.cols();
  if (n < 2)
    throw Error(ErrorKind::degenerate_data,
                "bandwidth heuristic needs at least two samples");
  const Vector mean = X.rowwise().mean();
  const double spread = (X.colwise() - mean).squaredNorm() / static_cast<double>(n);
  const double t = 2.0 * spread;
  if (!(t > 0.0))
    throw Error(ErrorKind::degenerate_data,
                "all samples are identical; bandwidth would be zero");
  return t;
}

Matrix gram_matrix(const Matrix& X, const KernelSpec& spec) {
  spec.validate();
  if (spec.kind == KernelKind::linear) return X.transpose() * X;
  Matrix K = pairwise_sq_dists(X);
  K = (-K.array() / spec.bandwidth).exp().matrix();
  return K;
}

Matrix cross_kernel(const Matrix& X, const Matrix& Xq, const KernelSpec& spec) {
  spec.validate();
  if (X.rows() != Xq.rows())
    throw Error(ErrorKind::dimension_mismatch,
                "feature dimension " + std::to_string(Xq.rows()) +
                    " does not match training dimension " + std::to_string(X.rows()));
  Matrix K = X.transpose() * Xq;
  if (spec.kind == KernelKind::linear) return K;
  const Vector xn = X.colwise().squaredNorm().transpose();
  const Vector qn = Xq.colwise().squaredNorm().transpose();
  for (Index j = 0; j < K.cols(); ++j)
    for (Index i = 0; i < K.rows(); ++i) {
      const double d = std::max(0.0, xn(i) + qn(j) - 2.0 * K(i, j));
      K(i, j) = std::exp(-d / spec.bandwidth);
    }
  return K;
}

GramFactor factor_gram(const Matrix& K, std::optional<double> jitter) {
  if (K.rows() != K.cols())
    throw Error(ErrorKind::invalid_argument, "Gram matrix must be square");
  if (!K.allFinite())
    throw Error(ErrorKind::invalid_argument, "Gram matrix has non-finite entries");
  const Index n = K.rows();
  const double base = std::max(n > 0 ? 1e-8 * K.diagonal().mean() : 0.0, 1e-12);

  std::vector<double> schedule;
  if (jitter) schedule.push_back(*jitter);
  double eps = jitter && *jitter >= base ? *jitter * 10.0 : base;
  for (int i = 0; i <= kMaxJitterEscalations; ++i, eps *= 10.0) schedule.push_back(eps);

  for (double ridge : schedule) {
    Matrix shifted = K;
    shifted.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    if ((L.diagonal().array() > 0.0).all()) return GramFactor{std::move(L), true, ridge};
  }
  throw Error(ErrorKind::not_positive_definite,
              "Cholesky failed after jitter escalation up to " +
                  std::to_string(schedule.back()));
}

GramFactor gram_factor(const Matrix& X, const KernelSpec& spec) {
  spec.validate();
  if (!X.allFinite())
    throw Error(ErrorKind::invalid_argument, "sample matrix has non-finite entries");
  if (spec.kind == KernelKind::linear) return GramFactor{X.transpose(), false, 0.0};
  return factor_gram(gram_matrix(X, spec), spec.jitter);
}

Index resolve_neighbor_count(Index k, Index n) {
  if (k == 0) {
    if (n < 2) throw Error(ErrorKind::invalid_argument, "kNN graph needs n ≥ 2");
    k = static_cast<Index>(std::floor(std::log2(static_cast<double>(n))));
  }
  if (k < 1 || k >= n)
    throw Error(ErrorKind::invalid_argument,
                "neighbor count " + std::to_string(k) + " must satisfy 1 ≤ k < n = " +
                    std::to_string(n));
  return k;
}

SparseMatrix knn_graph(const Matrix& X, Index k, const KernelSpec& spec) {
  spec.validate();
  const Index n = X.cols();
  k = resolve_neighbor_count(k, n);
  const Matrix D = pairwise_sq_dists(X);

  std::vector<std::vector<char>> linked(n, std::vector<char>(n, 0));
  std::vector<Index> order(n);
  for (Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Index a, Index b) {
                        return D(i, a) < D(i, b) || (D(i, a) == D(i, b) && a < b);
                      });
    for (Index r = 0; r < k; ++r) {
      linked[i][order[r]] = 1;
      linked[order[r]][i] = 1;
    }
    order.resize(n);
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(2 * n * k));
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i)
      if (linked[i][j]) {
        const double w = spec(X.col(i), X.col(j));
        entries.emplace_back(i, j, w);
        entries.emplace_back(j, i, w);
      }
  SparseMatrix G(n, n);
  G.setFromTriplets(entries.begin(), entries.end());
  return G;
}

GraphLaplacian normalized_laplacian(const SparseMatrix& G, Index neighbors) {
  if (G.rows() != G.cols())
    throw Error(ErrorKind::invalid_argument, "adjacency must be square");
  const Index n = G.rows();
  const SparseMatrix asym = G - SparseMatrix(G.transpose());
  const double scale = G.nonZeros() ? std::max(1.0, G.coeffs().cwiseAbs().maxCoeff()) : 1.0;
  if (asym.nonZeros() && asym.coeffs().cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::invalid_argument, "adjacency is not symmetric");
  if (G.nonZeros() && G.coeffs().minCoeff() < 0.0)
    throw Error(ErrorKind::invalid_argument, "adjacency has negative weights");

  Vector degree = Vector::Zero(n);
  for (Index j = 0; j < G.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(G, j); it; ++it) degree(it.row()) += it.value();
  Vector inv_sqrt = Vector::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (degree(i) > 0.0) inv_sqrt(i) = 1.0 / std::sqrt(degree(i));

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(G.nonZeros() + n));
  for (Index i = 0; i < n; ++i) entries.emplace_back(i, i, 1.0);
  for (Index j = 0; j < G.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(G, j); it; ++it)
      if (it.value() != 0.0)
        entries.emplace_back(it.row(), it.col(),
                             -it.value() * (inv_sqrt(it.row()) * inv_sqrt(it.col())));
  SparseMatrix L(n, n);
  L.setFromTriplets(entries.begin(), entries.end());
  return GraphLaplacian{G, std::move(L), neighbors};
}

}  // namespace npsvc
