#include "npsvc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npsvc {

namespace {

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double projected_residual(const Vector& lambda, const Vector& grad, double upper) {
  double r = 0.0;
  for (Index i = 0; i < lambda.size(); ++i)
    r = std::max(r, std::abs(lambda(i) - clip(lambda(i) - grad(i), 0.0, upper)));
  return r;
}

// Projected Newton refinement with an ε-active set: coordinates within ε of
// a bound whose gradient pushes outward stay fixed, the rest take a Newton
// step on their face, the fixed ones a diagonally scaled gradient step, and
// the combined step is projected onto the box with backtracking. ε shrinks
// with the KKT residual, so the face is identified exactly near the optimum
// where cyclic sweeps crawl along flat valleys.
bool refine_free_face(const BoxQP& prob, Vector& lambda, Vector& grad) {
  const double c = prob.upper;
  const Index q = lambda.size();
  bool improved = false;
  double obj = 0.5 * lambda.dot(grad + prob.b);
  for (int round = 0; round < 30; ++round) {
    const double eps = std::min(0.1 * c, projected_residual(lambda, grad, c));
    if (eps == 0.0) break;
    std::vector<Index> work;
    for (Index i = 0; i < q; ++i) {
      const bool fixed = (lambda(i) <= eps && grad(i) > 0.0) || (lambda(i) >= c - eps && grad(i) < 0.0);
      if (!fixed) work.push_back(i);
    }
    Vector dir = Vector::Zero(q);
    for (Index i = 0; i < q; ++i)
      if (prob.Q(i, i) > 0.0) dir(i) = -grad(i) / prob.Q(i, i);
    if (!work.empty()) {
      Eigen::LDLT<Matrix> ldlt(prob.Q(work, work));
      if (ldlt.info() != Eigen::Success) break;
      const Vector step = -ldlt.solve(grad(work));
      if (!step.allFinite()) break;
      dir(work) = step;
    }
    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-8; alpha *= 0.5) {
      const Vector trial = (lambda + alpha * dir).unaryExpr([c](double x) { return clip(x, 0.0, c); });
      const Vector trial_grad = prob.Q * trial + prob.b;
      const double trial_obj = 0.5 * trial.dot(trial_grad + prob.b);
      if (trial_obj < obj) {
        lambda = trial;
        grad = trial_grad;
        obj = trial_obj;
        accepted = improved = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return improved;
}

constexpr int kRefineEvery = 25;

}  // namespace

void BoxQP::validate() const {
  if (Q.rows() != Q.cols() || Q.rows() != b.size())
    throw Error(ErrorKind::invalid_argument, "box QP: Q must be q×q with q = |b|");
  if (!(upper > 0.0) || !std::isfinite(upper))
    throw Error(ErrorKind::invalid_argument, "box QP: upper bound must be positive");
  if (!Q.allFinite() || !b.allFinite())
    throw Error(ErrorKind::invalid_argument, "box QP: non-finite data");
  if (max_abs(Q - Q.transpose()) > 1e-10 * std::max(1.0, max_abs(Q)))
    throw Error(ErrorKind::invalid_argument, "box QP: Q is not symmetric");
}

double box_qp_objective(const BoxQP& prob, const Vector& lambda) {
  return 0.5 * lambda.dot(prob.Q * lambda) + prob.b.dot(lambda);
}

double box_qp_residual(const BoxQP& prob, const Vector& lambda) {
  return projected_residual(lambda, prob.Q * lambda + prob.b, prob.upper);
}

BoxQPResult solve_box_qp(const BoxQP& prob, const BoxQPOptions& opts,
                         const Vector* warm_start) {
  prob.validate();
  const Index q = prob.b.size();
  const double c = prob.upper;
  Vector lambda = Vector::Zero(q);
  if (warm_start && warm_start->size() == q)
    lambda = warm_start->unaryExpr([c](double x) { return clip(x, 0.0, c); });

  Vector grad = prob.Q * lambda + prob.b;
  double residual = projected_residual(lambda, grad, c);
  for (int sweep = 0; sweep <= opts.max_sweeps; ++sweep) {
    if (residual <= opts.tol) {
      // Incremental gradients drift; confirm against a fresh product.
      grad = prob.Q * lambda + prob.b;
      residual = projected_residual(lambda, grad, c);
      if (residual <= opts.tol) return {std::move(lambda), residual, sweep};
    }
    if (sweep == opts.max_sweeps) break;
    for (Index i = 0; i < q; ++i) {
      const double qii = prob.Q(i, i);
      const double g = grad(i);
      double target;
      if (qii > 0.0)
        target = clip(lambda(i) - g / qii, 0.0, c);
      else
        target = g > 0.0 ? 0.0 : (g < 0.0 ? c : lambda(i));
      const double delta = target - lambda(i);
      if (delta != 0.0) {
        lambda(i) = target;
        grad.noalias() += delta * prob.Q.col(i);
      }
    }
    if ((sweep + 1) % kRefineEvery == 0) refine_free_face(prob, lambda, grad);
    residual = projected_residual(lambda, grad, c);
  }
  throw NonConvergedError("box QP did not reach tolerance; KKT residual " +
                              std::to_string(residual),
                          residual);
}

void SimplexQP::validate() const {
  if (values.size() < 1)
    throw Error(ErrorKind::invalid_argument, "simplex QP needs at least one objective");
  if (directions.cols() != values.size())
    throw Error(ErrorKind::invalid_argument,
                "simplex QP: one direction column per objective required");
  if (!(tradeoff >= 0.0))
    throw Error(ErrorKind::invalid_argument, "simplex QP: trade-off must be non-negative");
  if (!directions.allFinite() || !values.allFinite())
    throw Error(ErrorKind::invalid_argument, "simplex QP: non-finite data");
}

double simplex_qp_objective(const SimplexQP& prob, const Vector& tau) {
  return 0.5 * (prob.directions * tau).squaredNorm() - prob.tradeoff * prob.values.dot(tau);
}

SimplexQPResult solve_simplex_qp(const SimplexQP& prob, const SimplexQPOptions& opts,
                                 const Vector* warm_start) {
  prob.validate();
  const Index K = prob.values.size();
  const Matrix G = prob.directions.transpose() * prob.directions;
  const Vector linear = -prob.tradeoff * prob.values;

  Vector tau = Vector::Constant(K, 1.0 / static_cast<double>(K));
  if (warm_start && warm_start->size() == K && (warm_start->array() >= 0.0).all() &&
      std::abs(warm_start->sum() - 1.0) <= 1e-12)
    tau = *warm_start / warm_start->sum();

  // Gradient entries are O(scale); the stopping gap is measured on that scale.
  const double scale =
      std::max({1.0, G.diagonal().cwiseAbs().maxCoeff(), linear.cwiseAbs().maxCoeff()});
  const double tol = opts.tol * scale;

  Vector grad = G * tau + linear;
  auto violating_pair = [&](Index& out, Index& in) {
    out = -1;
    in = 0;
    for (Index l = 0; l < K; ++l) {
      if (tau(l) > 0.0 && (out < 0 || grad(l) > grad(out))) out = l;
      if (grad(l) < grad(in)) in = l;
    }
    return grad(out) - grad(in);
  };

  int updates = 0;
  Index out = 0, in = 0;
  double gap = violating_pair(out, in);
  while (true) {
    if (gap <= tol) {
      grad = G * tau + linear;
      gap = violating_pair(out, in);
      if (gap <= tol) break;
    }
    if (updates >= opts.max_updates) {
      const double obj = 0.5 * tau.dot(G * tau) + linear.dot(tau);
      throw NonConvergedError("simplex QP did not converge; objective " + std::to_string(obj),
                              obj);
    }
    const double curvature = G(out, out) + G(in, in) - 2.0 * G(out, in);
    double step = tau(out);
    if (curvature > 0.0) step = std::min(step, gap / curvature);
    if (step >= tau(out)) {
      step = tau(out);
      tau(in) += step;
      tau(out) = 0.0;
    } else {
      tau(out) -= step;
      tau(in) += step;
    }
    grad.noalias() += step * (G.col(in) - G.col(out));
    ++updates;
    gap = violating_pair(out, in);
  }

  tau /= tau.sum();
  const double objective = 0.5 * tau.dot(G * tau) + linear.dot(tau);
  return {std::move(tau), objective, std::max(gap, 0.0), updates};
}

CompactSvd compact_svd(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  CompactSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index k = 0; k < out.U.cols(); ++k) {
    Index idx = 0;
    out.U.col(k).cwiseAbs().maxCoeff(&idx);
    if (out.U(idx, k) < 0.0) {
      out.U.col(k) *= -1.0;
      out.V.col(k) *= -1.0;
    }
  }
  return out;
}

Matrix stiefel_project(const Matrix& A) {
  if (A.cols() > A.rows())
    throw Error(ErrorKind::invalid_argument,
                "Stiefel projection needs d ≤ p, got " + std::to_string(A.cols()) + " > " +
                    std::to_string(A.rows()));
  if (A.cols() == 0) return A;
  if (!A.allFinite())
    throw Error(ErrorKind::invalid_argument, "Stiefel projection of non-finite matrix");
  const CompactSvd svd = compact_svd(A);
  const double smax = svd.singular_values(0);
  const double smin = svd.singular_values(svd.singular_values.size() - 1);
  if (!(smax > 0.0) || smin < 1e-12 * smax)
    throw Error(ErrorKind::rank_deficient,
                "matrix is rank deficient (σ_min = " + std::to_string(smin) +
                    ", σ_max = " + std::to_string(smax) + ")");
  return svd.U * svd.V.transpose();
}

double gpi_objective(const Matrix& H, const Matrix& E, const Matrix& P) {
  return (P.transpose() * H * P).trace() + 2.0 * (P.transpose() * E).trace();
}

GpiResult gpi_maximize(const Matrix& H, const Matrix& E, const Matrix& P0,
                       const GpiOptions& opts) {
  if (H.rows() != H.cols() || H.rows() != P0.rows() || E.rows() != P0.rows() ||
      E.cols() != P0.cols())
    throw Error(ErrorKind::invalid_argument, "GPI: inconsistent shapes");
  // HP serves both the objective at P and the next iterate.
  Matrix HP = H * P0;
  GpiResult result{P0, {(P0.array() * (HP + 2.0 * E).array()).sum()}, 0};
  for (int it = 1; it <= opts.max_iter; ++it) {
    result.P = stiefel_project(HP + E);
    HP.noalias() = H * result.P;
    const double prev = result.objective.back();
    const double cur = (result.P.array() * (HP + 2.0 * E).array()).sum();
    result.objective.push_back(cur);
    result.iterations = it;
    if (std::abs(cur - prev) <= opts.tol * std::max(std::abs(cur), 1e-12)) break;
  }
  return result;
}

double largest_eigenvalue_psd(const Matrix& S, double tol, int max_iter) {
  const Index n = S.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + static_cast<double>(i % 7) / 7.0;
  v.normalize();
  double lambda = v.dot(S * v);
  for (int it = 0; it < max_iter; ++it) {
    Vector w = S * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(S * v);
    const bool done = std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    if (done) break;
  }
  return lambda;
}

}  // namespace npsvc
