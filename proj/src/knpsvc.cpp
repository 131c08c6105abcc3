#include "npsvc/knpsvc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npsvc {

namespace {

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void check_labels(const Dataset& data) {
  data.validate();
  if (data.num_classes() < 2)
    throw Error(ErrorKind::invalid_dataset, "training needs at least two classes");
  const auto counts = data.class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] == 0)
      throw Error(ErrorKind::invalid_dataset,
                  "class " + format_label(data.labels[k]) + " is empty");
}

Vector hyperplane_denominators(const Matrix& W) {
  Vector d(W.cols());
  for (Index l = 0; l < W.cols(); ++l) d(l) = W.col(l).norm();
  return d;
}

KernelPredictor make_predictor(const Dataset& data, const GramFactor& factor,
                               const KernelSpec& kernel, const Matrix& U, Vector denom) {
  KernelPredictor pred;
  pred.kernel = kernel;
  pred.denom = std::move(denom);
  if (factor.factored) {
    // B = Ψ⁻ᵀ Û via a triangular solve against the upper factor Ψᵀ.
    pred.coef = factor.psi.transpose().triangularView<Eigen::Upper>().solve(U);
    pred.support = data.X;
  } else {
    pred.coef = U;
  }
  pred.validate();
  return pred;
}

}  // namespace

void HyperParams::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw Error(ErrorKind::invalid_argument, std::string(name) + " must be positive");
  };
  positive(c, "c");
  positive(r1, "r1");
  positive(eta, "eta");
  if (!(r2 >= 0.0)) throw Error(ErrorKind::invalid_argument, "r2 must be non-negative");
  if (!(mu >= 0.0)) throw Error(ErrorKind::invalid_argument, "mu must be non-negative");
  if (!(gamma >= 0.0)) throw Error(ErrorKind::invalid_argument, "gamma must be non-negative");
  if (dim < 0) throw Error(ErrorKind::invalid_argument, "dim must be non-negative");
  if (max_outer < 1) throw Error(ErrorKind::invalid_argument, "max_outer must be ≥ 1");
}

Index HyperParams::resolved_dim(int num_classes, Index p) const {
  const Index d = dim > 0 ? dim : std::min<Index>(4 * num_classes, p);
  if (d < 1 || d > p)
    throw Error(ErrorKind::invalid_argument,
                "subspace dimension " + std::to_string(d) + " must lie in [1, p = " +
                    std::to_string(p) + "]");
  return d;
}

ClassBlock precompute_class_block(const Matrix& psi, const std::vector<int>& y, int cls,
                                  double r1) {
  if (!(r1 > 0.0)) throw Error(ErrorKind::invalid_argument, "r1 must be positive");
  if (static_cast<Index>(y.size()) != psi.rows())
    throw Error(ErrorKind::invalid_argument, "label count does not match Ψ rows");
  ClassBlock block;
  for (Index i = 0; i < psi.rows(); ++i)
    (y[static_cast<std::size_t>(i)] == cls ? block.members : block.others).push_back(i);

  const Index p = psi.cols();
  const Matrix psi_l = psi(block.members, Eigen::all);
  const Matrix psi_rest = psi(block.others, Eigen::all);

  Matrix core = psi_l * psi_l.transpose();
  core.diagonal().array() += r1;
  Eigen::LLT<Matrix> llt(core);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::not_positive_definite,
                "r1·I + Ψ_lΨ_lᵀ factorization failed for class " + std::to_string(cls));
  Matrix q = Matrix::Identity(p, p);
  if (psi_l.rows() > 0) q.noalias() -= psi_l.transpose() * llt.solve(psi_l);
  block.q_psi_psi = symmetrized(q / r1);
  block.q_k_psi = psi_rest * block.q_psi_psi;
  block.q_k_k = symmetrized(block.q_k_psi * psi_rest.transpose());
  return block;
}

std::vector<ClassBlock> precompute_class_blocks(const Matrix& psi, const std::vector<int>& y,
                                                int num_classes, double r1) {
  std::vector<ClassBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(num_classes));
  for (int l = 0; l < num_classes; ++l) blocks.push_back(precompute_class_block(psi, y, l, r1));
  return blocks;
}

UStep update_u(const ClassBlock& block, const Matrix& P, const Vector& v, double c, double r1,
               const BoxQPOptions& opts, const Vector* warm_start) {
  const Vector pv = P * v;
  BoxQP prob{block.q_k_k, r1 * (block.q_k_psi * pv) - Vector::Ones(block.q_k_k.rows()), c};
  BoxQPResult dual = solve_box_qp(prob, opts, warm_start);
  UStep step;
  step.u = r1 * (block.q_psi_psi * pv) + block.q_k_psi.transpose() * dual.lambda;
  step.lambda = std::move(dual.lambda);
  step.residual = dual.residual;
  return step;
}

Vector update_v(const Vector& u, const Matrix& P, double r1, double r2) {
  return (r1 / (r1 + r2)) * (P.transpose() * u);
}

ManifoldTerm manifold_term(const Matrix& psi, const SparseMatrix& laplacian, double power_tol,
                           int power_max_iter) {
  if (laplacian.rows() != psi.rows() || laplacian.cols() != psi.rows())
    throw Error(ErrorKind::invalid_argument, "Laplacian size does not match Ψ");
  const Matrix LPsi = laplacian * psi;
  ManifoldTerm term;
  term.S = symmetrized(psi.transpose() * LPsi);
  term.sigma_max = largest_eigenvalue_psd(term.S, power_tol, power_max_iter);
  return term;
}

PStep update_p(const Matrix& U, const Matrix& V, const Vector& tau, const ManifoldTerm& manifold,
               double mu, double r1, const Matrix& P_prev, const GpiOptions& opts) {
  const Index p = P_prev.rows();
  const Matrix E = r1 * U * tau.asDiagonal() * V.transpose();
  PStep step;
  step.sigma = 1.0 + mu * manifold.sigma_max;
  Matrix H = -mu * manifold.S;
  if (H.size() == 0) H = Matrix::Zero(p, p);
  H.diagonal().array() += step.sigma;
  step.gpi = gpi_maximize(H, E, P_prev, opts);
  step.P = step.gpi.P;
  return step;
}

Matrix riemannian_grad_p(const Matrix& P, const Vector& u, const Vector& v, const Matrix& S,
                         double mu, double r1) {
  Matrix G = -r1 * u * v.transpose();
  if (mu != 0.0 && S.size() > 0) G.noalias() += mu * (S * P);
  return G * (P.transpose() * P) - P * (G.transpose() * P);
}

TauStep update_tau_and_descend(const Matrix& P, const std::vector<Matrix>& grads,
                               const Vector& J, double gamma, double eta,
                               const SimplexQPOptions& opts, const Vector* warm_start) {
  const Index K = J.size();
  if (static_cast<Index>(grads.size()) != K)
    throw Error(ErrorKind::invalid_argument, "one Riemannian gradient per objective required");
  SimplexQP prob;
  prob.directions.resize(P.size(), K);
  for (Index l = 0; l < K; ++l)
    prob.directions.col(l) = grads[static_cast<std::size_t>(l)].reshaped();
  prob.values = J;
  prob.tradeoff = gamma;
  SimplexQPResult qp = solve_simplex_qp(prob, opts, warm_start);

  TauStep step;
  step.direction = Matrix::Zero(P.rows(), P.cols());
  for (Index l = 0; l < K; ++l) step.direction -= qp.tau(l) * grads[static_cast<std::size_t>(l)];
  step.P = step.direction.isZero(0.0) ? P : stiefel_project(P + eta * step.direction);
  step.tau = std::move(qp.tau);
  step.qp_objective = qp.objective;
  return step;
}

Vector objectives(const Matrix& U, const Matrix& V, const Matrix& P, const Matrix& psi,
                  const std::vector<int>& y, const Matrix& S, const HyperParams& hp) {
  const Index K = U.cols();
  const Matrix scores = psi * U;
  const double manifold = S.size() > 0 ? 0.5 * hp.mu * (P.transpose() * S * P).trace() : 0.0;
  Vector J = Vector::Zero(K);
  for (Index l = 0; l < K; ++l) {
    double similarity = 0.0, hinge = 0.0;
    for (Index i = 0; i < scores.rows(); ++i) {
      const double f = scores(i, l);
      if (y[static_cast<std::size_t>(i)] == l)
        similarity += 0.5 * f * f;
      else
        hinge += std::max(0.0, 1.0 - f);
    }
    const Vector w = U.col(l) - P * V.col(l);
    J(l) = similarity + hp.c * hinge + 0.5 * hp.r1 * w.squaredNorm() +
           0.5 * hp.r2 * V.col(l).squaredNorm() + manifold;
  }
  return J;
}

KernelSpec graph_kernel(const KernelSpec& spec, const Matrix& X) {
  if (spec.kind == KernelKind::gaussian) return spec;
  return KernelSpec::gaussian(gaussian_bandwidth(X));
}

void KernelPredictor::validate() const {
  if (num_classes() < 2)
    throw Error(ErrorKind::invalid_argument, "predictor needs at least two classes");
  if (denom.size() != coef.cols())
    throw Error(ErrorKind::invalid_argument, "one denominator per class required");
  for (Index l = 0; l < denom.size(); ++l)
    if (!(denom(l) > 0.0) || !std::isfinite(denom(l)))
      throw Error(ErrorKind::degenerate_data,
                  "class " + std::to_string(l) + " has a zero-norm hyperplane");
  if (expansion() && support.cols() != coef.rows())
    throw Error(ErrorKind::invalid_argument, "coefficient rows must match stored samples");
}

Matrix KernelPredictor::decision(const Matrix& X) const {
  if (X.rows() != num_features())
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, model expects " +
                    std::to_string(num_features()));
  if (expansion()) return coef.transpose() * cross_kernel(support, X, kernel);
  return coef.transpose() * X;
}

std::vector<int> KernelPredictor::predict(const Matrix& X) const {
  validate();
  const Matrix f = decision(X);
  std::vector<int> out(static_cast<std::size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j) {
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (Index l = 0; l < f.rows(); ++l) {
      const double score = std::abs(f(l, j)) / denom(l);
      if (score < best_score) {
        best_score = score;
        best = static_cast<int>(l);
      }
    }
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

std::vector<int> predict_knpsvc(const KernelPredictor& predictor, const Matrix& X) {
  return predictor.predict(X);
}

std::vector<int> predict_twsvm(const KernelPredictor& predictor, const Matrix& X) {
  return predictor.predict(X);
}

KFit fit_knpsvc(const Dataset& data, const HyperParams& hp, const KernelSpec& spec,
                std::uint64_t seed) {
  check_labels(data);
  return fit_knpsvc(data, gram_factor(data.X, spec), spec, hp, seed);
}

KFit fit_knpsvc(const Dataset& data, const GramFactor& factor, const KernelSpec& predictor_kernel,
                const HyperParams& hp, std::uint64_t seed) {
  check_labels(data);
  hp.validate();
  const Matrix& psi = factor.psi;
  if (psi.rows() != data.num_samples())
    throw Error(ErrorKind::invalid_argument, "Ψ rows must match the number of samples");
  const int K = data.num_classes();
  const Index p = psi.cols();
  const Index d = hp.resolved_dim(K, p);

  ManifoldTerm manifold;
  if (hp.mu > 0.0) {
    const KernelSpec gk = graph_kernel(predictor_kernel, data.X);
    const Index k = resolve_neighbor_count(hp.neighbors, data.num_samples());
    const GraphLaplacian graph = normalized_laplacian(knn_graph(data.X, k, gk), k);
    manifold = manifold_term(psi, graph.laplacian, hp.power_tol, hp.power_max_iter);
  }
  const std::vector<ClassBlock> blocks = precompute_class_blocks(psi, data.y, K, hp.r1);

  KModelState state;
  {
    auto engine = make_engine(seed, Stream::projection_init);
    state.P = stiefel_project(standard_normal(p, d, engine));
  }
  state.U = Matrix::Zero(p, K);
  state.V = Matrix::Zero(d, K);
  state.tau = Vector::Constant(K, 1.0 / K);
  std::vector<Vector> lambdas(static_cast<std::size_t>(K));

  double prev_dual = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 1; iter <= hp.max_outer; ++iter) {
    TraceRow row;
    row.iter = iter;

    for (int l = 0; l < K; ++l) {
      auto& warm = lambdas[static_cast<std::size_t>(l)];
      UStep u = update_u(blocks[static_cast<std::size_t>(l)], state.P, state.V.col(l), hp.c,
                         hp.r1, hp.box, warm.size() ? &warm : nullptr);
      state.U.col(l) = u.u;
      warm = std::move(u.lambda);
      row.ustep_residual = std::max(row.ustep_residual, u.residual);
    }
    for (int l = 0; l < K; ++l) state.V.col(l) = update_v(state.U.col(l), state.P, hp.r1, hp.r2);

    PStep pstep = update_p(state.U, state.V, state.tau, manifold, hp.mu, hp.r1, state.P, hp.gpi);
    state.sigma = pstep.sigma;
    row.gpi_iterations = pstep.gpi.iterations;
    row.gpi_min_increment = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t < pstep.gpi.objective.size(); ++t)
      row.gpi_min_increment = std::min(row.gpi_min_increment,
                                       pstep.gpi.objective[t] - pstep.gpi.objective[t - 1]);
    state.P = std::move(pstep.P);

    const Vector J_half = objectives(state.U, state.V, state.P, psi, data.y, manifold.S, hp);
    std::vector<Matrix> grads;
    grads.reserve(static_cast<std::size_t>(K));
    for (int l = 0; l < K; ++l)
      grads.push_back(riemannian_grad_p(state.P, state.U.col(l), state.V.col(l), manifold.S,
                                        hp.mu, hp.r1));
    TauStep tstep = update_tau_and_descend(state.P, grads, J_half, hp.gamma, hp.eta, hp.simplex,
                                           &state.tau);
    row.tau_qp_objective = tstep.qp_objective;
    row.max_directional_derivative = -std::numeric_limits<double>::infinity();
    for (const Matrix& g : grads)
      row.max_directional_derivative =
          std::max(row.max_directional_derivative, (g.array() * tstep.direction.array()).sum());
    state.tau = std::move(tstep.tau);
    state.P = std::move(tstep.P);

    row.J = objectives(state.U, state.V, state.P, psi, data.y, manifold.S, hp);
    row.tau = state.tau;
    row.primal = row.J.maxCoeff();
    row.dual = state.tau.dot(row.J);
    row.orth_residual = orthonormality_residual(state.P);
    if (!std::isfinite(row.primal) || !std::isfinite(row.dual))
      throw Error(ErrorKind::divergence, "objective became non-finite at outer iteration " +
                                             std::to_string(iter));
    state.trace.push_back(row);

    if (iter > 1 &&
        std::abs(row.dual - prev_dual) <= hp.tol_outer * std::max(std::abs(row.dual), 1e-12)) {
      state.converged = true;
      break;
    }
    prev_dual = row.dual;
  }

  Vector denom(K);
  for (int l = 0; l < K; ++l) {
    const Vector w = state.U.col(l) - state.P * state.V.col(l);
    denom(l) = std::sqrt(w.squaredNorm() + state.V.col(l).squaredNorm());
  }
  KFit fit{std::move(state), {}};
  fit.predictor = make_predictor(data, factor, predictor_kernel, fit.state.U, std::move(denom));
  return fit;
}

TwsvmFit fit_twsvm(const Dataset& data, const TwsvmParams& params, const KernelSpec& spec) {
  check_labels(data);
  return fit_twsvm(data, gram_factor(data.X, spec), spec, params);
}

TwsvmFit fit_twsvm(const Dataset& data, const GramFactor& factor,
                   const KernelSpec& predictor_kernel, const TwsvmParams& params) {
  check_labels(data);
  if (!(params.c > 0.0) || !(params.r > 0.0))
    throw Error(ErrorKind::invalid_argument, "TWSVM needs c > 0 and r > 0");
  const int K = data.num_classes();
  const Matrix& psi = factor.psi;
  TwsvmFit fit;
  fit.U = Matrix::Zero(psi.cols(), K);
  const Matrix no_projection = Matrix::Zero(psi.cols(), 1);
  const Vector no_subspace = Vector::Zero(1);
  for (int l = 0; l < K; ++l) {
    const ClassBlock block = precompute_class_block(psi, data.y, l, params.r);
    UStep step = update_u(block, no_projection, no_subspace, params.c, params.r, params.box);
    fit.U.col(l) = step.u;
    fit.lambdas.push_back(std::move(step.lambda));
  }
  fit.predictor =
      make_predictor(data, factor, predictor_kernel, fit.U, hyperplane_denominators(fit.U));
  return fit;
}

}  // namespace npsvc
