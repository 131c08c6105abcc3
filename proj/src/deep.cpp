#include "npsvc/deep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace npsvc {

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix uniform(Index rows, Index cols, double bound, std::mt19937_64& engine) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix M(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) M(i, j) = dist(engine);
  return M;
}

// SGD with momentum and decoupled-into-gradient weight decay:
//   v ← m v + (g + λθ),  θ ← θ − lr v
struct MomentumSgd {
  Vector velocity;
  double momentum = 0.9;
  double weight_decay = 0.0;

  void step(Vector& theta, const Vector& grad, double lr) {
    if (velocity.size() != theta.size()) velocity = Vector::Zero(theta.size());
    velocity = momentum * velocity + grad + weight_decay * theta;
    theta -= lr * velocity;
  }
};

Vector flatten_matrix(const Matrix& M) { return M.reshaped(); }

}  // namespace

const char* to_string(PriorMap::Kind kind) {
  return kind == PriorMap::Kind::identity ? "identity" : "projection";
}

PriorMap::Kind prior_kind_from_string(const std::string& name) {
  if (name == "identity") return PriorMap::Kind::identity;
  if (name == "projection") return PriorMap::Kind::projection;
  throw Error(ErrorKind::invalid_argument, "unknown prior map '" + name + "'");
}

Matrix PriorMap::apply(const Matrix& X) const {
  if (X.rows() != input_dim)
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, prior expects " +
                    std::to_string(input_dim));
  return kind == Kind::identity ? X : Matrix(projection * X);
}

PriorMap PriorMap::identity(Index d_in) {
  PriorMap p;
  p.input_dim = d_in;
  return p;
}

PriorMap PriorMap::random_projection(Index d_in, Index d_out, std::uint64_t seed) {
  if (d_in < 1 || d_out < 1)
    throw Error(ErrorKind::invalid_argument, "projection sizes must be positive");
  PriorMap p;
  p.kind = Kind::projection;
  p.input_dim = d_in;
  auto engine = make_engine(seed, Stream::prior_projection);
  p.projection = standard_normal(d_out, d_in, engine) / std::sqrt(static_cast<double>(d_in));
  return p;
}

Index MlpEncoder::num_parameters() const {
  return W1.size() + b1.size() + W2.size() + b2.size() + W3.size() + b3.size();
}

Vector MlpEncoder::flatten() const {
  Vector theta(num_parameters());
  Index pos = 0;
  auto put = [&](const Matrix& M) {
    theta.segment(pos, M.size()) = M.reshaped();
    pos += M.size();
  };
  put(W1), put(b1), put(W2), put(b2), put(W3), put(b3);
  return theta;
}

void MlpEncoder::unflatten(const Vector& theta) {
  if (theta.size() != num_parameters())
    throw Error(ErrorKind::dimension_mismatch, "parameter vector has the wrong length");
  Index pos = 0;
  auto take = [&](auto& M) {
    M.reshaped() = theta.segment(pos, M.size());
    pos += M.size();
  };
  take(W1), take(b1), take(W2), take(b2), take(W3), take(b3);
}

MlpEncoder MlpEncoder::zeros_like() const {
  MlpEncoder z;
  z.W1 = Matrix::Zero(W1.rows(), W1.cols());
  z.W2 = Matrix::Zero(W2.rows(), W2.cols());
  z.W3 = Matrix::Zero(W3.rows(), W3.cols());
  z.b1 = Vector::Zero(b1.size());
  z.b2 = Vector::Zero(b2.size());
  z.b3 = Vector::Zero(b3.size());
  return z;
}

void MlpEncoder::validate() const {
  const Index h = W1.rows();
  if (b1.size() != h || W2.rows() != h || W2.cols() != h || b2.size() != h || W3.cols() != h ||
      b3.size() != W3.rows())
    throw Error(ErrorKind::invalid_argument, "encoder layer shapes do not chain");
  if (!W1.allFinite() || !W2.allFinite() || !W3.allFinite() || !b1.allFinite() ||
      !b2.allFinite() || !b3.allFinite())
    throw Error(ErrorKind::invalid_argument, "encoder has non-finite parameters");
}

MlpEncoder MlpEncoder::init(Index d_in, Index hidden, Index d_z, std::uint64_t seed) {
  if (d_in < 1 || hidden < 1 || d_z < 1)
    throw Error(ErrorKind::invalid_argument, "encoder sizes must be positive");
  auto engine = make_engine(seed, Stream::encoder_init);
  auto glorot = [](Index fan_out, Index fan_in) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  };
  MlpEncoder e;
  e.W1 = uniform(hidden, d_in, glorot(hidden, d_in), engine);
  e.W2 = uniform(hidden, hidden, glorot(hidden, hidden), engine);
  e.W3 = uniform(d_z, hidden, glorot(d_z, hidden), engine);
  e.b1 = Vector::Zero(hidden);
  e.b2 = Vector::Zero(hidden);
  e.b3 = Vector::Zero(d_z);
  return e;
}

Matrix encode(const MlpEncoder& enc, const Matrix& X, EncoderCache* cache) {
  if (X.rows() != enc.input_dim())
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, encoder expects " +
                    std::to_string(enc.input_dim()));
  Matrix H1 = ((enc.W1 * X).colwise() + enc.b1).array().tanh();
  Matrix H2 = ((enc.W2 * H1).colwise() + enc.b2).array().tanh();
  Matrix Z = (enc.W3 * H2).colwise() + enc.b3;
  if (cache) {
    cache->X = X;
    cache->H1 = std::move(H1);
    cache->H2 = std::move(H2);
    cache->Z = Z;
  }
  return Z;
}

MlpEncoder encoder_backward(const MlpEncoder& enc, const EncoderCache& cache, const Matrix& dZ) {
  MlpEncoder g;
  g.W3 = dZ * cache.H2.transpose();
  g.b3 = dZ.rowwise().sum();
  const Matrix dA2 = (enc.W3.transpose() * dZ).array() * (1.0 - cache.H2.array().square());
  g.W2 = dA2 * cache.H1.transpose();
  g.b2 = dA2.rowwise().sum();
  const Matrix dA1 = (enc.W2.transpose() * dA2).array() * (1.0 - cache.H1.array().square());
  g.W1 = dA1 * cache.X.transpose();
  g.b1 = dA1.rowwise().sum();
  return g;
}

void DConfig::validate() const {
  if (hidden < 1 || latent < 1)
    throw Error(ErrorKind::invalid_argument, "hidden and latent sizes must be positive");
  if (epochs < 1 || batch < 1)
    throw Error(ErrorKind::invalid_argument, "epochs and batch size must be positive");
  if (!(lr > 0.0) || !(lr_min >= 0.0) || lr_min > lr)
    throw Error(ErrorKind::invalid_argument, "learning rates must satisfy 0 ≤ lr_min ≤ lr");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw Error(ErrorKind::invalid_argument, "momentum must lie in [0, 1)");
  if (!(beta > 0.0 && beta <= 1.0))
    throw Error(ErrorKind::invalid_argument, "τ momentum β must lie in (0, 1]");
  if (!(weight_decay >= 0.0) || !(gamma_max >= 0.0) || !(gamma_eps >= 0.0))
    throw Error(ErrorKind::invalid_argument, "weight decay and γ settings must be ≥ 0");
  if (!(c > 0.0) || !(margin > 0.0))
    throw Error(ErrorKind::invalid_argument, "c and margin must be positive");
}

void DModel::validate() const {
  encoder.validate();
  if (encoder.input_dim() != prior.input_dim)
    throw Error(ErrorKind::invalid_argument, "prior and encoder input sizes differ");
  if (W.rows() != prior.output_dim() + encoder.output_dim())
    throw Error(ErrorKind::invalid_argument, "classifier rows must equal d_φ + d_z");
  if (W.cols() < 2) throw Error(ErrorKind::invalid_argument, "model needs at least two classes");
  if (tau.size() != W.cols())
    throw Error(ErrorKind::invalid_argument, "one τ entry per class required");
}

ForwardPass forward(const DModel& model, const Matrix& X) {
  if (X.cols() == 0) throw Error(ErrorKind::invalid_argument, "empty batch");
  ForwardPass pass;
  const Matrix prior = model.prior.apply(X);
  const Matrix Z = encode(model.encoder, X, &pass.cache);
  pass.features.resize(prior.rows() + Z.rows(), X.cols());
  pass.features << prior, Z;
  if (model.W.rows() != pass.features.rows())
    throw Error(ErrorKind::dimension_mismatch, "classifier does not match feature size");
  pass.scores = model.W.transpose() * pass.features;
  return pass;
}

Vector batch_objectives(const Matrix& scores, const std::vector<int>& y, double c, double s,
                        int num_classes) {
  if (scores.rows() != num_classes || static_cast<Index>(y.size()) != scores.cols())
    throw Error(ErrorKind::dimension_mismatch, "scores must be K × |B|");
  const double other = num_classes > 1 ? c / (num_classes - 1) : 0.0;
  Vector J = Vector::Zero(num_classes);
  for (Index i = 0; i < scores.cols(); ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    for (int l = 0; l < num_classes; ++l) {
      const double f = scores(l, i);
      if (yi == l) {
        J(l) += 0.5 * f * f;
      } else {
        const double h = std::max(0.0, s - f);
        J(l) += other * 0.5 * h * h;
      }
    }
  }
  return J / static_cast<double>(scores.cols());
}

Matrix objective_score_grads(const Matrix& scores, const std::vector<int>& y, double c, double s,
                             int num_classes) {
  if (scores.rows() != num_classes || static_cast<Index>(y.size()) != scores.cols())
    throw Error(ErrorKind::dimension_mismatch, "scores must be K × |B|");
  const double other = num_classes > 1 ? c / (num_classes - 1) : 0.0;
  const double inv_b = 1.0 / static_cast<double>(scores.cols());
  Matrix G(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.cols(); ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    for (int l = 0; l < num_classes; ++l) {
      const double f = scores(l, i);
      G(l, i) = inv_b * (yi == l ? f : -other * std::max(0.0, s - f));
    }
  }
  return G;
}

DGradients backward(const DModel& model, const ForwardPass& pass, const std::vector<int>& y,
                    const Vector& tau, double c, double s) {
  const int K = model.num_classes();
  if (tau.size() != K) throw Error(ErrorKind::dimension_mismatch, "one τ entry per class");
  const Matrix dJ = objective_score_grads(pass.scores, y, c, s, K);
  const Matrix dL = tau.asDiagonal() * dJ;
  const Index d_z = model.encoder.output_dim();
  const auto V = model.W.bottomRows(d_z);

  DGradients g;
  g.J = batch_objectives(pass.scores, y, c, s, K);
  g.W = pass.features * dL.transpose();
  g.encoder = encoder_backward(model.encoder, pass.cache, V * dL);
  g.z_grads.reserve(static_cast<std::size_t>(K));
  for (int l = 0; l < K; ++l) g.z_grads.push_back(V.col(l) * dJ.row(l));
  return g;
}

Vector tau_step(const std::vector<Matrix>& z_grads, const Vector& J, double gamma,
                const Vector& tau_prev, double beta, const SimplexQPOptions& opts) {
  const Index K = J.size();
  if (static_cast<Index>(z_grads.size()) != K || tau_prev.size() != K)
    throw Error(ErrorKind::invalid_argument, "τ-step needs one gradient and weight per class");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw Error(ErrorKind::invalid_argument, "β must lie in [0, 1]");
  if ((tau_prev.array() < 0.0).any() || std::abs(tau_prev.sum() - 1.0) > 1e-9)
    throw Error(ErrorKind::invalid_argument, "previous τ is not on the simplex");
  SimplexQP prob;
  prob.directions.resize(K > 0 ? z_grads.front().size() : 0, K);
  for (Index l = 0; l < K; ++l) {
    const Matrix& g = z_grads[static_cast<std::size_t>(l)];
    if (g.size() != prob.directions.rows())
      throw Error(ErrorKind::invalid_argument, "per-class gradients differ in size");
    prob.directions.col(l) = g.reshaped();
  }
  prob.values = J;
  prob.tradeoff = gamma;
  const Vector star = solve_simplex_qp(prob, opts).tau;
  Vector tau = beta * star + (1.0 - beta) * tau_prev;
  return tau / tau.sum();
}

double gamma_schedule(double p, double T, double gamma_max, double eps) {
  if (!(T > 0.0) || p < 0.0 || p > T)
    throw Error(ErrorKind::invalid_argument, "γ schedule needs 0 ≤ p ≤ T, T > 0");
  return 0.5 * gamma_max * (1.0 + std::cos(p * kPi / T)) + eps;
}

double cosine_lr(double t, double T, double lr0, double lr_min) {
  if (!(T > 0.0)) return lr0;
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(kPi * std::clamp(t / T, 0.0, 1.0)));
}

DFit fit_dnpsvc(const Dataset& data, const DConfig& config, std::uint64_t seed) {
  config.validate();
  data.validate();
  const int K = data.num_classes();
  if (K < 2) throw Error(ErrorKind::invalid_dataset, "training needs at least two classes");
  const Index n = data.num_samples();
  const Index d_in = data.num_features();

  DFit fit;
  DModel& model = fit.model;
  model.prior = config.prior == PriorMap::Kind::identity
                    ? PriorMap::identity(d_in)
                    : PriorMap::random_projection(
                          d_in, config.prior_dim > 0 ? config.prior_dim : d_in, seed);
  model.encoder = MlpEncoder::init(d_in, config.hidden, config.latent, seed);
  {
    auto engine = make_engine(seed, Stream::classifier_init);
    const Index rows = model.prior.output_dim() + config.latent;
    model.W = 0.01 * standard_normal(rows, K, engine);
  }
  model.tau = Vector::Constant(K, 1.0 / K);

  MomentumSgd opt_w{{}, config.momentum, config.weight_decay};
  MomentumSgd opt_theta{{}, config.momentum, config.weight_decay};
  Vector w = flatten_matrix(model.W);
  Vector theta = model.encoder.flatten();

  const Index batch = std::min(config.batch, n);
  const Index per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(per_epoch) * config.epochs;
  const double gamma_T = std::max(1, config.epochs - 1);
  std::vector<Index> order(static_cast<std::size_t>(n));
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    auto engine = make_engine(seed, Stream::batch_shuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), engine);
    const double gamma =
        gamma_schedule(std::min<double>(epoch, gamma_T), gamma_T, config.gamma_max,
                       config.gamma_eps);

    for (Index b = 0; b < per_epoch; ++b, ++step) {
      const Index start = b * batch;
      const Index len = std::min(batch, n - start);
      Matrix Xb(d_in, len);
      std::vector<int> yb(static_cast<std::size_t>(len));
      for (Index j = 0; j < len; ++j) {
        const Index src = order[static_cast<std::size_t>(start + j)];
        Xb.col(j) = data.X.col(src);
        yb[static_cast<std::size_t>(j)] = data.y[static_cast<std::size_t>(src)];
      }
      const double lr = cosine_lr(static_cast<double>(step), total_steps, config.lr, config.lr_min);

      // θ-step on W̃ and θ_sh with τ fixed.
      {
        const ForwardPass pass = forward(model, Xb);
        const DGradients g = backward(model, pass, yb, model.tau, config.c, config.margin);
        opt_w.step(w, flatten_matrix(g.W), lr);
        opt_theta.step(theta, g.encoder.flatten(), lr);
        model.W.reshaped() = w;
        model.encoder.unflatten(theta);
      }

      // τ-step with W̃ frozen, then a θ_sh step under the new weights.
      const ForwardPass pass = forward(model, Xb);
      const DGradients probe = backward(model, pass, yb, model.tau, config.c, config.margin);
      if (!probe.J.allFinite() || !theta.allFinite() || !w.allFinite())
        throw DivergenceError("training diverged (non-finite loss) in epoch " +
                                  std::to_string(epoch + 1),
                              epoch + 1);
      model.tau = tau_step(probe.z_grads, probe.J, gamma, model.tau, config.beta, config.simplex);
      const DGradients g = backward(model, pass, yb, model.tau, config.c, config.margin);
      opt_theta.step(theta, g.encoder.flatten(), lr);
      model.encoder.unflatten(theta);

      DTraceRow row;
      row.epoch = epoch + 1;
      row.batch = static_cast<int>(b + 1);
      row.J = probe.J;
      row.tau = model.tau;
      row.lr = lr;
      row.gamma = gamma;
      fit.trace.push_back(std::move(row));
    }
  }
  model.validate();
  return fit;
}

Matrix decision_dnpsvc(const DModel& model, const Matrix& X) {
  if (X.rows() != model.input_dim())
    throw Error(ErrorKind::dimension_mismatch,
                "input has " + std::to_string(X.rows()) + " features, model expects " +
                    std::to_string(model.input_dim()));
  if (X.cols() == 0) return Matrix(model.num_classes(), 0);
  return forward(model, X).scores;
}

std::vector<int> predict_dnpsvc(const DModel& model, const Matrix& X) {
  model.validate();
  const Matrix f = decision_dnpsvc(model, X);
  Vector denom(model.num_classes());
  for (int l = 0; l < model.num_classes(); ++l) {
    denom(l) = model.W.col(l).norm();
    if (!(denom(l) > 0.0))
      throw Error(ErrorKind::degenerate_data,
                  "class " + std::to_string(l) + " has a zero-norm hyperplane");
  }
  std::vector<int> out(static_cast<std::size_t>(X.cols()));
  for (Index j = 0; j < X.cols(); ++j) {
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int l = 0; l < model.num_classes(); ++l) {
      const double score = std::abs(f(l, j)) / denom(l);
      if (score < best_score) {
        best_score = score;
        best = l;
      }
    }
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

}  // namespace npsvc
