#pragma once

#include "npsvc/common.hpp"
#include "npsvc/dataset.hpp"
#include "npsvc/solvers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace npsvc {

/// Fixed prior features φ(x): the input itself, or a seeded Gaussian
/// projection R (rows d_out, entries N(0, 1/d_in)).
struct PriorMap {
  enum class Kind { identity, projection };

  Kind kind = Kind::identity;
  Index input_dim = 0;
  Matrix projection;  ///< d_out × d_in; empty for identity

  Index output_dim() const { return kind == Kind::identity ? input_dim : projection.rows(); }
  Matrix apply(const Matrix& X) const;

  static PriorMap identity(Index d_in);
  static PriorMap random_projection(Index d_in, Index d_out, std::uint64_t seed);
};

const char* to_string(PriorMap::Kind kind);
PriorMap::Kind prior_kind_from_string(const std::string& name);

/// d_in → h → h → d_z, tanh on the hidden layers, linear output.
struct MlpEncoder {
  Matrix W1, W2, W3;
  Vector b1, b2, b3;

  Index input_dim() const { return W1.cols(); }
  Index hidden_dim() const { return W1.rows(); }
  Index output_dim() const { return W3.rows(); }
  Index num_parameters() const;

  /// Parameter order: W1, b1, W2, b2, W3, b3 (matrices column-major).
  Vector flatten() const;
  void unflatten(const Vector& theta);
  /// Same shapes, all zero.
  MlpEncoder zeros_like() const;
  void validate() const;

  /// Glorot-uniform weights, zero biases.
  static MlpEncoder init(Index d_in, Index hidden, Index d_z, std::uint64_t seed);
};

struct EncoderCache {
  Matrix X, H1, H2, Z;
};

/// Z = encoder(X), one column per sample.
Matrix encode(const MlpEncoder& enc, const Matrix& X, EncoderCache* cache = nullptr);

/// Gradient w.r.t. every encoder parameter given ∂L/∂Z.
MlpEncoder encoder_backward(const MlpEncoder& enc, const EncoderCache& cache, const Matrix& dZ);

struct DConfig {
  Index hidden = 32;
  Index latent = 8;  ///< d_z
  PriorMap::Kind prior = PriorMap::Kind::identity;
  Index prior_dim = 0;  ///< projection output size; 0 → input size
  int epochs = 200;
  Index batch = 64;
  double lr = 0.05;
  double lr_min = 1e-5;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double beta = 0.85;
  double gamma_max = 1.0;
  double gamma_eps = 1e-3;
  double c = 1.0;
  double margin = 1.0;
  SimplexQPOptions simplex;

  void validate() const;
};

/// Stacked weights W̃ = [w_l; v_l] over [φ(x); z(x)], one column per class.
struct DModel {
  PriorMap prior;
  MlpEncoder encoder;
  Matrix W;
  Vector tau;

  int num_classes() const { return static_cast<int>(W.cols()); }
  Index input_dim() const { return prior.input_dim; }
  void validate() const;
};

struct ForwardPass {
  Matrix features;  ///< [φ(X); Z], (d_φ + d_z) × B
  Matrix scores;    ///< K × B
  EncoderCache cache;
};

ForwardPass forward(const DModel& model, const Matrix& X);

/// J_l = (1/|B|)[Σ_{y=l} ½f² + c/(K−1) Σ_{y≠l} ½[s − f]₊²]
Vector batch_objectives(const Matrix& scores, const std::vector<int>& y, double c, double s,
                        int num_classes);

/// ∂J_l/∂f_il, K × B. Row l holds the derivatives of J_l alone.
Matrix objective_score_grads(const Matrix& scores, const std::vector<int>& y, double c, double s,
                             int num_classes);

struct DGradients {
  Vector J;
  Matrix W;             ///< ∂(Σ τ_l J_l)/∂W̃
  MlpEncoder encoder;   ///< ∂(Σ τ_l J_l)/∂θ_sh
  std::vector<Matrix> z_grads;  ///< ∂J_l/∂Z per class, d_z × B
};

DGradients backward(const DModel& model, const ForwardPass& pass, const std::vector<int>& y,
                    const Vector& tau, double c, double s);

/// τ = β τ* + (1 − β) τ_prev with τ* from the simplex QP on the flattened
/// per-class encoder-output gradients.
Vector tau_step(const std::vector<Matrix>& z_grads, const Vector& J, double gamma,
                const Vector& tau_prev, double beta, const SimplexQPOptions& opts = {});

/// (γ_max/2)(1 + cos(pπ/T)) + ε
double gamma_schedule(double p, double T, double gamma_max, double eps);

/// lr_min + (lr₀ − lr_min)(1 + cos(πt/T))/2
double cosine_lr(double t, double T, double lr0, double lr_min);

struct DTraceRow {
  int epoch = 0;
  int batch = 0;
  Vector J;
  Vector tau;
  double lr = 0.0;
  double gamma = 0.0;
};

struct DFit {
  DModel model;
  std::vector<DTraceRow> trace;
};

DFit fit_dnpsvc(const Dataset& data, const DConfig& config, std::uint64_t seed);

/// K × n' raw scores.
Matrix decision_dnpsvc(const DModel& model, const Matrix& X);
std::vector<int> predict_dnpsvc(const DModel& model, const Matrix& X);

}  // namespace npsvc
