#include "npsvc/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace npsvc {

namespace {

KernelSpec resolve_kernel(const RunConfig& config, const Matrix& X) {
  if (config.kernel == KernelKind::linear) return KernelSpec::linear();
  return KernelSpec::gaussian(config.bandwidth ? *config.bandwidth : gaussian_bandwidth(X));
}

std::map<std::string, double> kernel_hyperparameters(const RunConfig& config,
                                                     const KernelSpec& spec) {
  std::map<std::string, double> h;
  const HyperParams& hp = config.hp;
  if (config.kind == ModelKind::twsvm) {
    h = {{"c", hp.c}, {"r", hp.r1}};
  } else {
    h = {{"c", hp.c},
         {"r1", hp.r1},
         {"r2", hp.r2},
         {"mu", hp.mu},
         {"gamma", hp.gamma},
         {"eta", hp.eta},
         {"dim", static_cast<double>(hp.dim)},
         {"max_outer", hp.max_outer},
         {"tol_outer", hp.tol_outer},
         {"neighbors", static_cast<double>(hp.neighbors)}};
  }
  if (spec.kind == KernelKind::gaussian) h["bandwidth"] = spec.bandwidth;
  return h;
}

std::map<std::string, double> deep_hyperparameters(const DConfig& d) {
  return {{"hidden", static_cast<double>(d.hidden)},
          {"latent", static_cast<double>(d.latent)},
          {"prior_dim", static_cast<double>(d.prior_dim)},
          {"epochs", d.epochs},
          {"batch", static_cast<double>(d.batch)},
          {"lr", d.lr},
          {"lr_min", d.lr_min},
          {"momentum", d.momentum},
          {"weight_decay", d.weight_decay},
          {"beta", d.beta},
          {"gamma_max", d.gamma_max},
          {"gamma_eps", d.gamma_eps},
          {"c", d.c},
          {"margin", d.margin}};
}

// Training with an optional prebuilt factor for the (already standardized)
// training samples; grid points over one split share it.
TrainResult train_prepared(const Dataset& train, const RunConfig& config,
                           const std::optional<AffineTransform>& transform,
                           const KernelSpec* spec, const GramFactor* factor) {
  TrainResult result;
  ModelFile& m = result.model;
  m.kind = config.kind;
  m.labels = train.labels;
  m.seed = config.seed;
  m.standardizer = transform;
  if (config.kind == ModelKind::dnpsvc) {
    DFit fit = fit_dnpsvc(train, config.deep, config.seed);
    m.deep = std::move(fit.model);
    m.hyperparameters = deep_hyperparameters(config.deep);
    result.dnpsvc_trace = std::move(fit.trace);
    return result;
  }
  const KernelSpec own_spec = spec ? *spec : resolve_kernel(config, train.X);
  const GramFactor own_factor = factor ? GramFactor{} : gram_factor(train.X, own_spec);
  const GramFactor& f = factor ? *factor : own_factor;
  m.hyperparameters = kernel_hyperparameters(config, own_spec);
  if (config.kind == ModelKind::twsvm) {
    m.kernel = fit_twsvm(train, f, own_spec, config.twsvm()).predictor;
  } else {
    KFit fit = fit_knpsvc(train, f, own_spec, config.hp, config.seed);
    m.kernel = std::move(fit.predictor);
    result.converged = fit.state.converged;
    result.knpsvc_trace = std::move(fit.state.trace);
  }
  return result;
}

double accuracy_of(const ModelFile& model, const Dataset& test) {
  return evaluate(test.y, model.predict(test.X), test.num_classes()).accuracy;
}

}  // namespace

TrainResult train_model(const Dataset& train, const RunConfig& config) {
  if (!config.standardize) return train_prepared(train, config, std::nullopt, nullptr, nullptr);
  const AffineTransform t = fit_standardizer(train.X);
  Dataset scaled = train;
  scaled.X = t.apply(train.X);
  return train_prepared(scaled, config, t, nullptr, nullptr);
}

Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted,
                 int num_classes) {
  if (truth.size() != predicted.size())
    throw Error(ErrorKind::dimension_mismatch, "prediction count does not match labels");
  Metrics m;
  m.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  Index correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 ||
        predicted[i] >= num_classes)
      throw Error(ErrorKind::invalid_argument, "class index out of range");
    ++m.confusion(truth[i], predicted[i]);
    correct += truth[i] == predicted[i];
  }
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  for (int k = 0; k < num_classes; ++k) {
    const Index n = m.confusion.row(k).sum();
    m.support.push_back(n);
    m.class_accuracy.push_back(n ? static_cast<double>(m.confusion(k, k)) / static_cast<double>(n)
                                 : std::numeric_limits<double>::quiet_NaN());
  }
  return m;
}

std::size_t Grid::size() const {
  auto n = [](std::size_t s) { return std::max<std::size_t>(s, 1); };
  return n(c.size()) * n(r1.size()) * n(r2.size()) * n(mu.size()) * n(gamma.size()) *
         n(dim.size());
}

std::vector<RunConfig> Grid::expand(const RunConfig& base) const {
  auto axis = [](const std::vector<double>& v, double fallback) {
    return v.empty() ? std::vector<double>{fallback} : v;
  };
  const auto dims = dim.empty() ? std::vector<Index>{base.hp.dim} : dim;
  std::vector<RunConfig> out;
  out.reserve(size());
  for (double vc : axis(c, base.hp.c))
    for (double vr1 : axis(r1, base.hp.r1))
      for (double vr2 : axis(r2, base.hp.r2))
        for (double vmu : axis(mu, base.hp.mu))
          for (double vg : axis(gamma, base.hp.gamma))
            for (Index vd : dims) {
              RunConfig rc = base;
              rc.hp.c = vc;
              rc.hp.r1 = vr1;
              rc.hp.r2 = vr2;
              rc.hp.mu = vmu;
              rc.hp.gamma = vg;
              rc.hp.dim = vd;
              if (base.kind == ModelKind::dnpsvc) rc.deep.c = vc;
              out.push_back(rc);
            }
  return out;
}

ProtocolResult run_protocol(const Dataset& data, const RunConfig& base, const Grid& grid,
                            const ProtocolOptions& opts,
                            const std::function<void(int, const RepeatResult&)>& progress) {
  if (opts.repeats < 1) throw Error(ErrorKind::invalid_argument, "repeats must be ≥ 1");
  const std::vector<RunConfig> points = grid.expand(base);
  ProtocolResult result;

  for (int r = 0; r < opts.repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto split_seed = derive_seed(base.seed, Stream::split, static_cast<std::uint64_t>(r));
    auto [train, test] = split(data, opts.fraction, split_seed, Stream::split);

    std::optional<AffineTransform> transform;
    if (base.standardize) {
      transform = fit_standardizer(train.X);
      train.X = transform->apply(train.X);
    }

    RepeatResult rep;
    rep.selected = points.front();
    if (points.size() > 1) {
      const auto inner_seed =
          derive_seed(base.seed, Stream::inner_split, static_cast<std::uint64_t>(r));
      const auto [fit_part, val_part] =
          split(train, opts.inner_fraction, inner_seed, Stream::inner_split);
      std::optional<KernelSpec> spec;
      std::optional<GramFactor> factor;
      if (base.kind != ModelKind::dnpsvc) {
        spec = resolve_kernel(base, fit_part.X);
        factor = gram_factor(fit_part.X, *spec);
      }
      double best = -1.0;
      for (const RunConfig& point : points) {
        const TrainResult tr = train_prepared(fit_part, point, std::nullopt,
                                              spec ? &*spec : nullptr,
                                              factor ? &*factor : nullptr);
        const double acc = accuracy_of(tr.model, val_part);
        if (acc > best) {
          best = acc;
          rep.selected = point;
        }
      }
    }

    const TrainResult final_fit = train_prepared(train, rep.selected, transform, nullptr, nullptr);
    // The model applies the stored transform itself, so score on raw test data.
    rep.accuracy = accuracy_of(final_fit.model, test);
    rep.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) progress(r, rep);
    result.repeats.push_back(rep);
  }

  double sum = 0.0;
  for (const auto& rep : result.repeats) sum += rep.accuracy;
  result.mean = sum / static_cast<double>(result.repeats.size());
  double ss = 0.0;
  for (const auto& rep : result.repeats) ss += (rep.accuracy - result.mean) * (rep.accuracy - result.mean);
  result.stddev = result.repeats.size() > 1
                      ? std::sqrt(ss / static_cast<double>(result.repeats.size() - 1))
                      : 0.0;
  return result;
}

std::vector<SweepRow> run_sweep(const Dataset& data, const RunConfig& base, const Grid& grid,
                                const ProtocolOptions& opts, std::size_t cap) {
  if (grid.size() > cap)
    throw Error(ErrorKind::invalid_argument,
                "grid has " + std::to_string(grid.size()) + " points, above the cap of " +
                    std::to_string(cap));
  std::vector<SweepRow> rows;
  for (const RunConfig& point : grid.expand(base))
    rows.push_back({point, run_protocol(data, point, Grid{}, opts)});
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.result.mean > b.result.mean;
  });
  return rows;
}

}  // namespace npsvc
