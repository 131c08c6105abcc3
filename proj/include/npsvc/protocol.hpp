#pragma once

#include "npsvc/dataset.hpp"
#include "npsvc/deep.hpp"
#include "npsvc/knpsvc.hpp"
#include "npsvc/model_io.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace npsvc {

/// One fully specified training run.
struct RunConfig {
  ModelKind kind = ModelKind::knpsvc;
  KernelKind kernel = KernelKind::gaussian;
  /// Gaussian t; unset → heuristic on the training split.
  std::optional<double> bandwidth;
  HyperParams hp;  ///< TWSVM reads c and r = r1
  DConfig deep;
  bool standardize = false;
  std::uint64_t seed = 0;

  TwsvmParams twsvm() const { return {hp.c, hp.r1, hp.box}; }
};

struct TrainResult {
  ModelFile model;
  std::vector<TraceRow> knpsvc_trace;
  std::vector<DTraceRow> dnpsvc_trace;
  bool converged = true;
};

TrainResult train_model(const Dataset& train, const RunConfig& config);

struct Metrics {
  double accuracy = 0.0;
  std::vector<Index> support;         ///< true samples per class
  std::vector<double> class_accuracy;  ///< NaN for classes absent from the data
  Eigen::MatrixXi confusion;           ///< rows: true class, cols: predicted
};

Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted,
                 int num_classes);

/// Cartesian hyperparameter grid. Empty axes keep the base value.
struct Grid {
  std::vector<double> c, r1, r2, mu, gamma;
  std::vector<Index> dim;

  std::size_t size() const;
  std::vector<RunConfig> expand(const RunConfig& base) const;
};

struct ProtocolOptions {
  int repeats = 10;
  double fraction = 0.6;
  /// Share of the training split used for fitting during grid selection.
  double inner_fraction = 0.75;
};

struct RepeatResult {
  double accuracy = 0.0;
  RunConfig selected;
  double seconds = 0.0;
};

struct ProtocolResult {
  std::vector<RepeatResult> repeats;
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation
};

/// Per repeat: seeded stratified split; if the grid has several points,
/// select on an inner validation split of the training part; refit on the
/// full training part; score on the test part. `progress` sees each repeat.
ProtocolResult run_protocol(const Dataset& data, const RunConfig& base, const Grid& grid,
                            const ProtocolOptions& opts,
                            const std::function<void(int, const RepeatResult&)>& progress = {});

struct SweepRow {
  RunConfig config;
  ProtocolResult result;
};

/// Every grid point through the protocol with shared split seeds, sorted by
/// descending mean accuracy (stable). Refuses grids above `cap` points.
std::vector<SweepRow> run_sweep(const Dataset& data, const RunConfig& base, const Grid& grid,
                                const ProtocolOptions& opts, std::size_t cap = 64);

}  // namespace npsvc
