#pragma once

#include "npsvc/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace npsvc {

/// Samples as columns of X (m × n); y holds 0-based class indices into
/// `labels`, which keeps the original label values in ascending order.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<double> labels;
  std::vector<std::string> feature_names;

  Index num_samples() const { return X.cols(); }
  Index num_features() const { return X.rows(); }
  int num_classes() const { return static_cast<int>(labels.size()); }

  /// Throws invalid_dataset unless every class has at least one sample.
  void validate() const;
  std::vector<Index> class_counts() const;
  Dataset subset(const std::vector<Index>& columns) const;
  /// Zero-pads (or rejects shrinking) the feature dimension.
  Dataset with_features(Index m) const;
  double original_label(int cls) const { return labels.at(static_cast<std::size_t>(cls)); }
};

/// Builds a dataset from raw label values, remapping to contiguous classes.
Dataset make_dataset(Matrix X, const std::vector<double>& raw_labels);

/// `<label> <index>:<value> ...`, 1-based strictly ascending indices.
/// The feature dimension is max(max index, min_features).
Dataset parse_libsvm(std::istream& in, Index min_features = 0);
void write_libsvm(std::ostream& out, const Dataset& data);

/// Header `label,f1,...,fm`; one sample per row.
Dataset parse_csv(std::istream& in);
void write_csv(std::ostream& out, const Dataset& data);

/// Picks the format from the extension (.csv, otherwise LIBSVM).
Dataset load_dataset(const std::string& path, Index min_features = 0);

/// Stratified seeded split; every class keeps at least one sample per side.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed, Stream stream = Stream::split);

struct AffineTransform {
  Vector mean;
  /// 1 for zero-variance features (centered only).
  Vector scale;

  Matrix apply(const Matrix& X) const;
};

struct Standardized {
  Dataset train;
  Dataset test;
  AffineTransform transform;
};

AffineTransform fit_standardizer(const Matrix& X);
Standardized standardize(const Dataset& train, const Dataset& test);

/// Shortest round-trip text of a label value ("3", "-1", "0.5").
std::string format_label(double value);

}  // namespace npsvc
