#pragma once

#include "npsvc/dataset.hpp"
#include "npsvc/deep.hpp"
#include "npsvc/knpsvc.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace npsvc {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { knpsvc, twsvm, dnpsvc };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Everything needed to predict in the original label space. Kernel models
/// carry a KernelPredictor, the deep model a DModel.
struct ModelFile {
  ModelKind kind = ModelKind::knpsvc;
  std::vector<double> labels;
  std::uint64_t seed = 0;
  std::optional<AffineTransform> standardizer;
  std::map<std::string, double> hyperparameters;
  KernelPredictor kernel;
  DModel deep;

  Index num_features() const;
  int num_classes() const { return static_cast<int>(labels.size()); }
  void validate() const;

  /// Class indices into `labels`.
  std::vector<int> predict(const Matrix& X) const;
  /// K × n' raw scores.
  Matrix decision(const Matrix& X) const;
};

/// JSON text; matrices are stored row by row as base64 of little-endian
/// IEEE doubles, so a round trip is bit exact.
std::string save_model(const ModelFile& model);
/// Throws version_mismatch for another format version or unknown fields,
/// corrupt_payload for anything malformed.
ModelFile load_model(const std::string& text);

void save_model_file(const ModelFile& model, const std::string& path);
ModelFile load_model_file(const std::string& path);

}  // namespace npsvc
