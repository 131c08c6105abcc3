#include "npsvc/common.hpp"

namespace npsvc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::degenerate_data: return "degenerate-data";
    case ErrorKind::not_positive_definite: return "not-positive-definite";
    case ErrorKind::non_converged: return "non-converged";
    case ErrorKind::rank_deficient: return "rank-deficient";
    case ErrorKind::invalid_dataset: return "invalid-dataset";
    case ErrorKind::parse: return "parse";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::version_mismatch: return "version-mismatch";
    case ErrorKind::corrupt_payload: return "corrupt-payload";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                          std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(root) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

std::mt19937_64 make_engine(std::uint64_t root, Stream stream,
                            std::uint64_t index) {
  return std::mt19937_64(derive_seed(root, stream, index));
}

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(engine);
  return out;
}

double orthonormality_residual(const Matrix& P) {
  const Matrix gram = P.transpose() * P;
  return (gram - Matrix::Identity(gram.rows(), gram.cols()))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace npsvc
