#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace npsvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

enum class ErrorKind {
  invalid_argument,
  degenerate_data,
  not_positive_definite,
  non_converged,
  rank_deficient,
  invalid_dataset,
  parse,
  dimension_mismatch,
  version_mismatch,
  corrupt_payload,
  divergence,
  io,
};

const char* to_string(ErrorKind kind);

/// Base of every error thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// An iterative solver stopped at its iteration cap. `residual` is the
/// stopping measure at exit (KKT residual, stationarity gap, or objective).
class NonConvergedError : public Error {
 public:
  NonConvergedError(const std::string& what, double residual)
      : Error(ErrorKind::non_converged, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(ErrorKind::divergence, what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Random streams. Every consumer derives its own engine from the root seed
// and a fixed stream id, so adding a consumer never shifts another's draws.
enum class Stream : std::uint64_t {
  projection_init = 1,
  split = 2,
  inner_split = 3,
  encoder_init = 4,
  batch_shuffle = 5,
  prior_projection = 6,
  classifier_init = 7,
  synthetic = 8,
};

/// SplitMix64 applied to (root, stream, index).
std::uint64_t derive_seed(std::uint64_t root, Stream stream,
                          std::uint64_t index = 0);

std::mt19937_64 make_engine(std::uint64_t root, Stream stream,
                            std::uint64_t index = 0);

/// Standard-normal matrix drawn column-major from `engine`.
Matrix standard_normal(Index rows, Index cols, std::mt19937_64& engine);

/// max_ij |PᵀP − I|_ij
double orthonormality_residual(const Matrix& P);

}  // namespace npsvc
