#include "npsvc/synthetic.hpp"

#include <cmath>

namespace npsvc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Dataset make_blobs(Index n, int num_classes, Index dim, double radius, std::uint64_t seed) {
  if (num_classes < 1 || n < num_classes || dim < 2)
    throw Error(ErrorKind::invalid_argument, "blobs need n ≥ K ≥ 1 and dim ≥ 2");
  auto engine = make_engine(seed, Stream::synthetic);
  Matrix X = standard_normal(dim, n, engine);
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const int k = static_cast<int>(j % num_classes);
    const double angle = 2.0 * kPi * k / num_classes;
    X(0, j) += radius * std::cos(angle);
    X(1, j) += radius * std::sin(angle);
    labels[static_cast<std::size_t>(j)] = k + 1;
  }
  return make_dataset(std::move(X), labels);
}

Dataset make_two_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "two moons need n ≥ 2");
  auto engine = make_engine(seed, Stream::synthetic);
  std::uniform_real_distribution<double> unit(0.0, kPi);
  std::normal_distribution<double> jitter(0.0, noise);
  Matrix X(2, n);
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double t = unit(engine);
    if (j % 2 == 0) {
      X(0, j) = std::cos(t);
      X(1, j) = std::sin(t);
      labels[static_cast<std::size_t>(j)] = 1;
    } else {
      X(0, j) = 1.0 - std::cos(t);
      X(1, j) = 0.5 - std::sin(t);
      labels[static_cast<std::size_t>(j)] = 2;
    }
    X(0, j) += jitter(engine);
    X(1, j) += jitter(engine);
  }
  return make_dataset(std::move(X), labels);
}

}  // namespace npsvc
