#pragma once

// Independent reference computations. Nothing here calls the library's
// solvers; they are slow, direct, and only meant for small instances.

#include "npsvc/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using npsvc::Index;
using npsvc::Matrix;
using npsvc::Vector;

inline double box_objective(const Matrix& Q, const Vector& b, const Vector& x) {
  return 0.5 * x.dot(Q * x) + b.dot(x);
}

/// Minimum of ½xᵀQx + bᵀx over [0, c]^q by trying all 3^q faces. On each
/// face the free block solves its stationarity system (least squares when
/// singular, rejected if the system is inconsistent).
inline Vector brute_force_box_qp(const Matrix& Q, const Vector& b, double c) {
  const Index q = b.size();
  Index patterns = 1;
  for (Index i = 0; i < q; ++i) patterns *= 3;
  Vector best;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<int> state(static_cast<std::size_t>(q));
  for (Index code = 0; code < patterns; ++code) {
    Index rest = code;
    std::vector<Index> free;
    Vector x = Vector::Zero(q);
    for (Index i = 0; i < q; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3);
      rest /= 3;
      if (state[static_cast<std::size_t>(i)] == 1) x(i) = c;
      if (state[static_cast<std::size_t>(i)] == 2) free.push_back(i);
    }
    if (!free.empty()) {
      const Index f = static_cast<Index>(free.size());
      Matrix A(f, f);
      Vector rhs(f);
      for (Index a = 0; a < f; ++a) {
        rhs(a) = -b(free[a]);
        for (Index j = 0; j < q; ++j)
          if (state[static_cast<std::size_t>(j)] == 1) rhs(a) -= Q(free[a], j) * c;
        for (Index bb = 0; bb < f; ++bb) A(a, bb) = Q(free[a], free[bb]);
      }
      const Vector sol = A.completeOrthogonalDecomposition().solve(rhs);
      if ((A * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
      bool feasible = true;
      for (Index a = 0; a < f; ++a) {
        if (sol(a) < -1e-12 || sol(a) > c + 1e-12) feasible = false;
        x(free[a]) = std::clamp(sol(a), 0.0, c);
      }
      if (!feasible) continue;
    }
    const double val = box_objective(Q, b, x);
    if (val < best_val) {
      best_val = val;
      best = x;
    }
  }
  return best;
}

/// Minimum of ½τᵀGτ − γ τᵀJ over a regular simplex grid with the given step
/// (K ≤ 3), where G is the Gram of the directions.
inline double simplex_grid_min(const Matrix& G, const Vector& J, double gamma, double step) {
  const Index K = J.size();
  const long n = std::lround(1.0 / step);
  auto value = [&](const Vector& t) { return 0.5 * t.dot(G * t) - gamma * t.dot(J); };
  double best = std::numeric_limits<double>::infinity();
  Vector t(K);
  if (K == 1) return value(Vector::Ones(1));
  if (K == 2) {
    for (long i = 0; i <= n; ++i) {
      t << static_cast<double>(i) / n, static_cast<double>(n - i) / n;
      best = std::min(best, value(t));
    }
    return best;
  }
  for (long i = 0; i <= n; ++i)
    for (long j = 0; i + j <= n; ++j) {
      t << static_cast<double>(i) / n, static_cast<double>(j) / n,
          static_cast<double>(n - i - j) / n;
      best = std::min(best, value(t));
    }
  return best;
}

/// Primal U-subproblem for class l in empirical coordinates:
///   ½‖Ψ_l u‖² + c Σ_{i∉l}[1 − uᵀψ_i]₊ + (r1/2)‖u − a‖²
struct UPrimal {
  Matrix psi_in;   ///< rows of class l
  Matrix psi_out;  ///< remaining rows
  Vector anchor;   ///< P v
  double c = 1.0;
  double r1 = 1.0;

  double value(const Vector& u) const {
    double hinge = 0.0;
    for (Index i = 0; i < psi_out.rows(); ++i)
      hinge += std::max(0.0, 1.0 - psi_out.row(i).dot(u));
    return 0.5 * (psi_in * u).squaredNorm() + c * hinge + 0.5 * r1 * (u - anchor).squaredNorm();
  }

  Vector subgradient(const Vector& u) const {
    Vector g = psi_in.transpose() * (psi_in * u) + r1 * (u - anchor);
    for (Index i = 0; i < psi_out.rows(); ++i)
      if (1.0 - psi_out.row(i).dot(u) > 0.0) g -= c * psi_out.row(i).transpose();
    return g;
  }
};

/// Subgradient descent for the strongly convex primal with steps
/// min(1/L, 2/(m(t+1))) and the matching weighted average; returns the best
/// value seen.
inline double subgradient_minimum(const UPrimal& prob, int iterations) {
  const double m = prob.r1;
  const Matrix H = prob.psi_in.transpose() * prob.psi_in;
  const double L = (H.size() ? Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues().maxCoeff()
                             : 0.0) + prob.r1;
  Vector u = prob.anchor;
  Vector avg = u;
  double weight = 0.0;
  double best = prob.value(u);
  for (int t = 1; t <= iterations; ++t) {
    u -= std::min(1.0 / L, 2.0 / (m * (t + 1))) * prob.subgradient(u);
    const double w = static_cast<double>(t);
    weight += w;
    avg += (w / weight) * (u - avg);
    if (t % 64 == 0 || t == iterations) best = std::min({best, prob.value(u), prob.value(avg)});
  }
  return best;
}

/// Central differences of f at x.
inline Vector central_differences(const std::function<double(const Vector&)>& f, Vector x,
                                  double h) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    const double fp = f(x);
    x(i) = keep - h;
    const double fm = f(x);
    x(i) = keep;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& eng) {
  std::normal_distribution<double> n;
  Matrix M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = n(eng);
  return M;
}

/// Random PSD matrix of size q with rank ≤ r.
inline Matrix random_psd(Index q, Index r, std::mt19937_64& eng) {
  const Matrix A = random_matrix(q, r, eng);
  Matrix Q = A * A.transpose();
  return 0.5 * (Q + Q.transpose());
}

inline double max_abs(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace oracle
