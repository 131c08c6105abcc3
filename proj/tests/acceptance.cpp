// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// blocking criterion fails. Set NPSVC_RUN_STRETCH=1 to run the Pendigits case.

#include "npsvc/dataset.hpp"
#include "npsvc/deep.hpp"
#include "npsvc/knpsvc.hpp"
#include "npsvc/protocol.hpp"
#include "npsvc/synthetic.hpp"
#include "npsvc/trace.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

using namespace npsvc;

namespace {

struct Report {
  int failures = 0;

  void line(int id, bool pass, const std::string& detail, bool blocking = true) {
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail
              << (blocking ? "" : "  (non-blocking)") << std::endl;
    if (!pass && blocking) ++failures;
  }
  void skip(int id, const std::string& detail) {
    std::cout << "criterion " << id << ": SKIPPED (non-blocking)  " << detail << std::endl;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Matrix orthonormal(Index p, Index d, std::mt19937_64& eng) {
  return Eigen::HouseholderQR<Matrix>(oracle::random_matrix(p, d, eng)).householderQ() *
         Matrix::Identity(p, d);
}

std::vector<int> random_labels(Index n, int K, std::mt19937_64& eng) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(i % K);
  std::shuffle(y.begin(), y.end(), eng);
  return y;
}

double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  Index same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

// Worst orthonormality residual over every K-NPSVC++ fit made in this run.
double worst_orth = 0.0;
int orth_fits = 0, orth_rows = 0;

void record_orth(const std::vector<TraceRow>& trace) {
  ++orth_fits;
  for (const TraceRow& row : trace) {
    worst_orth = std::max(worst_orth, row.orth_residual);
    ++orth_rows;
  }
}

struct ProtocolOutcome {
  double mean = 0.0, stddev = 0.0, slowest = 0.0;
};

ProtocolOutcome dna_protocol(ModelKind kind, const Grid& grid) {
  const Dataset dna = load_dataset(std::string(NPSVC_DATA_DIR) + "/dna.libsvm");
  RunConfig rc;
  rc.kind = kind;
  rc.hp.r2 = 0.1;
  ProtocolOptions po;
  po.repeats = 10;
  po.fraction = 0.6;
  ProtocolOutcome out;
  const ProtocolResult res = run_protocol(dna, rc, grid, po, [&](int r, const RepeatResult& rep) {
    std::cout << "  " << to_string(kind) << " split " << r + 1 << ": accuracy "
              << fmt(rep.accuracy) << " (" << fmt(rep.seconds) << " s)" << std::endl;
    out.slowest = std::max(out.slowest, rep.seconds);
  });
  out.mean = res.mean;
  out.stddev = res.stddev;
  return out;
}

void criterion_1_2(Report& rep) {
  Grid kgrid;
  kgrid.c = {1.0};
  kgrid.r1 = {0.01, 0.1};
  kgrid.mu = {0.1, 1.0};
  const ProtocolOutcome k = dna_protocol(ModelKind::knpsvc, kgrid);
  rep.line(1, k.mean >= 0.945 && k.slowest <= 300.0,
           "DNA K-NPSVC++ mean " + fmt(k.mean) + " ± " + fmt(k.stddev) + " (need ≥ 0.945), slowest split " +
               fmt(k.slowest) + " s (need ≤ 300)");

  Grid tgrid;
  tgrid.c = {0.5, 1.0};
  tgrid.r1 = {0.01, 0.1};
  const ProtocolOutcome t = dna_protocol(ModelKind::twsvm, tgrid);
  rep.line(2, t.mean >= 0.945, "DNA TWSVM mean " + fmt(t.mean) + " ± " + fmt(t.stddev) +
                                   " (need ≥ 0.945)");
}

void criterion_3(Report& rep) {
  const char* flag = std::getenv("NPSVC_RUN_STRETCH");
  if (!flag || std::string(flag) != "1") {
    rep.skip(3, "Pendigits stretch; set NPSVC_RUN_STRETCH=1 to run it");
    return;
  }
  const Dataset pen = load_dataset(std::string(NPSVC_DATA_DIR) + "/pendigits.libsvm");
  const auto [train, test] = split(pen, 0.6, derive_seed(0, Stream::split, 0), Stream::split);
  RunConfig rc;
  rc.hp.r2 = 0.1;
  const auto t0 = std::chrono::steady_clock::now();
  double acc = 0.0;
  try {
    const TrainResult tr = train_model(train, rc);
    record_orth(tr.knpsvc_trace);
    acc = accuracy(tr.model.predict(test.X), test.y);
  } catch (const std::exception& e) {
    rep.line(3, false, std::string("Pendigits fit failed: ") + e.what(), false);
    return;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.line(3, acc >= 0.985 && secs <= 1800.0,
           "Pendigits accuracy " + fmt(acc) + " (need ≥ 0.985), " + fmt(secs) + " s (need ≤ 1800)",
           false);
}

void criterion_4(Report& rep) {
  const Dataset blobs = make_blobs(300, 3, 2, 6.0, 0);
  HyperParams hp;
  hp.gamma = 0.01;
  hp.max_outer = 5;
  hp.tol_outer = 0.0;
  const KernelSpec spec = KernelSpec::gaussian(gaussian_bandwidth(blobs.X));
  const KFit fit = fit_knpsvc(blobs, hp, spec, 0);
  record_orth(fit.state.trace);
  double best = std::numeric_limits<double>::infinity();
  int at = 0;
  for (const TraceRow& row : fit.state.trace) {
    const double rel = std::abs(row.primal - row.dual) / std::abs(row.dual);
    if (rel < best) {
      best = rel;
      at = row.iter;
    }
  }
  rep.line(4, best <= 0.05,
           "blobs relative gap " + fmt(best) + " at outer iteration " + std::to_string(at) +
               " of 5 (need ≤ 0.05)");
}

void criterion_5(Report& rep) {
  // More fits on top of those made by the other criteria.
  const Dataset blobs = make_blobs(150, 3, 2, 6.0, 1);
  for (double mu : {0.0, 0.1, 1.0})
    for (double gamma : {0.0, 0.1}) {
      HyperParams hp;
      hp.mu = mu;
      hp.gamma = gamma;
      hp.max_outer = 15;
      record_orth(fit_knpsvc(blobs, hp, KernelSpec::gaussian(gaussian_bandwidth(blobs.X)), 2)
                      .state.trace);
    }
  HyperParams hp;
  hp.max_outer = 15;
  record_orth(fit_knpsvc(blobs, hp, KernelSpec::linear(), 3).state.trace);

  const Dataset dna = load_dataset(std::string(NPSVC_DATA_DIR) + "/dna.libsvm");
  const auto [train, test] = split(dna, 0.6, 11);
  RunConfig rc;
  rc.hp.r2 = 0.1;
  record_orth(train_model(train, rc).knpsvc_trace);

  rep.line(5, worst_orth <= 1e-8,
           "max ‖PᵀP − I‖ " + fmt(worst_orth) + " over " + std::to_string(orth_rows) +
               " outer iterations of " + std::to_string(orth_fits) + " fits (need ≤ 1e-8)");
}

void criterion_6(Report& rep) {
  std::mt19937_64 eng(606);
  double worst_obj = 0.0, worst_kkt = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index q = 1 + t % 8;
    const Matrix Q = oracle::random_psd(q, 1 + t % q, eng);
    const Vector b = oracle::random_matrix(q, 1, eng);
    const double c = 0.1 + 0.03 * t;
    BoxQP prob{Q, b, c};
    const BoxQPResult r = solve_box_qp(prob);
    const Vector ref = oracle::brute_force_box_qp(Q, b, c);
    worst_obj = std::max(worst_obj, std::abs(box_qp_objective(prob, r.lambda) -
                                             oracle::box_objective(Q, b, ref)));
    worst_kkt = std::max(worst_kkt, box_qp_residual(prob, r.lambda));
  }
  rep.line(6, worst_obj <= 1e-8 && worst_kkt <= 1e-6,
           "100 box QPs: objective gap " + fmt(worst_obj) + " (need ≤ 1e-8), KKT " +
               fmt(worst_kkt) + " (need ≤ 1e-6)");
}

void criterion_7(Report& rep) {
  std::mt19937_64 eng(707);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const Index K = 1 + t % 3;
    SimplexQP prob;
    prob.directions = oracle::random_matrix(1 + t % 6, K, eng);
    prob.values = oracle::random_matrix(K, 1, eng).cwiseAbs();
    prob.tradeoff = t % 4 == 0 ? 0.0 : 0.02 * t;
    const SimplexQPResult r = solve_simplex_qp(prob);
    const Matrix G = prob.directions.transpose() * prob.directions;
    const double grid = oracle::simplex_grid_min(G, prob.values, prob.tradeoff, 1e-3);
    worst = std::max(worst, simplex_qp_objective(prob, r.tau) - grid);
  }
  rep.line(7, worst <= 1e-6,
           "100 simplex QPs: max (objective − grid minimum) " + fmt(worst) + " (need ≤ 1e-6)");
}

void criterion_8(Report& rep) {
  std::mt19937_64 eng(808);
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const Index p = 3 + t % 10;
    const Index d = 1 + t % std::min<Index>(p, 4);
    const Matrix H = oracle::random_psd(p, 1 + t % p, eng);
    const Matrix E = oracle::random_matrix(p, d, eng);
    GpiOptions opts;
    opts.tol = 0.0;
    opts.max_iter = 200;
    const GpiResult r = gpi_maximize(H, E, orthonormal(p, d, eng), opts);
    for (std::size_t k = 1; k < r.objective.size(); ++k)
      worst = std::min(worst, r.objective[k] - r.objective[k - 1]);
  }
  rep.line(8, worst >= -1e-12,
           "50 GPI runs: smallest objective increment " + fmt(worst) + " (need ≥ −1e-12)");
}

void criterion_9(Report& rep) {
  std::mt19937_64 eng(909);
  double worst = -std::numeric_limits<double>::infinity();
  int stationary = 0;
  for (int t = 0; t < 100; ++t) {
    const int K = 2 + t % 3;
    const Matrix P = orthonormal(6, 3, eng);
    const Matrix S = oracle::random_psd(6, 3, eng);
    std::vector<Matrix> grads;
    for (int l = 0; l < K; ++l)
      grads.push_back(riemannian_grad_p(P, oracle::random_matrix(6, 1, eng),
                                        oracle::random_matrix(3, 1, eng), S, 0.2, 0.3));
    const TauStep s = update_tau_and_descend(P, grads, Vector::Ones(K), 0.0, 0.05);
    if (s.qp_objective <= 1e-10) {
      ++stationary;
      continue;
    }
    for (const Matrix& g : grads) worst = std::max(worst, (g.array() * s.direction.array()).sum());
  }
  rep.line(9, worst <= 1e-10,
           "100 γ = 0 steps: max ⟨∇J_l, Δ⟩ " + fmt(worst) + " (need ≤ 1e-10), " +
               std::to_string(stationary) + " Pareto-stationary");
}

void criterion_10(Report& rep) {
  std::mt19937_64 eng(1010);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Index n = 15 + 3 * t;  // ≤ 27
    const Matrix X = oracle::random_matrix(3, n, eng);
    const GramFactor f = gram_factor(X, KernelSpec::gaussian(gaussian_bandwidth(X)));
    const std::vector<int> y = random_labels(n, 3, eng);
    const double r1 = t % 2 ? 0.5 : 1.0;
    const Matrix P = orthonormal(n, 4, eng);
    const Vector v = oracle::random_matrix(4, 1, eng);
    const ClassBlock blk = precompute_class_block(f.psi, y, t % 3, r1);
    const UStep s = update_u(blk, P, v, 1.0, r1);
    oracle::UPrimal prob;
    prob.psi_in = f.psi(blk.members, Eigen::all);
    prob.psi_out = f.psi(blk.others, Eigen::all);
    prob.anchor = P * v;
    prob.c = 1.0;
    prob.r1 = r1;
    const double ref = oracle::subgradient_minimum(prob, 200000);
    worst = std::max(worst, std::abs(prob.value(s.u) - ref) / std::abs(ref));
  }
  rep.line(10, worst <= 1e-4,
           "U-step vs primal subgradient solve: relative difference " + fmt(worst) +
               " (need ≤ 1e-4)");
}

void criterion_11(Report& rep) {
  DModel m;
  m.prior = PriorMap::identity(3);
  m.encoder = MlpEncoder::init(3, 8, 4, 5);
  std::mt19937_64 eng(1111);
  m.encoder.b1 = 0.1 * oracle::random_matrix(8, 1, eng);
  m.encoder.b2 = 0.1 * oracle::random_matrix(8, 1, eng);
  m.encoder.b3 = 0.1 * oracle::random_matrix(4, 1, eng);
  m.W = 0.5 * oracle::random_matrix(7, 3, eng);
  const Matrix X = oracle::random_matrix(3, 9, eng);
  std::vector<int> y(9);
  for (int i = 0; i < 9; ++i) y[static_cast<std::size_t>(i)] = i % 3;
  const Vector tau = (Vector(3) << 0.2, 0.3, 0.5).finished();
  const double c = 1.3;

  const DGradients g = backward(m, forward(m, X), y, tau, c, 1.0);
  Vector analytic(m.W.size() + m.encoder.num_parameters());
  analytic << g.W.reshaped(), g.encoder.flatten();
  Vector params(analytic.size());
  params << m.W.reshaped(), m.encoder.flatten();
  auto loss = [&](const Vector& x) {
    DModel mm = m;
    mm.W.reshaped() = x.head(m.W.size());
    mm.encoder.unflatten(x.tail(m.encoder.num_parameters()));
    return tau.dot(batch_objectives(forward(mm, X).scores, y, c, 1.0, 3));
  };
  const Vector numeric = oracle::central_differences(loss, params, 1e-5);
  const double rel = (analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm());
  rep.line(11, rel <= 1e-5 && analytic.size() <= 500,
           "gradient check on " + std::to_string(analytic.size()) +
               " parameters: relative error " + fmt(rel) + " (need ≤ 1e-5)");
}

void criterion_12(Report& rep) {
  const Dataset all = make_blobs(300, 3, 2, 6.0, 0);
  const auto [train_raw, test_raw] = split(all, 0.6, 0);
  const Standardized s = standardize(train_raw, test_raw);
  DConfig cfg;
  cfg.epochs = 200;
  const DFit fit = fit_dnpsvc(s.train, cfg, 0);
  double worst_simplex = 0.0;
  for (const DTraceRow& row : fit.trace)
    worst_simplex = std::max({worst_simplex, -row.tau.minCoeff(), std::abs(row.tau.sum() - 1.0)});
  const double acc = accuracy(predict_dnpsvc(fit.model, s.test.X), s.test.y);
  rep.line(12, acc >= 0.95 && worst_simplex <= 1e-12,
           "D-NPSVC++ blobs test accuracy " + fmt(acc) + " after 200 epochs (need ≥ 0.95), τ off the simplex by " +
               fmt(worst_simplex) + " over " + std::to_string(fit.trace.size()) + " steps");
}

std::string trace_text(const RunConfig& rc, const Dataset& data) {
  const TrainResult tr = train_model(data, rc);
  std::ostringstream out;
  if (rc.kind == ModelKind::dnpsvc) {
    write_dnpsvc_trace(out, tr.dnpsvc_trace);
  } else {
    record_orth(tr.knpsvc_trace);
    write_knpsvc_trace(out, tr.knpsvc_trace);
  }
  return out.str();
}

void criterion_13(Report& rep) {
  const Dataset blobs = make_blobs(120, 3, 2, 6.0, 4);
  RunConfig k;
  k.seed = 13;
  k.hp.max_outer = 10;
  RunConfig d;
  d.kind = ModelKind::dnpsvc;
  d.standardize = true;
  d.seed = 13;
  d.deep.epochs = 30;
  const bool same_k = trace_text(k, blobs) == trace_text(k, blobs);
  const bool same_d = trace_text(d, blobs) == trace_text(d, blobs);
  rep.line(13, same_k && same_d,
           std::string("repeated runs with one seed: K-NPSVC++ trace ") +
               (same_k ? "identical" : "differs") + ", D-NPSVC++ trace " +
               (same_d ? "identical" : "differs"));
}

}  // namespace

int main() {
  Report rep;
  std::cout << "Acceptance run" << std::endl;
  try {
    criterion_6(rep);
    criterion_7(rep);
    criterion_8(rep);
    criterion_9(rep);
    criterion_10(rep);
    criterion_11(rep);
    criterion_4(rep);
    criterion_12(rep);
    criterion_13(rep);
    criterion_1_2(rep);
    criterion_3(rep);
    criterion_5(rep);  // last, so it covers every fit above
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (rep.failures == 0 ? "all blocking criteria pass"
                                  : std::to_string(rep.failures) + " blocking criteria fail")
            << std::endl;
  return rep.failures == 0 ? 0 : 1;
}
