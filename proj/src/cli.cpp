#include "npsvc/cli.hpp"

#include "npsvc/dataset.hpp"
#include "npsvc/model_io.hpp"
#include "npsvc/protocol.hpp"
#include "npsvc/trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

namespace npsvc {

namespace {

struct Options {
  std::string model = "knpsvc";
  std::string data, test, model_file, out, trace, trace_b, config, kernel;
  std::optional<double> bandwidth;
  bool standardize = false;
  std::uint64_t seed = 0;
  int repeats = 0;
  double fraction = 0.6;
  std::size_t cap = 64;
  HyperParams hp;
  DConfig deep;
  std::string prior = "identity";
};

// Output either to a file named by --out or to the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorKind::io, "cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void add_hyperparameter_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "Model kind")
      ->check(CLI::IsMember({"knpsvc", "twsvm", "dnpsvc"}));
  cmd->add_option("--kernel", o.kernel, "Kernel")->check(CLI::IsMember({"linear", "gaussian"}));
  cmd->add_option("--bandwidth", o.bandwidth, "Gaussian bandwidth t (default: heuristic)");
  cmd->add_flag("--standardize", o.standardize, "Standardize features on the training split");
  cmd->add_option("--c", o.hp.c, "Dissimilarity weight c");
  cmd->add_option("--r1", o.hp.r1, "Regularizer r1 (TWSVM: r)");
  cmd->add_option("--r2", o.hp.r2, "Regularizer r2");
  cmd->add_option("--mu", o.hp.mu, "Manifold weight mu");
  cmd->add_option("--gamma", o.hp.gamma, "Dual trade-off gamma");
  cmd->add_option("--eta", o.hp.eta, "Projected-descent step eta");
  cmd->add_option("--dim", o.hp.dim, "Subspace dimension d (0: min(4K, p))");
  cmd->add_option("--max-outer", o.hp.max_outer, "Outer iteration cap");
  cmd->add_option("--epochs", o.deep.epochs, "D-NPSVC++ epochs");
  cmd->add_option("--batch", o.deep.batch, "D-NPSVC++ batch size");
  cmd->add_option("--lr", o.deep.lr, "D-NPSVC++ initial learning rate");
  cmd->add_option("--hidden", o.deep.hidden, "D-NPSVC++ hidden width");
  cmd->add_option("--latent", o.deep.latent, "D-NPSVC++ encoder output size");
  cmd->add_option("--prior", o.prior, "D-NPSVC++ prior map")
      ->check(CLI::IsMember({"identity", "projection"}));
  cmd->add_option("--prior-dim", o.deep.prior_dim, "Projection prior output size");
  cmd->add_option("--seed", o.seed, "Root random seed");
}

RunConfig run_config(const Options& o) {
  RunConfig rc;
  rc.kind = model_kind_from_string(o.model);
  rc.kernel = o.kernel.empty() ? KernelKind::gaussian : kernel_kind_from_string(o.kernel);
  rc.bandwidth = o.bandwidth;
  rc.hp = o.hp;
  rc.deep = o.deep;
  rc.deep.c = o.hp.c;
  rc.deep.prior = prior_kind_from_string(o.prior);
  rc.standardize = o.standardize || rc.kind == ModelKind::dnpsvc;
  rc.seed = o.seed;
  if (rc.kind == ModelKind::dnpsvc)
    rc.deep.validate();
  else
    rc.hp.validate();
  return rc;
}

// Structured sweep config: {"grid": {"c": [...], ...}, plus optional run
// settings that override the flags}.
Grid load_grid(const std::string& path, Options& o) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "config '" + path + "': " + e.what());
  }
  Grid g;
  try {
    if (j.contains("model")) o.model = j.at("model").get<std::string>();
    if (j.contains("kernel")) o.kernel = j.at("kernel").get<std::string>();
    if (j.contains("seed")) o.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("repeats")) o.repeats = j.at("repeats").get<int>();
    if (j.contains("fraction")) o.fraction = j.at("fraction").get<double>();
    if (j.contains("cap")) o.cap = j.at("cap").get<std::size_t>();
    if (j.contains("standardize")) o.standardize = j.at("standardize").get<bool>();
    const auto& grid = j.at("grid");
    for (const auto& item : grid.items()) {
      const std::string& k = item.key();
      if (k == "c") g.c = item.value().get<std::vector<double>>();
      else if (k == "r1") g.r1 = item.value().get<std::vector<double>>();
      else if (k == "r2") g.r2 = item.value().get<std::vector<double>>();
      else if (k == "mu") g.mu = item.value().get<std::vector<double>>();
      else if (k == "gamma") g.gamma = item.value().get<std::vector<double>>();
      else if (k == "dim") g.dim = item.value().get<std::vector<Index>>();
      else throw Error(ErrorKind::invalid_argument, "unknown grid axis '" + k + "'");
      if (item.value().empty())
        throw Error(ErrorKind::invalid_argument, "grid axis '" + k + "' is empty");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "config '" + path + "': " + e.what());
  }
  return g;
}

std::string label_text(double v) { return format_label(v); }

void write_model_trace(const TrainResult& tr, const std::string& path, std::ostream& err) {
  if (path.empty()) return;
  if (tr.model.kind == ModelKind::twsvm) {
    err << "note: twsvm has no iteration trace; '" << path << "' not written\n";
    return;
  }
  Sink sink(path, err);
  if (tr.model.kind == ModelKind::knpsvc)
    write_knpsvc_trace(*sink, tr.knpsvc_trace);
  else
    write_dnpsvc_trace(*sink, tr.dnpsvc_trace);
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = run_config(o);
  const Dataset data = load_dataset(o.data);
  const TrainResult tr = train_model(data, rc);
  save_model_file(tr.model, o.out);
  write_model_trace(tr, o.trace, err);
  if (rc.kind == ModelKind::knpsvc && !tr.converged)
    err << "warning: outer loop stopped at max_outer = " << rc.hp.max_outer
        << " before the dual objective settled\n";
  const double acc = evaluate(data.y, tr.model.predict(data.X), data.num_classes()).accuracy;
  out << "model,samples,features,classes,train_accuracy\n"
      << to_string(rc.kind) << ',' << data.num_samples() << ',' << data.num_features() << ','
      << data.num_classes() << ',' << format_number(acc) << '\n';
  return exit_ok;
}

// Loads data for a fitted model: pads short LIBSVM rows, rejects wider data.
Dataset load_for_model(const std::string& path, const ModelFile& model) {
  Dataset d = load_dataset(path, model.num_features());
  if (d.num_features() != model.num_features())
    throw Error(ErrorKind::dimension_mismatch,
                "'" + path + "' has " + std::to_string(d.num_features()) +
                    " features, model expects " + std::to_string(model.num_features()));
  return d;
}

void check_kernel_flag(const Options& o, const ModelFile& model) {
  if (o.kernel.empty()) return;
  if (model.kind == ModelKind::dnpsvc || kernel_kind_from_string(o.kernel) != model.kernel.kernel.kind)
    throw Error(ErrorKind::dimension_mismatch,
                "--kernel " + o.kernel + " does not match the stored " + to_string(model.kind) +
                    " model");
}

int cmd_predict(const Options& o, std::ostream& out) {
  const ModelFile model = load_model_file(o.model_file);
  check_kernel_flag(o, model);
  const Dataset data = load_for_model(o.data, model);
  const std::vector<int> pred = model.predict(data.X);
  Sink sink(o.out, out);
  *sink << "label\n";
  for (int k : pred) *sink << label_text(model.labels[static_cast<std::size_t>(k)]) << '\n';
  return exit_ok;
}

void write_metrics(std::ostream& out, const Metrics& m, const std::vector<double>& labels) {
  out << "metric,value\naccuracy," << format_number(m.accuracy) << "\n\n";
  out << "class,support,accuracy,present\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out << label_text(labels[k]) << ',' << m.support[k] << ',';
    if (m.support[k] > 0)
      out << format_number(m.class_accuracy[k]) << ",1\n";
    else
      out << ",0\n";
  }
  out << "\ntrue\\predicted";
  for (double l : labels) out << ',' << label_text(l);
  out << '\n';
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out << label_text(labels[k]);
    for (std::size_t j = 0; j < labels.size(); ++j)
      out << ',' << m.confusion(static_cast<Index>(k), static_cast<Index>(j));
    out << '\n';
  }
}

void write_run_columns_header(std::ostream& out) { out << "c,r1,r2,mu,gamma,dim"; }

void write_run_columns(std::ostream& out, const RunConfig& rc) {
  out << format_number(rc.hp.c) << ',' << format_number(rc.hp.r1) << ','
      << format_number(rc.hp.r2) << ',' << format_number(rc.hp.mu) << ','
      << format_number(rc.hp.gamma) << ',' << rc.hp.dim;
}

int cmd_eval(Options o, std::ostream& out, std::ostream& err) {
  if (o.repeats > 0 || !o.config.empty()) {
    const Grid grid = o.config.empty() ? Grid{} : load_grid(o.config, o);
    const RunConfig rc = run_config(o);
    const Dataset data = load_dataset(o.data);
    ProtocolOptions po;
    po.repeats = std::max(o.repeats, 1);
    po.fraction = o.fraction;
    if (grid.size() > o.cap)
      throw Error(ErrorKind::invalid_argument, "grid has " + std::to_string(grid.size()) +
                                                   " points, above the cap of " +
                                                   std::to_string(o.cap));
    const ProtocolResult res = run_protocol(data, rc, grid, po, [&](int r, const RepeatResult& rep) {
      err << "repeat " << r + 1 << ": accuracy " << format_number(rep.accuracy) << " ("
          << format_number(std::round(rep.seconds * 10) / 10) << " s)\n";
    });
    Sink sink(o.out, out);
    *sink << "repeat,accuracy,";
    write_run_columns_header(*sink);
    *sink << '\n';
    for (std::size_t r = 0; r < res.repeats.size(); ++r) {
      *sink << r + 1 << ',' << format_number(res.repeats[r].accuracy) << ',';
      write_run_columns(*sink, res.repeats[r].selected);
      *sink << '\n';
    }
    *sink << "\nmodel,repeats,fraction,mean,std\n"
          << o.model << ',' << po.repeats << ',' << format_number(po.fraction) << ','
          << format_number(res.mean) << ',' << format_number(res.stddev) << '\n';
    return exit_ok;
  }
  // Either a stored model scored on --data, or a fresh fit on --data scored on --test.
  ModelFile model;
  std::string scored = o.data;
  if (!o.model_file.empty()) {
    model = load_model_file(o.model_file);
    check_kernel_flag(o, model);
  } else if (!o.test.empty()) {
    model = train_model(load_dataset(o.data), run_config(o)).model;
    scored = o.test;
  } else {
    throw Error(ErrorKind::invalid_argument,
                "eval needs --model-file, --test, or --repeats for the split protocol");
  }
  const Dataset raw = load_for_model(scored, model);
  // Map the file's labels into the model's label table.
  std::vector<int> truth;
  truth.reserve(raw.y.size());
  for (int k : raw.y) {
    const double v = raw.original_label(k);
    const auto it = std::find(model.labels.begin(), model.labels.end(), v);
    if (it == model.labels.end())
      throw Error(ErrorKind::dimension_mismatch,
                  "label " + label_text(v) + " is not among the model's classes");
    truth.push_back(static_cast<int>(it - model.labels.begin()));
  }
  const Metrics m = evaluate(truth, model.predict(raw.X), model.num_classes());
  Sink sink(o.out, out);
  write_metrics(*sink, m, model.labels);
  return exit_ok;
}

int cmd_sweep(Options o, std::ostream& out) {
  if (o.config.empty()) throw Error(ErrorKind::invalid_argument, "sweep needs --config");
  const Grid grid = load_grid(o.config, o);
  const RunConfig rc = run_config(o);
  const Dataset data = load_dataset(o.data);
  ProtocolOptions po;
  po.repeats = std::max(o.repeats, 1);
  po.fraction = o.fraction;
  const auto rows = run_sweep(data, rc, grid, po, o.cap);
  Sink sink(o.out, out);
  write_run_columns_header(*sink);
  *sink << ",mean,std\n";
  for (const auto& row : rows) {
    write_run_columns(*sink, row.config);
    *sink << ',' << format_number(row.result.mean) << ',' << format_number(row.result.stddev)
          << '\n';
  }
  return exit_ok;
}

int cmd_diag(const Options& o, std::ostream& out) {
  const CsvTable a = read_csv_table_file(o.trace);
  std::vector<std::pair<std::string, CsvTable>> tables = {{"gap", gap_curve(a)},
                                                          {"objectives", objective_table(a)}};
  if (!o.trace_b.empty())
    tables.emplace_back("paired", paired_objectives(a, read_csv_table_file(o.trace_b)));
  if (o.out.empty()) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (i) out << '\n';
      write_csv_table(out, tables[i].second);
    }
    return exit_ok;
  }
  for (const auto& [name, table] : tables) {
    Sink sink(o.out + "_" + name + ".csv", out);
    write_csv_table(*sink, table);
  }
  return exit_ok;
}

}  // namespace

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::parse:
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_dataset:
    case ErrorKind::version_mismatch:
    case ErrorKind::corrupt_payload:
      return exit_config;
    case ErrorKind::dimension_mismatch:
      return exit_shape;
    default:
      return exit_internal;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparallel support vector classifiers (K-NPSVC++, TWSVM, D-NPSVC++)", "npsvc"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Fit a model and write it with its trace");
  add_hyperparameter_flags(train, o);
  train->add_option("--data", o.data, "Training data (LIBSVM or .csv)")->required();
  train->add_option("--out", o.out, "Model file to write")->required();
  train->add_option("--trace", o.trace, "Iteration trace CSV to write");

  auto* predict = app.add_subcommand("predict", "Label samples with a fitted model");
  predict->add_option("--model-file", o.model_file, "Fitted model")->required();
  predict->add_option("--data", o.data, "Samples to label")->required();
  predict->add_option("--kernel", o.kernel, "Expected kernel of the model")
      ->check(CLI::IsMember({"linear", "gaussian"}));
  predict->add_option("--out", o.out, "Label CSV (default: stdout)");

  auto* eval = app.add_subcommand("eval", "Score a model, or run the split-train-test protocol");
  add_hyperparameter_flags(eval, o);
  eval->add_option("--model-file", o.model_file, "Fitted model to score");
  eval->add_option("--test", o.test, "Held-out data: fit on --data, score here");
  eval->add_option("--data", o.data, "Labelled data")->required();
  eval->add_option("--repeats", o.repeats, "Protocol repeats (enables the protocol)");
  eval->add_option("--fraction", o.fraction, "Training fraction per split");
  eval->add_option("--config", o.config, "JSON grid searched on an inner validation split");
  eval->add_option("--cap", o.cap, "Maximum grid size");
  eval->add_option("--out", o.out, "Report CSV (default: stdout)");

  auto* sweep = app.add_subcommand("sweep", "Evaluate a hyperparameter grid");
  add_hyperparameter_flags(sweep, o);
  sweep->add_option("--data", o.data, "Labelled data")->required();
  sweep->add_option("--config", o.config, "JSON config with a grid")->required();
  sweep->add_option("--repeats", o.repeats, "Protocol repeats per grid point");
  sweep->add_option("--fraction", o.fraction, "Training fraction per split");
  sweep->add_option("--cap", o.cap, "Maximum grid size");
  sweep->add_option("--out", o.out, "Result CSV (default: stdout)");

  auto* diag = app.add_subcommand("diag", "Gap curve and per-class objective tables from traces");
  diag->add_option("--trace", o.trace, "Trace CSV")->required();
  diag->add_option("--trace-b", o.trace_b, "Second trace for a paired objective table");
  diag->add_option("--out", o.out, "Output prefix (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    if (*train) return cmd_train(o, out, err);
    if (*predict) return cmd_predict(o, out);
    if (*eval) return cmd_eval(o, out, err);
    if (*sweep) return cmd_sweep(o, out);
    if (*diag) return cmd_diag(o, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_internal;
}

}  // namespace npsvc
