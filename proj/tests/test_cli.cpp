#include "npsvc/cli.hpp"
#include "npsvc/dataset.hpp"
#include "npsvc/synthetic.hpp"
#include "npsvc/trace.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace npsvc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("npsvc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

void write_blobs(const std::string& path, Index n = 60, std::uint64_t seed = 0) {
  std::ofstream f(path);
  write_csv(f, make_blobs(n, 3, 2, 6.0, seed));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and bad usage") {
  CHECK(cli({"--help"}).code == exit_ok);
  CHECK(cli({}).code == exit_config);
  CHECK(cli({"train", "--bogus"}).code == exit_config);
  CHECK(cli({"frobnicate"}).code == exit_config);
}

TEST_CASE("exit codes map error kinds") {
  CHECK(exit_code_for(ErrorKind::io) == exit_config);
  CHECK(exit_code_for(ErrorKind::parse) == exit_config);
  CHECK(exit_code_for(ErrorKind::version_mismatch) == exit_config);
  CHECK(exit_code_for(ErrorKind::dimension_mismatch) == exit_shape);
  CHECK(exit_code_for(ErrorKind::non_converged) == exit_internal);
}

TEST_CASE("train, predict, and eval on the training data") {
  TempDir dir;
  write_blobs(dir / "train.csv");
  const Run t = cli({"train", "--data", dir / "train.csv", "--out", dir / "m.json", "--trace",
                     dir / "trace.csv", "--max-outer", "8", "--gamma", "0.01"});
  REQUIRE(t.code == exit_ok);
  CHECK(lines(t.out)[0] == "model,samples,features,classes,train_accuracy");
  CHECK(fs::exists(dir / "m.json"));
  CHECK(lines(read_text(dir / "trace.csv")).size() >= 2);

  const Run p = cli({"predict", "--model-file", dir / "m.json", "--data", dir / "train.csv"});
  REQUIRE(p.code == exit_ok);
  const auto pred = lines(p.out);
  REQUIRE(pred.size() == 61);
  CHECK(pred[0] == "label");
  std::ifstream f(dir / "train.csv");
  const Dataset data = parse_csv(f);
  int agree = 0;
  for (Index j = 0; j < 60; ++j)
    agree += pred[static_cast<std::size_t>(j) + 1] == format_label(data.original_label(data.y[j]));
  CHECK(agree >= 59);

  const Run e = cli({"eval", "--model-file", dir / "m.json", "--data", dir / "train.csv"});
  REQUIRE(e.code == exit_ok);
  const auto rows = lines(e.out);
  CHECK(rows[0] == "metric,value");
  CHECK(rows[1].rfind("accuracy,", 0) == 0);
  CHECK(std::stod(rows[1].substr(9)) >= 0.99);
}

TEST_CASE("a perfect predictor gives a diagonal confusion matrix") {
  TempDir dir;
  write_blobs(dir / "train.csv", 30);
  REQUIRE(cli({"train", "--model", "twsvm", "--data", dir / "train.csv", "--out", dir / "m.json"})
              .code == exit_ok);
  const Run e = cli({"eval", "--model-file", dir / "m.json", "--data", dir / "train.csv"});
  REQUIRE(e.code == exit_ok);
  const auto rows = lines(e.out);
  CHECK(rows[1] == "accuracy,1");
  REQUIRE(rows.size() == 12);
  CHECK(rows[3] == "class,support,accuracy,present");
  CHECK(rows[4] == "1,10,1,1");
  CHECK(rows[8] == "true\\predicted,1,2,3");
  CHECK(rows[9] == "1,10,0,0");
  CHECK(rows[10] == "2,0,10,0");
  CHECK(rows[11] == "3,0,0,10");
}

TEST_CASE("classes absent from the scored data are flagged") {
  TempDir dir;
  write_blobs(dir / "train.csv", 30);
  REQUIRE(cli({"train", "--model", "twsvm", "--data", dir / "train.csv", "--out", dir / "m.json"})
              .code == exit_ok);
  std::ifstream f(dir / "train.csv");
  const Dataset all = parse_csv(f);
  std::vector<Index> ones;
  for (Index j = 0; j < all.num_samples(); ++j)
    if (all.y[j] == 0) ones.push_back(j);
  {
    std::ofstream g(dir / "one.csv");
    write_csv(g, all.subset(ones));
  }
  const Run e = cli({"eval", "--model-file", dir / "m.json", "--data", dir / "one.csv"});
  REQUIRE(e.code == exit_ok);
  const auto rows = lines(e.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[4] == "1,10,1,1");
  CHECK(rows[5] == "2,0,,0");
  CHECK(rows[6] == "3,0,,0");
}

TEST_CASE("eval with --test fits on --data") {
  TempDir dir;
  write_blobs(dir / "train.csv", 60, 0);
  write_blobs(dir / "test.csv", 30, 5);
  const Run e = cli({"eval", "--model", "twsvm", "--data", dir / "train.csv", "--test",
                     dir / "test.csv"});
  REQUIRE(e.code == exit_ok);
  CHECK(std::stod(lines(e.out)[1].substr(9)) >= 0.95);
  CHECK(cli({"eval", "--data", dir / "train.csv"}).code == exit_config);
}

TEST_CASE("configuration and shape errors") {
  TempDir dir;
  write_blobs(dir / "train.csv", 30);
  CHECK(cli({"train", "--data", dir / "absent.csv", "--out", dir / "m.json"}).code == exit_config);
  write_text(dir / "bad.libsvm", "1 2:1 1:3\n");
  CHECK(cli({"train", "--data", dir / "bad.libsvm", "--out", dir / "m.json"}).code == exit_config);
  CHECK(cli({"train", "--data", dir / "train.csv", "--out", dir / "m.json", "--c", "-1"}).code ==
        exit_config);
  CHECK(cli({"train", "--data", dir / "train.csv", "--out", dir / "m.json", "--kernel", "poly"})
            .code == exit_config);

  REQUIRE(cli({"train", "--model", "twsvm", "--data", dir / "train.csv", "--out", dir / "m.json"})
              .code == exit_ok);
  write_text(dir / "wide.csv", "label,f1,f2,f3\n1,0,0,0\n");
  CHECK(cli({"predict", "--model-file", dir / "m.json", "--data", dir / "wide.csv"}).code ==
        exit_shape);
  CHECK(cli({"predict", "--model-file", dir / "m.json", "--data", dir / "train.csv", "--kernel",
             "linear"})
            .code == exit_shape);
  write_text(dir / "other.csv", "label,f1,f2\n9,0,0\n");
  CHECK(cli({"eval", "--model-file", dir / "m.json", "--data", dir / "other.csv"}).code ==
        exit_shape);

  write_text(dir / "broken.json", read_text(dir / "m.json").substr(0, 40));
  CHECK(cli({"predict", "--model-file", dir / "broken.json", "--data", dir / "train.csv"}).code ==
        exit_config);
}

TEST_CASE("empty input predicts nothing and succeeds") {
  TempDir dir;
  write_blobs(dir / "train.csv", 30);
  REQUIRE(cli({"train", "--model", "twsvm", "--data", dir / "train.csv", "--out", dir / "m.json"})
              .code == exit_ok);
  write_text(dir / "empty.libsvm", "");
  const Run p = cli({"predict", "--model-file", dir / "m.json", "--data", dir / "empty.libsvm"});
  CHECK(p.code == exit_ok);
  CHECK(p.out == "label\n");
  write_text(dir / "short.libsvm", "1 1:0.5\n");
  CHECK(cli({"predict", "--model-file", dir / "m.json", "--data", dir / "short.libsvm"}).code ==
        exit_ok);
}

TEST_CASE("sweep grids") {
  TempDir dir;
  write_blobs(dir / "data.csv", 60);
  write_text(dir / "grid.json", R"({"grid": {"c": [0.5, 1], "r1": [0.01, 0.1]}, "model": "twsvm"})");
  const Run s = cli({"sweep", "--data", dir / "data.csv", "--config", dir / "grid.json"});
  REQUIRE(s.code == exit_ok);
  const auto rows = lines(s.out);
  CHECK(rows[0] == "c,r1,r2,mu,gamma,dim,mean,std");
  CHECK(rows.size() == 5);

  CHECK(cli({"sweep", "--data", dir / "data.csv", "--config", dir / "grid.json", "--cap", "3"})
            .code == exit_config);
  write_text(dir / "bad.json", R"({"grid": {"c": [1], "sigma": [2]}})");
  CHECK(cli({"sweep", "--data", dir / "data.csv", "--config", dir / "bad.json"}).code ==
        exit_config);
  write_text(dir / "garbled.json", "{grid");
  CHECK(cli({"sweep", "--data", dir / "data.csv", "--config", dir / "garbled.json"}).code ==
        exit_config);

  // A single grid point reproduces the plain protocol.
  write_text(dir / "one.json", R"({"grid": {"c": [0.5]}, "model": "twsvm"})");
  const Run one = cli({"sweep", "--data", dir / "data.csv", "--config", dir / "one.json",
                       "--repeats", "2"});
  const Run plain = cli({"eval", "--model", "twsvm", "--data", dir / "data.csv", "--c", "0.5",
                         "--repeats", "2"});
  REQUIRE(one.code == exit_ok);
  REQUIRE(plain.code == exit_ok);
  CHECK(fields(lines(one.out)[1])[6] == fields(lines(plain.out).back())[3]);
}

TEST_CASE("diag tables and deterministic traces") {
  TempDir dir;
  write_blobs(dir / "data.csv", 60);
  const std::vector<std::string> base = {"train", "--data", dir / "data.csv", "--max-outer", "6",
                                         "--gamma", "0.01", "--seed", "7"};
  auto run = [&](const std::string& tag) {
    auto args = base;
    for (const std::string& a :
         std::vector<std::string>{"--out", dir / (tag + ".json"), "--trace", dir / (tag + ".csv")})
      args.push_back(a);
    REQUIRE(cli(args).code == exit_ok);
    return read_text(dir / (tag + ".csv"));
  };
  const std::string a = run("a"), b = run("b");
  CHECK(a == b);
  CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));

  const Run d = cli({"diag", "--trace", dir / "a.csv", "--trace-b", dir / "b.csv", "--out",
                     dir / "report"});
  REQUIRE(d.code == exit_ok);
  const auto obj = lines(read_text(dir / "report_objectives.csv"));
  CHECK(obj.size() == 4);
  CHECK(lines(read_text(dir / "report_paired.csv")).size() == 4);
  CHECK(lines(read_text(dir / "report_gap.csv"))[0] == "step,primal,dual,gap,relative_gap");

  const Run to_stdout = cli({"diag", "--trace", dir / "a.csv"});
  CHECK(to_stdout.code == exit_ok);
  CHECK(to_stdout.out.find("relative_gap") != std::string::npos);
  CHECK(cli({"diag", "--trace", dir / "missing.csv"}).code == exit_config);
}

TEST_CASE("deep model through the CLI") {
  TempDir dir;
  write_blobs(dir / "data.csv", 60);
  const Run t = cli({"train", "--model", "dnpsvc", "--data", dir / "data.csv", "--out",
                     dir / "d.json", "--trace", dir / "d.csv", "--epochs", "20"});
  REQUIRE(t.code == exit_ok);
  CHECK(lines(read_text(dir / "d.csv"))[0].rfind("epoch", 0) == 0);
  CHECK(cli({"predict", "--model-file", dir / "d.json", "--data", dir / "data.csv", "--kernel",
             "gaussian"})
            .code == exit_shape);
}

}  // TEST_SUITE
