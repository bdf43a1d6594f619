#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clufef/cli.hpp"
#include "clufef/io.hpp"
#include "oracles.hpp"

using namespace clufef;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("clufef_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args, std::optional<std::string> env = std::nullopt) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Two Gaussian classes, rows are samples, label in the last column.
std::string write_two_class(const std::string& path, int per_class, int D, std::uint64_t seed, double gap = 3.0) {
  std::mt19937_64 rng(seed);
  Matrix X = oracle::random_matrix(D, 2 * per_class, rng);
  std::vector<long long> labels;
  for (int j = 0; j < 2 * per_class; ++j) {
    labels.push_back(j % 2);
    X(0, j) += j % 2 ? gap : -gap;
  }
  std::ofstream out(path);
  write_csv(out, X, &labels);
  return path;
}

}  // namespace

TEST_CASE("fit writes a reproducible model") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 4, 3, 1);
  const std::vector<std::string> args{"fit", "--data", data, "--method", "u-cl", "--dim", "2", "--k", "2",
                                      "--output", tmp.file("a.model")};
  Outcome a = run_cli(args);
  CHECK(a.code == 0);
  CHECK(a.out.find("final_loss = ") != std::string::npos);
  const std::string first = slurp(tmp.file("a.model"));
  CHECK(first.rfind("clufef-model 1", 0) == 0);

  Outcome b = run_cli(args);
  CHECK(b.code == 0);
  CHECK(b.out == a.out);
  CHECK(slurp(tmp.file("a.model")) == first);

  std::vector<std::string> reseeded = args;
  reseeded.insert(reseeded.end(), {"--seed", "9"});
  CHECK(run_cli(reseeded).code == 0);
  CHECK(slurp(tmp.file("a.model")) != first);
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 4, 3, 2);
  Outcome missing = run_cli({"fit", "--data", data, "--method", "s-cl1", "--label-col", "none",
                             "--output", tmp.file("m.model")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("MissingLabels") != std::string::npos);

  CHECK(run_cli({"fit", "--data", data, "--bogus", "1"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"fit", "--data", data, "--method", "lda", "--output", tmp.file("x")}).code == 2);
  CHECK(run_cli({"fit", "--data", data, "--k", "9", "--output", tmp.file("x")}).code == 2);
  CHECK(run_cli({"fit", "--data", tmp.file("absent.csv"), "--output", tmp.file("x")}).code == 3);

  std::ofstream(tmp.file("bad.csv")) << "1,2,0\nfoo,3,1\n";
  CHECK(run_cli({"fit", "--data", tmp.file("bad.csv"), "--output", tmp.file("x")}).code == 3);
  CHECK(run_cli({"fit", "--help"}).code == 0);
}

TEST_CASE("config file, environment and flags") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 6, 3, 3);
  std::ofstream(tmp.file("run.cfg")) << "method = s-cl1\nsigma = 0.5\ndim = 1\n";
  CHECK(run_cli({"fit", "--config", tmp.file("run.cfg"), "--data", data, "--output", tmp.file("a.model")}).code == 0);
  const std::string model = slurp(tmp.file("a.model"));
  CHECK(model.find("method = s-cl1") != std::string::npos);
  CHECK(model.find("sigma = 0.5") != std::string::npos);

  CHECK(run_cli({"fit", "--config", tmp.file("run.cfg"), "--sigma", "2", "--data", data, "--output",
                 tmp.file("b.model")})
            .code == 0);
  CHECK(slurp(tmp.file("b.model")).find("sigma = 2") != std::string::npos);

  std::ofstream(tmp.file("typo.cfg")) << "sigmaa = 0.5\n";
  CHECK(run_cli({"fit", "--config", tmp.file("typo.cfg"), "--data", data, "--output", tmp.file("c.model")}).code == 2);

  // The environment seed replaces the default; an explicit flag beats it.
  auto fitted = [&](std::vector<std::string> extra, std::optional<std::string> env) {
    std::vector<std::string> a{"fit", "--config", tmp.file("run.cfg"), "--data", data, "--output", tmp.file("s.model")};
    a.insert(a.end(), extra.begin(), extra.end());
    REQUIRE(run_cli(a, env).code == 0);
    return slurp(tmp.file("s.model"));
  };
  const std::string from_env = fitted({}, "7");
  CHECK(from_env == fitted({"--seed", "7"}, std::nullopt));
  CHECK(from_env == fitted({"--seed", "7"}, "8"));
  CHECK(from_env != fitted({}, std::nullopt));
  CHECK(from_env.find("seed = 7") != std::string::npos);
  CHECK(run_cli({"fit", "--config", tmp.file("run.cfg"), "--data", data, "--output", tmp.file("h.model")}, "x").code == 2);
}

TEST_CASE("transform applies the stored pipeline") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 5, 4, 4);
  REQUIRE(run_cli({"fit", "--data", data, "--method", "s-cl1", "--dim", "2", "--standardize", "false",
                   "--output", tmp.file("m.model")})
              .code == 0);
  Outcome t = run_cli({"transform", "--model", tmp.file("m.model"), "--data", data});
  REQUIRE(t.code == 0);

  std::istringstream embedded(t.out);
  DatasetFile no_labels;
  no_labels.labels = LabelColumn::parse("none");
  LoadedData Y = parse_csv(embedded, no_labels);
  CHECK(Y.X.rows() == 2);
  CHECK(Y.X.cols() == 10);

  std::ifstream model_in(tmp.file("m.model"));
  ModelFile model = read_model(model_in);
  LoadedData X = load_csv(DatasetFile{data, false, {}});
  CHECK(Y.X == project(model.fit.projection, X.X));

  std::ofstream(tmp.file("one.csv")) << "0.5,-1,2,3.25\n";
  Outcome single = run_cli({"transform", "--model", tmp.file("m.model"), "--data", tmp.file("one.csv"),
                            "--label-col", "none", "--output", tmp.file("one.out")});
  CHECK(single.code == 0);
  std::istringstream one_in(slurp(tmp.file("one.out")));
  CHECK(parse_csv(one_in, no_labels).X.cols() == 1);

  std::ofstream(tmp.file("narrow.csv")) << "1,2,0\n";
  CHECK(run_cli({"transform", "--model", tmp.file("m.model"), "--data", tmp.file("narrow.csv")}).code == 3);
}

TEST_CASE("benchmark reports are complete and reproducible") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 15, 4, 5);
  std::vector<std::string> args{"benchmark", "--data", data, "--method", "s-cl2", "--k", "2", "--sigma", "1",
                                "--repeats", "5", "--train-per-class", "6", "--max-iter", "50"};
  args.insert(args.end(), {"--output", tmp.file("a.report")});
  Outcome first = run_cli(args);
  REQUIRE(first.code == 0);
  const std::string report = slurp(tmp.file("a.report"));
  const std::string grid_csv = slurp(tmp.file("a.report.grid.csv"));
  REQUIRE(run_cli(args).code == 0);
  CHECK(report == slurp(tmp.file("a.report")));
  CHECK(grid_csv == slurp(tmp.file("a.report.grid.csv")));

  std::istringstream in(report);
  std::vector<double> accuracies;
  double mean = -1.0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("accuracy = ", 0) == 0) accuracies.push_back(parse_double(line.substr(11), "report"));
    if (line.rfind("mean_accuracy = ", 0) == 0) mean = parse_double(line.substr(16), "report");
  }
  REQUIRE(accuracies.size() == 5);
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  CHECK(mean == sum / 5.0);

  std::vector<std::string> grid(args.begin(), args.end() - 2);
  grid.insert(grid.end(), {"--grid", "--k-values", "2,4", "--sigma-values", "0.1,1", "--jobs", "2", "--output",
                           tmp.file("g.report")});
  Outcome g = run_cli(grid);
  CHECK(g.code == 0);
  std::string csv = slurp(tmp.file("g.report.grid.csv"));
  CHECK(csv.rfind("k,sigma,mean_accuracy,mean_recall\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("gradcheck") {
  TempDir tmp;
  const std::string data = write_two_class(tmp.file("d.csv"), 6, 4, 6);
  Outcome ok = run_cli({"gradcheck", "--data", data, "--method", "s-cl2", "--k", "2", "--dim", "2"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);

  // k = n - 1 leaves no negatives: both gradients vanish.
  Outcome zero = run_cli({"gradcheck", "--data", data, "--method", "u-cl", "--k", "11", "--dim", "2"});
  CHECK(zero.code == 0);
  CHECK(zero.out.find("max_relative_disagreement = 0\n") != std::string::npos);

  Outcome bad = run_cli({"gradcheck", "--data", data, "--method", "s-cl2", "--k", "2", "--dim", "2",
                         "--corrupt-gradient", "0.01"});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}
