#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isect/cli.hpp"
#include "isect/format.hpp"
#include "isect/problems.hpp"

#include <unistd.h>

#include <filesystem>
#include <sstream>

using namespace isect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run call(std::vector<std::string> args) {
  args.insert(args.begin(), "isect");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return Run{code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("isect_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("gen-qkp output is byte-identical across runs") {
  TempDir dir;
  const Run a = call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "42", "--out",
                      dir / "a.qkp"});
  const Run b = call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "42", "--out",
                      dir / "b.qkp"});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(read_file(dir / "a.qkp") == read_file(dir / "b.qkp"));
  CHECK(read_file(dir / "a.qkp") == write_qkp(gen_qkp(50, 0.5, 42)));

  const Run stdout_run = call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "42"});
  CHECK(stdout_run.out == read_file(dir / "a.qkp"));
}

TEST_CASE("usage errors exit with 1") {
  CHECK(call({}).code == 1);
  CHECK(call({"gen-qkp", "--n", "50"}).code == 1);
  CHECK(call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "1", "--bogus"}).code == 1);
  CHECK(call({"gen-qkp", "--n", "50", "--density", "1.5", "--seed", "1"}).code == 1);
  CHECK(call({"nope"}).code == 1);
  CHECK(call({"solve", "--instance", "/nonexistent/file"}).code == 1);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("verify-order emits per-t rows and one slope row per kind") {
  TempDir dir;
  REQUIRE(call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "42", "--out",
                dir / "q.qkp"})
              .code == 0);
  const Run r = call({"verify-order", "--instance", dir / "q.qkp", "--r", "10"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 3 * 16);
  CHECK(rows[0] == std::vector<std::string>{"kind", "t", "total_error", "tangential_error",
                                            "slope_total", "slope_tangential",
                                            "plateau_excluded_count"});
  int summaries = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 7);
    if (rows[k][1].empty()) {
      ++summaries;
      const double slope = std::stod(rows[k][5]);
      CHECK(slope >= 2.7);
      CHECK(slope <= 3.3);
    }
  }
  CHECK(summaries == 3);

  const Run again = call({"verify-order", "--instance", dir / "q.qkp", "--r", "10"});
  CHECK(again.out == r.out);
}

TEST_CASE("verify-order rejects bad kinds and grids") {
  TempDir dir;
  call({"gen-qkp", "--n", "10", "--density", "0.5", "--seed", "1", "--out", dir / "q.qkp"});
  CHECK(call({"verify-order", "--instance", dir / "q.qkp", "--kinds", "apm,bogus"}).code == 1);
  CHECK(call({"verify-order", "--instance", dir / "q.qkp", "--t-min", "1e-3", "--t-max", "1e-4"})
            .code == 1);
  CHECK(call({"verify-order", "--instance", dir / "q.qkp", "--points", "3"}).code == 1);
}

TEST_CASE("solve writes a summary and a log") {
  TempDir dir;
  call({"gen-qkp", "--n", "50", "--density", "0.5", "--seed", "42", "--out", dir / "q.qkp"});
  const Run r = call({"solve", "--instance", dir / "q.qkp", "--kind", "tapr", "--tol", "1e-4",
                      "--out", dir / "s.csv", "--log", dir / "log.csv"});
  CHECK(r.code == 0);
  const auto rows = parse_csv(read_file(dir / "s.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][8] == "grad_norm");
  CHECK(std::stod(rows[1][8]) <= 1e-4);
  CHECK(rows[1][9] == "1");
  CHECK(parse_csv(read_file(dir / "log.csv")).size() >= 2);

  const Run rnd = call({"solve", "--instance", dir / "q.qkp", "--start", "random", "--max-outer",
                        "5", "--point-out", dir / "p.csv"});
  CHECK(rnd.code == 0);
  const auto srow = parse_csv(rnd.out);
  CHECK(srow[1][3] == "5");
  const Matrix P = matrix_from_csv(read_file(dir / "p.csv"));
  CHECK(P.rows() == 52);
  CHECK(P.cols() == 10);

  CHECK(call({"solve", "--instance", dir / "q.qkp", "--start", "middle"}).code == 1);
  CHECK(call({"solve", "--instance", dir / "q.qkp", "--kind", "bogus"}).code == 1);
}

TEST_CASE("project maps a point onto the manifold and reports numerical failures") {
  TempDir dir;
  call({"gen-qkp", "--n", "10", "--density", "0.5", "--seed", "3", "--out", dir / "q.qkp"});
  const ProblemInstance inst = load_instance(dir / "q.qkp", 2);
  const Matrix x = random_feasible_point(inst, 5);
  const Matrix V = x + 1e-3 * random_matrix(x.rows(), x.cols(), 6);
  write_file_atomic(dir / "v.csv", matrix_to_csv(V));

  for (const char* method : {"gwa-newton", "apm", "newton-slra", "tapr"}) {
    CAPTURE(method);
    const Run r = call({"project", "--instance", dir / "q.qkp", "--r", "2", "--input-point",
                        dir / "v.csv", "--method", method});
    REQUIRE(r.code == 0);
    const Matrix X = matrix_from_csv(r.out);
    CHECK(combined_residual(inst.manifold, X) <= 1e-9 * scale_of(X));
  }

  const Run fail = call({"project", "--instance", dir / "q.qkp", "--r", "2", "--input-point",
                         dir / "v.csv", "--method", "apm", "--tol", "1e-15", "--maxiter", "1"});
  CHECK(fail.code == 2);
  CHECK(fail.err.find("MaxIterExceeded") != std::string::npos);

  write_file_atomic(dir / "bad.csv", "1,2\n3\n");
  CHECK(call({"project", "--instance", dir / "q.qkp", "--input-point", dir / "bad.csv"}).code ==
        1);
}

TEST_CASE("bench produces one row per cell") {
  TempDir dir;
  call({"gen-qkp", "--n", "12", "--density", "0.5", "--seed", "4", "--out", dir / "q.qkp"});
  const Run r = call({"bench", "--instances", dir / "q.qkp", "--kinds", "apm,aphl", "--repeats",
                      "2", "--max-outer", "5", "--r", "2", "--timing", dir / "t.csv"});
  CHECK(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 1 + 4);
  CHECK(rows[1][1] == "apm");
  CHECK(rows[1][3] == "1");
  CHECK(rows[2][3] == "2");
  CHECK(rows[3][1] == "aphl");
  CHECK(parse_csv(read_file(dir / "t.csv")).size() == 5);
  CHECK(r.out.find("wall_time") == std::string::npos);
}
