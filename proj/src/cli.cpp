#include "isect/cli.hpp"

#include "isect/format.hpp"
#include "isect/optimizer.hpp"
#include "isect/problems.hpp"
#include "isect/verification.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace isect::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<RetractionKind> parse_kinds(const std::string& s) {
  std::vector<RetractionKind> kinds;
  for (const auto& name : split_list(s)) {
    const auto k = parse_kind(name);
    if (!k) throw CLI::ValidationError("--kinds", "unknown retraction kind '" + name + "'");
    kinds.push_back(*k);
  }
  if (kinds.empty()) throw CLI::ValidationError("--kinds", "no kind given");
  return kinds;
}

RetractionKind parse_one_kind(const std::string& s) {
  const auto k = parse_kind(s);
  if (!k) throw CLI::ValidationError("--kind", "unknown retraction kind '" + s + "'");
  return *k;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

int thread_count() {
  const char* env = std::getenv("ISECT_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

std::string str(Index v) { return std::to_string(v); }
std::string str(int v) { return std::to_string(v); }

struct GenQkp {
  Index n = 50;
  double density = 0.5;
  std::uint64_t seed = 42;
  std::string out;
};

struct VerifyOrder {
  std::string instance;
  std::string kinds = "apm,newton-slra,aphl";
  double t_min = 1e-7;
  double t_max = 1e-5;
  int points = 15;
  Index r = 0;
  std::uint64_t seed = 7;
  bool normalize = false;
  double tol = 0.0;  // 0 keeps the slope default
  std::string out;
};

struct Solve {
  std::string instance;
  std::string kind = "apm";
  Index r = 0;
  double tol = 1e-4;
  int max_outer = 2000;
  std::string start = "constructive";
  std::uint64_t seed = 1;
  std::string bb = "alt";
  std::string out, log, timing, point_out;
};

struct Bench {
  std::vector<std::string> instances;
  std::string kinds = "apm,newton-slra,aphl,tapr";
  int repeats = 1;
  Index r = 0;
  double tol = 1e-4;
  int max_outer = 2000;
  std::string out, timing;
};

struct Project {
  std::string instance;
  std::string method = "gwa-newton";
  std::string input;
  Index r = 0;
  double tol = 1e-10;
  int maxiter = 1000;
  std::string out;
};

OptimizerConfig solver_config(const std::string& kind, double tol, int max_outer,
                              const std::string& start, std::uint64_t seed, const std::string& bb) {
  OptimizerConfig cfg;
  cfg.retraction.kind = parse_one_kind(kind);
  cfg.retraction.maxiter = 2000;
  cfg.grad_tol = tol;
  cfg.max_outer = max_outer;
  cfg.start_seed = seed;
  if (start == "constructive") {
    cfg.start = StartPoint::Constructive;
  } else if (start == "random") {
    cfg.start = StartPoint::Random;
  } else {
    throw CLI::ValidationError("--start", "expected constructive or random");
  }
  if (bb == "bb1") {
    cfg.bb_variant = BBVariant::BB1;
  } else if (bb == "bb2") {
    cfg.bb_variant = BBVariant::BB2;
  } else if (bb == "alt") {
    cfg.bb_variant = BBVariant::Alternating;
  } else {
    throw CLI::ValidationError("--bb", "expected bb1, bb2 or alt");
  }
  return cfg;
}

int do_gen_qkp(const GenQkp& o, std::ostream& out) {
  if (o.n < 2) throw CLI::ValidationError("--n", "must be >= 2");
  if (!(o.density > 0.0 && o.density <= 1.0)) {
    throw CLI::ValidationError("--density", "must lie in (0, 1]");
  }
  emit(o.out, write_qkp(gen_qkp(o.n, o.density, o.seed)), out);
  return 0;
}

int do_verify_order(const VerifyOrder& o, std::ostream& out) {
  const auto kinds = parse_kinds(o.kinds);
  if (o.points < 4) throw CLI::ValidationError("--points", "need at least 4");
  if (!(o.t_min > 0.0 && o.t_max > o.t_min)) {
    throw CLI::ValidationError("--t-min/--t-max", "need 0 < t-min < t-max");
  }
  const ProblemInstance inst = load_instance(o.instance, o.r);
  const IntersectionManifold& M = inst.manifold;
  const Matrix x = random_feasible_point(inst, o.seed);
  Matrix eta = riemannian_gradient(inst, x);
  if (o.normalize) {
    require(eta.norm() > 0.0, ErrorKind::InvalidArgument, "gradient vanishes at the base point");
    eta /= eta.norm();
  }
  const auto grid = log_grid(o.t_min, o.t_max, o.points);

  CsvWriter csv({"kind", "t", "total_error", "tangential_error", "slope_total",
                 "slope_tangential", "plateau_excluded_count"});
  for (const RetractionKind kind : kinds) {
    RetractionConfig cfg = slope_config(kind);
    if (o.tol > 0.0) cfg.tol = o.tol;
    const OrderSlope res = order_slope(M, x, eta, grid, cfg);
    const std::string name(kind_name(kind));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      csv.row({name, format_double(grid[k]), format_double(res.total.errors[k]),
               format_double(res.tangential.errors[k]), "", "", ""});
    }
    csv.row({name, "", "", "", format_double(res.total.slope),
             format_double(res.tangential.slope), str(res.tangential.excluded)});
  }
  emit(o.out, csv.str(), out);
  return 0;
}

int do_solve(const Solve& o, std::ostream& out) {
  const OptimizerConfig cfg = solver_config(o.kind, o.tol, o.max_outer, o.start, o.seed, o.bb);
  const ProblemInstance inst = load_instance(o.instance, o.r);
  const SolveReport rep = solve(inst, cfg);
  const double reported = inst.meta.negated ? 0.0 - rep.final_objective : rep.final_objective;

  CsvWriter summary({"instance", "kind", "r", "outer_iters", "total_retraction_iters",
                     "mean_retraction_iters", "final_objective", "reported_objective",
                     "grad_norm", "converged"});
  summary.row({inst.meta.name, o.kind, str(inst.manifold.dims().r), str(rep.outer_iters),
               str(rep.total_retraction_iters), format_double(rep.mean_retraction_iters),
               format_double(rep.final_objective), format_double(reported),
               format_double(rep.grad_norm), rep.converged ? "1" : "0"});
  emit(o.out, summary.str(), out);

  if (!o.log.empty()) {
    CsvWriter log({"iter", "objective", "grad_norm", "step", "retraction_iters", "residual",
                   "retraction_tol", "halvings"});
    for (const auto& l : rep.per_iter_log) {
      log.row({str(l.iter), format_double(l.objective), format_double(l.grad_norm),
               format_double(l.step), str(l.retraction_iters), format_double(l.residual),
               format_double(l.retraction_tol), str(l.halvings)});
    }
    write_file_atomic(o.log, log.str());
  }
  if (!o.timing.empty()) {
    CsvWriter t({"instance", "kind", "wall_time"});
    t.row({inst.meta.name, o.kind, format_double(rep.wall_time)});
    write_file_atomic(o.timing, t.str());
  }
  if (!o.point_out.empty()) write_file_atomic(o.point_out, matrix_to_csv(rep.final_point));
  return 0;
}

int do_bench(const Bench& o, std::ostream& out, std::ostream& err) {
  const auto kinds = parse_kinds(o.kinds);
  if (o.repeats < 1) throw CLI::ValidationError("--repeats", "must be >= 1");
  std::vector<ProblemInstance> insts;
  for (const auto& path : o.instances) insts.push_back(load_instance(path, o.r));

  struct Cell {
    std::size_t inst;
    RetractionKind kind;
    int repeat;
    std::vector<std::string> row;
    double seconds = 0.0;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    for (const auto kind : kinds) {
      for (int rep = 0; rep < o.repeats; ++rep) cells.push_back(Cell{i, kind, rep, {}, 0.0});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      Cell& cell = cells[c];
      const ProblemInstance& inst = insts[cell.inst];
      const std::string kind(kind_name(cell.kind));
      const std::uint64_t seed = static_cast<std::uint64_t>(cell.repeat) + 1;
      OptimizerConfig cfg = solver_config(kind, o.tol, o.max_outer, "random", seed, "alt");
      std::vector<std::string> row{inst.meta.name, kind, str(cell.repeat),
                                   std::to_string(seed)};
      try {
        const SolveReport rep = solve(inst, cfg);
        row.insert(row.end(), {"ok", str(rep.outer_iters), str(rep.total_retraction_iters),
                               format_double(rep.mean_retraction_iters),
                               format_double(rep.final_objective), format_double(rep.grad_norm),
                               rep.converged ? "1" : "0"});
        cell.seconds = rep.wall_time;
      } catch (const Error& e) {
        {
          std::lock_guard<std::mutex> lock(err_mu);
          err << "bench " << inst.meta.name << " " << kind << " repeat " << cell.repeat << ": "
              << e.what() << "\n";
        }
        row.insert(row.end(), {to_string(e.kind()), "", "", "", "", "", "0"});
      }
      cell.row = std::move(row);
    }
  };
  const int nthreads = std::min<int>(thread_count(), static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  CsvWriter csv({"instance", "kind", "repeat", "seed", "status", "outer_iters",
                 "total_retraction_iters", "mean_retraction_iters", "final_objective",
                 "grad_norm", "converged"});
  CsvWriter timing({"instance", "kind", "repeat", "wall_time"});
  for (const auto& cell : cells) {
    csv.row(cell.row);
    timing.row({cell.row[0], cell.row[1], cell.row[2], format_double(cell.seconds)});
  }
  emit(o.out, csv.str(), out);
  if (!o.timing.empty()) write_file_atomic(o.timing, timing.str());
  return 0;
}

int do_project(const Project& o, std::ostream& out, std::ostream& err) {
  const RetractionKind kind = parse_one_kind(o.method);
  const ProblemInstance inst = load_instance(o.instance, o.r);
  const IntersectionManifold& M = inst.manifold;
  const Matrix V = matrix_from_csv(read_file(o.input));
  M.check_shape(V, "project input point");

  Matrix X;
  if (kind == RetractionKind::MetricGWA || kind == RetractionKind::MetricGWANewton) {
    const MetricMethod method =
        kind == RetractionKind::MetricGWA ? MetricMethod::GWA : MetricMethod::GWANewton;
    const MetricProjection p = metric_project(M, V, method, o.tol, o.maxiter);
    err << "dual iterations: " << p.iterations << "\n";
    X = p.point;
  } else {
    RetractionConfig cfg;
    cfg.kind = kind;
    cfg.tol = o.tol;
    cfg.maxiter = o.maxiter;
    if (kind == RetractionKind::TAPR) cfg.tapr = TaprParams::for_tolerance(o.tol);
    const RetractionResult res = solve_to_manifold(M, V, cfg);
    err << "iterations: " << res.trace.steps() << "\n";
    X = res.point;
  }
  emit(o.out, matrix_to_csv(X), out);
  return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retractions on affine / row-sphere intersection manifolds"};
  app.require_subcommand(1);

  GenQkp gq;
  auto* gen = app.add_subcommand("gen-qkp", "generate a seeded QKP instance");
  gen->add_option("--n", gq.n, "number of items")->required();
  gen->add_option("--density", gq.density, "nonzero density of Q")->required();
  gen->add_option("--seed", gq.seed, "generator seed")->required();
  gen->add_option("--out", gq.out, "output file (stdout if omitted)");

  VerifyOrder vo;
  auto* ver = app.add_subcommand("verify-order", "retraction error slopes over a t grid");
  ver->add_option("--instance", vo.instance, "qkp-v1 or QAPLib file")->required();
  ver->add_option("--kinds", vo.kinds, "comma separated retraction kinds");
  ver->add_option("--t-min", vo.t_min);
  ver->add_option("--t-max", vo.t_max);
  ver->add_option("--points", vo.points);
  ver->add_option("--r", vo.r, "rank (0: initial rank rule)");
  ver->add_option("--seed", vo.seed, "seed of the feasible base point");
  ver->add_flag("--normalize", vo.normalize, "use the unit gradient direction");
  ver->add_option("--tol", vo.tol, "inner retraction tolerance");
  ver->add_option("--out", vo.out);

  Solve so;
  auto* sol = app.add_subcommand("solve", "BB Riemannian gradient solve");
  sol->add_option("--instance", so.instance)->required();
  sol->add_option("--kind", so.kind);
  sol->add_option("--r", so.r);
  sol->add_option("--tol", so.tol, "gradient norm tolerance");
  sol->add_option("--max-outer", so.max_outer);
  sol->add_option("--start", so.start, "constructive or random");
  sol->add_option("--seed", so.seed, "seed of the random start");
  sol->add_option("--bb", so.bb, "bb1, bb2 or alt");
  sol->add_option("--out", so.out, "summary CSV");
  sol->add_option("--log", so.log, "per-iteration CSV");
  sol->add_option("--timing", so.timing, "wall time CSV");
  sol->add_option("--point-out", so.point_out, "final point CSV");

  Bench be;
  auto* ben = app.add_subcommand("bench", "solve sweep over instances and kinds");
  ben->add_option("--instances", be.instances)->required();
  ben->add_option("--kinds", be.kinds);
  ben->add_option("--repeats", be.repeats);
  ben->add_option("--r", be.r);
  ben->add_option("--tol", be.tol);
  ben->add_option("--max-outer", be.max_outer);
  ben->add_option("--out", be.out);
  ben->add_option("--timing", be.timing);

  Project pr;
  auto* pro = app.add_subcommand("project", "map an ambient point onto the manifold");
  pro->add_option("--instance", pr.instance)->required();
  pro->add_option("--method", pr.method, "retraction kind or gwa / gwa-newton");
  pro->add_option("--input-point", pr.input, "CSV matrix N x r")->required();
  pro->add_option("--r", pr.r);
  pro->add_option("--tol", pr.tol);
  pro->add_option("--maxiter", pr.maxiter);
  pro->add_option("--out", pr.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) return do_gen_qkp(gq, out);
    if (*ver) return do_verify_order(vo, out);
    if (*sol) return do_solve(so, out);
    if (*ben) return do_bench(be, out, err);
    if (*pro) return do_project(pr, out, err);
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::MalformedFile:
      case ErrorKind::AsymmetricMatrix:
      case ErrorKind::InvalidArgument:
      case ErrorKind::DimensionMismatch:
        return 1;
      default:
        return 2;
    }
  }
  return 1;
}

int run(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace isect::cli
