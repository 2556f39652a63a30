#include "isect/problems.hpp"

#include "isect/format.hpp"
#include "isect/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace isect {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_number(const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedFile, "not a number: '" + tok + "'");
  }
}

Matrix symmetrized(const Matrix& X, const char* name) {
  const double asym = (X - X.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9) {
    std::ostringstream os;
    os << name << " is asymmetric (max |X - X^T| = " << asym << ")";
    throw Error(ErrorKind::AsymmetricMatrix, os.str());
  }
  return 0.5 * (X + X.transpose());
}

ProblemInstance make_instance(Matrix Aprime, Vector bprime, Index n, Matrix Qlift, ProblemMeta meta,
                              Index r) {
  if (r <= 0) r = initial_rank(n);
  std::vector<Index> B(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) B[static_cast<std::size_t>(i)] = i;
  IntersectionManifold M = [&] {
    try {
      return IntersectionManifold(std::move(Aprime), std::move(bprime), std::move(B), r);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SingularGram) {
        throw Error(ErrorKind::RankDeficient, "lifted constraint matrix is rank deficient: " +
                                                  std::string(e.what()));
      }
      throw;
    }
  }();
  meta.r = r;
  const Index N = M.dims().N;
  return ProblemInstance{std::move(M), std::move(Qlift), Vector::Zero(N), std::move(meta)};
}

}  // namespace

Index initial_rank(Index n) {
  require(n >= 1, ErrorKind::InvalidArgument, "initial_rank needs n >= 1");
  return std::min<Index>(200, (n + 4) / 5);
}

QapInstance parse_qaplib(const std::string& text, std::string name) {
  const auto toks = tokenize(text);
  require(!toks.empty(), ErrorKind::MalformedFile, "empty QAPLib stream");
  const double pd = to_number(toks[0]);
  require(pd >= 2 && pd == std::floor(pd), ErrorKind::MalformedFile,
          "QAPLib size must be an integer >= 2");
  const auto p = static_cast<Index>(pd);
  const std::size_t expected = 1 + 2 * static_cast<std::size_t>(p * p);
  if (toks.size() != expected) {
    std::ostringstream os;
    os << "expected " << expected << " tokens for p = " << p << ", found " << toks.size();
    throw Error(ErrorKind::MalformedFile, os.str());
  }
  QapInstance inst;
  inst.p = p;
  inst.name = std::move(name);
  inst.W.resize(p, p);
  inst.D.resize(p, p);
  std::size_t t = 1;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) inst.W(i, j) = to_number(toks[t++]);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) inst.D(i, j) = to_number(toks[t++]);
  inst.W = symmetrized(inst.W, "W");
  inst.D = symmetrized(inst.D, "D");
  return inst;
}

ProblemInstance lift_qap(const QapInstance& inst, Index r) {
  const Index p = inst.p;
  require(p >= 2, ErrorKind::InvalidArgument, "QAP needs p >= 2");
  const Index n = p * p;
  const Index m = 2 * p;
  const Index N = n + 2 * m;

  // (D (x) W)_{(i1 + j1 p), (i2 + j2 p)} = D(j1, j2) W(i1, i2)
  Matrix Qlift = Matrix::Zero(N, N);
  for (Index j1 = 0; j1 < p; ++j1)
    for (Index j2 = 0; j2 < p; ++j2) Qlift.block(j1 * p, j2 * p, p, p) = inst.D(j1, j2) * inst.W;

  Matrix A = Matrix::Zero(m, n);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      A(i, i + j * p) = 1.0;      // row sums: e^T (x) I
      A(p + j, i + j * p) = 1.0;  // column sums: I (x) e^T
    }
  }
  Matrix Aprime = Matrix::Zero(2 * m, N);
  Aprime.block(0, 0, m, n) = A;
  Aprime.block(m, 0, m, n) = A;
  Aprime.block(0, n, m, m) = Matrix::Identity(m, m);
  Aprime.block(m, n + m, m, m) = -Matrix::Identity(m, m);

  ProblemMeta meta;
  meta.kind = ProblemKind::QAP;
  meta.name = inst.name;
  meta.n = n;
  meta.p = p;
  return make_instance(std::move(Aprime), Vector::Ones(2 * m), n, std::move(Qlift), std::move(meta),
                       r);
}

QkpInstance gen_qkp(Index n, double density, std::uint64_t seed) {
  require(n >= 2, ErrorKind::InvalidArgument, "QKP needs n >= 2");
  require(density > 0.0 && density <= 1.0, ErrorKind::InvalidArgument,
          "density must lie in (0, 1]");
  Xoshiro256 rng(seed);
  QkpInstance inst;
  inst.n = n;
  inst.density = density;
  inst.seed = seed;
  inst.Q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      if (rng.bernoulli(density)) {
        const auto v = static_cast<double>(rng.uniform_int(1, 100));
        inst.Q(i, j) = v;
        inst.Q(j, i) = v;
      }
    }
  }
  inst.a.resize(n);
  for (Index i = 0; i < n; ++i) inst.a(i) = static_cast<double>(rng.uniform_int(1, 50));
  inst.tau = 0.9 * inst.a.sum();
  return inst;
}

ProblemInstance lift_qkp(const QkpInstance& inst, Index r) {
  const Index n = inst.n;
  const Index N = n + 2;
  Matrix Aprime = Matrix::Zero(2, N);
  Aprime.block(0, 0, 1, n) = inst.a.transpose();
  Aprime.block(1, 0, 1, n) = inst.a.transpose();
  Aprime(0, n) = 1.0;
  Aprime(1, n + 1) = -1.0;
  Matrix Qlift = Matrix::Zero(N, N);
  Qlift.topLeftCorner(n, n) = -inst.Q;

  ProblemMeta meta;
  meta.kind = ProblemKind::QKP;
  meta.seed = inst.seed;
  meta.n = n;
  meta.negated = true;
  meta.tau = inst.tau;
  {
    std::ostringstream os;
    os << "qkp-" << n << "-" << format_double(inst.density) << "-" << inst.seed;
    meta.name = os.str();
  }
  return make_instance(std::move(Aprime), Vector::Constant(2, inst.tau), n, std::move(Qlift),
                       std::move(meta), r);
}

std::string write_qkp(const QkpInstance& inst) {
  std::ostringstream os;
  os << "qkp v1 " << inst.n << " " << format_double(inst.density) << " " << inst.seed << "\n";
  for (Index i = 0; i < inst.n; ++i) {
    for (Index j = i; j < inst.n; ++j) {
      os << static_cast<long long>(inst.Q(i, j)) << (j + 1 < inst.n ? " " : "");
    }
    os << "\n";
  }
  for (Index i = 0; i < inst.n; ++i) {
    os << static_cast<long long>(inst.a(i)) << (i + 1 < inst.n ? " " : "");
  }
  os << "\n" << format_double(inst.tau) << "\n";
  return os.str();
}

QkpInstance parse_qkp(const std::string& text) {
  const auto toks = tokenize(text);
  require(toks.size() >= 5 && toks[0] == "qkp" && toks[1] == "v1", ErrorKind::MalformedFile,
          "missing 'qkp v1' header");
  QkpInstance inst;
  const double nd = to_number(toks[2]);
  require(nd >= 2 && nd == std::floor(nd), ErrorKind::MalformedFile, "bad n in qkp header");
  inst.n = static_cast<Index>(nd);
  inst.density = to_number(toks[3]);
  try {
    std::size_t pos = 0;
    inst.seed = std::stoull(toks[4], &pos);
    if (pos != toks[4].size()) throw std::invalid_argument(toks[4]);
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedFile, "bad seed in qkp header");
  }
  const Index n = inst.n;
  const std::size_t expected =
      5 + static_cast<std::size_t>(n * (n + 1) / 2) + static_cast<std::size_t>(n) + 1;
  if (toks.size() != expected) {
    std::ostringstream os;
    os << "expected " << expected << " tokens for n = " << n << ", found " << toks.size();
    throw Error(ErrorKind::MalformedFile, os.str());
  }
  std::size_t t = 5;
  inst.Q = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double v = to_number(toks[t++]);
      inst.Q(i, j) = v;
      inst.Q(j, i) = v;
    }
  }
  inst.a.resize(n);
  for (Index i = 0; i < n; ++i) inst.a(i) = to_number(toks[t++]);
  inst.tau = to_number(toks[t++]);
  return inst;
}

ProblemInstance load_instance(const std::string& path, Index r) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::MalformedFile, "cannot open instance file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::istringstream head(text);
  std::string first;
  head >> first;
  if (first == "qkp") return lift_qkp(parse_qkp(text), r);
  return lift_qap(parse_qaplib(text, std::filesystem::path(path).stem().string()), r);
}

Matrix feasible_init(const ProblemInstance& inst) {
  const auto& d = inst.manifold.dims();
  Matrix R = Matrix::Zero(d.N, d.r);
  if (inst.meta.kind == ProblemKind::QKP) {
    const Index n = inst.meta.n;
    R(n, 0) = inst.meta.tau;
    R(n + 1, 0) = -inst.meta.tau;
  } else {
    const Index p = inst.meta.p;
    for (Index i = 0; i < p; ++i) R(i + i * p, 0) = 1.0;
  }
  return R;
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  Matrix X(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) X(i, j) = rng.normal();
  return X;
}

Matrix random_feasible_point(const ProblemInstance& inst, std::uint64_t seed) {
  return random_feasible_point(inst.manifold, seed);
}

Matrix random_feasible_point(const IntersectionManifold& M, std::uint64_t seed) {
  const auto& d = M.dims();
  const Matrix G = random_matrix(d.N, d.r, seed);
  Matrix R = Matrix::Zero(d.N, d.r);
  std::vector<char> is_binary(static_cast<std::size_t>(d.N), 0);
  for (const Index i : M.binary_rows()) {
    is_binary[static_cast<std::size_t>(i)] = 1;
    R.row(i) = 0.5 * G.row(i) / G.row(i).norm();
    R(i, 0) += 0.5;
  }
  std::vector<Index> free_rows;
  for (Index i = 0; i < d.N; ++i)
    if (!is_binary[static_cast<std::size_t>(i)]) free_rows.push_back(i);
  require(!free_rows.empty(), ErrorKind::RankDeficient, "no free rows to absorb the affine system");

  const Matrix& A = M.affine().A();
  Matrix Af(d.m_rows, static_cast<Index>(free_rows.size()));
  for (Index k = 0; k < Af.cols(); ++k) Af.col(k) = A.col(free_rows[static_cast<std::size_t>(k)]);
  Matrix rhs = -A * R;
  rhs.col(0) += M.affine().b();
  const Matrix sol = Af.completeOrthogonalDecomposition().solve(rhs);
  for (Index k = 0; k < Af.cols(); ++k) R.row(free_rows[static_cast<std::size_t>(k)]) = sol.row(k);
  require(affine_residual(M, R).norm() <= 1e-10 * scale_of(R), ErrorKind::RankDeficient,
          "free rows cannot absorb the affine system");
  return R;
}

}  // namespace isect
