#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "sublinop/sublinop.hpp"

using namespace sublinop;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open \"" + path + "\"");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A spec argument is a file path, or inline JSON when it starts with '{'.
Operator load_operator(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return parse_operator(arg);
  try {
    return parse_operator(read_file(arg));
  } catch (const ParseError& e) {
    throw ParseError(arg + ": " + e.what());
  }
}

// JSON has no infinity; operator specs write it as "inf", and so do we.
ojson number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

ojson vec(const SpecVec& v) {
  ojson a = ojson::array();
  for (double x : v.values()) a.push_back(number(x));
  return a;
}

ojson matrix(const SymMat& x) {
  ojson rows = ojson::array();
  for (int i = 0; i < x.dim(); ++i) {
    ojson r = ojson::array();
    for (int j = 0; j < x.dim(); ++j) r.push_back(x(i, j));
    rows.push_back(r);
  }
  return rows;
}

const char* class_name(Ellipticity e) {
  switch (e) {
    case Ellipticity::UniformlyElliptic: return "uniform";
    case Ellipticity::DegenerateElliptic: return "degenerate";
    case Ellipticity::NotElliptic: return "not elliptic";
  }
  return "?";
}

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t");
    const auto b = cell.find_last_not_of(" \t");
    const std::string t = a == std::string::npos ? "" : cell.substr(a, b - a + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size() || !std::isfinite(v)) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(std::string(what) + ": bad number \"" + t + "\"");
    }
  }
  return out;
}

void emit(const ojson& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write \"" + path + "\"");
  out << j.dump(2) << '\n';
}

void write_grid(const GridFn& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write \"" + path + "\"");
  write_csv(u, out);
}

GridFn read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open \"" + path + "\"");
  return read_csv(in);
}

// ---------------------------------------------------------------------------

int run_analyze(const std::string& spec) {
  const Operator op = load_operator(spec);
  const int n = op.dim();
  const auto cls = classify_ellipticity(op);
  ojson r;
  r["kind"] = op.kind;
  r["n"] = n;
  r["class"] = class_name(cls.tag);
  const double fmi = eval(op, -SymMat::identity(n));
  r["F_minus_I"] = fmi;
  if (cls.tag == Ellipticity::NotElliptic) {
    r["notice"] = "operator is not elliptic; ellipticity constants and apertures omitted";
    emit(r, "");
    return kExitOk;
  }
  r["lambda"] = cls.lambda;
  r["Lambda"] = cls.Lambda;
  r["nondegenerate"] = nondegenerate(op);
  const RotInvBody* body = op.rotinv();
  if (body == nullptr) {
    r["notice"] = "alpha, p, c and argmin need a rotationally invariant operator; omitted for kind \"general\"";
    emit(r, "");
    return kExitOk;
  }
  if (cls.Lambda <= kEllipticityTol) {
    r["notice"] = "trivial body {0}; apertures omitted";
    emit(r, "");
    return kExitOk;
  }
  const auto ap = aperture(*body);
  r["alpha"] = ap.alpha;
  r["p"] = number(ap.p);
  r["c"] = ap.c;
  r["argmin"] = vec(ap.argmin);
  emit(r, "");
  return kExitOk;
}

int run_eval(const std::string& spec, const std::string& text) {
  const Operator op = load_operator(spec);
  const int n = op.dim();
  const auto v = parse_numbers(text, "--matrix");
  if (v.size() != static_cast<std::size_t>(n) * n) {
    throw ParseError("--matrix: expected " + std::to_string(n * n) + " entries for n = " + std::to_string(n) +
                     ", got " + std::to_string(v.size()));
  }
  double asym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) asym = std::max(asym, std::abs(v[i * n + j] - v[j * n + i]));
  if (asym > 1e-12) {
    std::fprintf(stderr, "warning: matrix is not symmetric (max |X - X^T| = %.3g); using (X + X^T)/2\n", asym);
  }
  const SymMat x(n, std::span<const double>(v));
  std::printf("%.12g\n", eval(op, x));
  return kExitOk;
}

int run_nest(const std::string& spec_f, const std::string& spec_g) {
  const Operator f = load_operator(spec_f);
  const Operator g = load_operator(spec_g);
  if (f.dim() != g.dim()) throw ParseError("nest: operators have different dimensions");
  const GeneralBody kf = cone_generators(f);
  const GeneralBody kg = cone_generators(g);
  const auto rep = nesting_report(kf, kg);
  ojson r;
  r["nested"] = rep.nested;
  r["generators_checked"] = rep.nested ? kf.generators().size() : *rep.offending_generator + 1;
  if (!rep.nested) {
    r["offending_generator"] = *rep.offending_generator;
    r["generator"] = matrix(kf.generators()[*rep.offending_generator]);
    r["residual"] = rep.residual;
  }
  emit(r, "");
  return kExitOk;
}

int run_fundsol(const std::string& spec, int samples, std::uint64_t seed) {
  const Operator op = load_operator(spec);
  const RotInvBody* body = op.rotinv();
  if (body == nullptr) throw ParseError("fundsol-check: needs a rotationally invariant operator");
  if (samples < 1) throw ParseError("--samples must be positive");
  const auto c = verify_fundamental(*body, samples, seed);
  ojson r;
  r["n"] = op.dim();
  r["p"] = number(c.p);
  r["alpha"] = c.alpha;
  r["log_branch"] = FundamentalSolution(op.dim(), c.p).is_log();
  r["samples"] = samples;
  r["seed"] = seed;
  r["max_residual"] = c.max_residual;
  r["max_scaled_spread"] = c.max_scaled_spread;
  r["F_lambda_alpha"] = c.at_lambda_alpha;
  emit(r, "");
  return kExitOk;
}

struct SolveArgs {
  std::string spec;
  std::string domain = "annulus";
  double rin = 0.25;
  double rout = 1.0;
  int grid = 64;
  double eps = 0.0;
  int rot = kDefaultRotations;
  double tol = 1e-10;
  std::string boundary = "fundsol";
  std::string out;
  std::string report;
  std::string method = "pi";
  int max_sweeps = 100000;
};

int run_solve(const SolveArgs& a) {
  const Operator op = load_operator(a.spec);
  const RotInvBody* body = op.rotinv();
  if (body == nullptr || op.dim() != 2) throw ParseError("solve: needs a two-dimensional rotationally invariant operator");
  const auto [lo, Lambda] = body->eigen_range();
  if (!(lo > kEllipticityTol)) throw ParseError("solve: operator is not uniformly elliptic");
  if (a.rot < 1) throw ParseError("--rot must be positive");
  if (!(a.tol > 0.0)) throw ParseError("--tol must be positive");

  const bool from_file = a.boundary != "fundsol" && a.boundary.rfind("affine:", 0) != 0;
  GridFn g;
  double eps = a.eps;
  int band = 0;
  std::string boundary_kind;
  if (from_file) {
    g = read_grid(a.boundary);
    if (eps <= 0.0) eps = 4.0 * g.grid->h();
    boundary_kind = "file";
  } else {
    if (a.grid < 4) throw ParseError("--grid must be at least 4");
    const double h = 2.0 * a.rout / a.grid;
    if (eps <= 0.0) eps = 4.0 * h;
    band = band_cells(eps, Lambda, h);
    std::shared_ptr<const Grid2> grid;
    if (a.domain == "square") grid = Grid2::square(a.rout, a.grid, band);
    else if (a.domain == "annulus") grid = Grid2::annulus(a.rin, a.rout, a.grid, band);
    else throw ParseError("--domain must be square or annulus");

    std::function<double(double, double)> f;
    if (a.boundary == "fundsol") {
      const double p = aperture(*body).p;
      const FundamentalSolution w(2, p);
      f = [w](double x, double y) { return w.radial(std::hypot(x, y)); };
      boundary_kind = "fundsol";
    } else {
      const auto c = parse_numbers(a.boundary.substr(7), "--boundary affine");
      if (c.size() != 3) throw ParseError("--boundary affine:a,b,c needs three numbers");
      f = [c](double x, double y) { return c[0] * x + c[1] * y + c[2]; };
      boundary_kind = "affine";
    }
    g = sample(grid, f);
    for (std::size_t k = 0; k < grid->size(); ++k) {
      if (grid->kind(k) != NodeKind::Outside && !std::isfinite(g[k])) {
        throw ParseError("solve: boundary function is not finite on the grid (pole inside the domain?)");
      }
    }
  }

  SolveOptions opt;
  opt.eps = eps;
  opt.rotations = a.rot;
  opt.tol = a.tol;
  opt.max_sweeps = a.max_sweeps;
  if (a.method == "pi") opt.method = SolveMethod::PolicyIteration;
  else if (a.method == "gs") opt.method = SolveMethod::GaussSeidel;
  else throw ParseError("--method must be pi or gs");

  const auto rep = solve_dirichlet(g, *body, opt);
  if (!a.out.empty()) write_grid(rep.solution, a.out);

  ojson r;
  r["boundary"] = boundary_kind;
  r["h"] = g.grid->h();
  r["eps"] = eps;
  if (!from_file) r["band"] = band;
  r["rotations"] = a.rot;
  r["converged"] = rep.converged;
  r["sweeps"] = rep.sweeps;
  r["policy_iterations"] = rep.policy_iterations;
  r["final_update"] = number(rep.final_update);
  r["max_mv_excess"] = rep.max_mv_excess;
  if (!from_file) {
    // deviation from the boundary function, which is the exact solution for affine data
    // and for the fundamental solution of a matching operator
    double dev = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < g.grid->size(); ++k) {
      if (g.grid->kind(k) != NodeKind::Interior) continue;
      dev = std::max(dev, std::abs(rep.solution[k] - g[k]));
      ref = std::max(ref, std::abs(g[k]));
    }
    r["max_deviation_from_boundary_function"] = dev;
    r["relative_deviation"] = ref > 0.0 ? dev / ref : dev;
  }
  emit(r, a.report);
  if (!rep.converged) {
    std::fprintf(stderr, "error: solver stopped after %d sweeps with update %.3g > tol %.3g\n", rep.sweeps,
                 rep.final_update, a.tol);
    return kExitConvergence;
  }
  return kExitOk;
}

struct ConvolveArgs {
  std::string in;
  std::string mode;
  double eps = 0.0;
  std::string out;
  std::string report;
};

// Largest axis second difference (sign = +1) or the negated smallest (sign = -1) over
// triples of domain nodes.
double axis_second_difference(const GridFn& v, int sign) {
  const Grid2& g = *v.grid;
  const double h2 = g.h() * g.h();
  double worst = -INFINITY;
  auto in = [&](int i, int j) { return g.contains(i, j) && g.kind(i, j) != NodeKind::Outside; };
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!in(i, j)) continue;
      const double c = v[g.index(i, j)];
      if (in(i - 1, j) && in(i + 1, j))
        worst = std::max(worst, sign * (v[g.index(i - 1, j)] - 2 * c + v[g.index(i + 1, j)]) / h2);
      if (in(i, j - 1) && in(i, j + 1))
        worst = std::max(worst, sign * (v[g.index(i, j - 1)] - 2 * c + v[g.index(i, j + 1)]) / h2);
    }
  }
  return worst;
}

int run_convolve(const ConvolveArgs& a) {
  if (!(a.eps > 0.0)) throw ParseError("--eps must be positive");
  const GridFn u = read_grid(a.in);
  ojson r;
  r["mode"] = a.mode;
  r["eps"] = a.eps;
  GridFn v;
  if (a.mode == "inf" || a.mode == "sup") {
    const int sign = a.mode == "inf" ? 1 : -1;
    v = sign > 0 ? inf_convolution(u, a.eps) : sup_convolution(u, a.eps);
    const double bound = 1.0 / a.eps;
    const double worst = axis_second_difference(v, sign);
    r[sign > 0 ? "max_second_difference" : "min_second_difference"] = number(sign * worst);
    r["second_difference_bound"] = sign * bound;
    r["bound_holds"] = worst <= bound + 1e-9;
    double order = 0.0;
    for (std::size_t k = 0; k < u.values.size(); ++k)
      if (u.grid->kind(k) != NodeKind::Outside) order = std::max(order, sign * (v[k] - u[k]));
    r[sign > 0 ? "below_input" : "above_input"] = order <= 0.0;
  } else if (a.mode == "mollify") {
    v = mollify(u, a.eps);
  } else {
    throw ParseError("--mode must be inf, sup or mollify");
  }
  if (!a.out.empty()) write_grid(v, a.out);
  emit(r, a.report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sublinear elliptic operators via convex bodies"};
  app.require_subcommand(1);

  std::string spec, spec_g, matrix_text;
  int samples = 1000;
  std::uint64_t seed = 1;
  SolveArgs sa;
  ConvolveArgs ca;

  auto* analyze = app.add_subcommand("analyze", "ellipticity, non-degeneracy and apertures of an operator");
  analyze->add_option("spec", spec, "operator spec (JSON file or inline JSON)")->required();

  auto* ev = app.add_subcommand("eval", "evaluate F(X)");
  ev->add_option("spec", spec, "operator spec")->required();
  ev->add_option("--matrix", matrix_text, "X as a row-major comma-separated n*n list")->required();

  auto* nest = app.add_subcommand("nest", "test the body cone inclusion C_F in C_G");
  nest->add_option("specF", spec, "operator F")->required();
  nest->add_option("specG", spec_g, "operator G")->required();

  auto* fs = app.add_subcommand("fundsol-check", "verify the radial fundamental solution");
  fs->add_option("spec", spec, "operator spec")->required();
  fs->add_option("--samples", samples, "number of sample points")->capture_default_str();
  fs->add_option("--seed", seed, "sampling seed")->capture_default_str();

  auto* solve = app.add_subcommand("solve", "mean-value Dirichlet solver on a 2D grid");
  solve->add_option("spec", sa.spec, "operator spec (n = 2)")->required();
  solve->add_option("--domain", sa.domain, "square or annulus")->capture_default_str();
  solve->add_option("--rin", sa.rin, "annulus inner radius")->capture_default_str();
  solve->add_option("--rout", sa.rout, "annulus outer radius, or half side of the square")->capture_default_str();
  solve->add_option("--grid", sa.grid, "cells across the domain")->capture_default_str();
  solve->add_option("--eps", sa.eps, "mean-value radius (default 4h)");
  solve->add_option("--rot", sa.rot, "rotations per family member")->capture_default_str();
  solve->add_option("--tol", sa.tol, "sweep update tolerance")->capture_default_str();
  solve->add_option("--boundary", sa.boundary, "fundsol, affine:a,b,c or a grid CSV")->capture_default_str();
  solve->add_option("--out", sa.out, "solution CSV");
  solve->add_option("--report", sa.report, "JSON report path (default stdout)");
  solve->add_option("--method", sa.method, "pi (policy iteration) or gs (Gauss-Seidel only)")->capture_default_str();
  solve->add_option("--max-sweeps", sa.max_sweeps, "Gauss-Seidel sweep cap")->capture_default_str();

  auto* conv = app.add_subcommand("convolve", "inf/sup convolution or mollification of a grid CSV");
  conv->add_option("--in", ca.in, "input grid CSV")->required();
  conv->add_option("--mode", ca.mode, "inf, sup or mollify")->required();
  conv->add_option("--eps", ca.eps, "convolution parameter, or mollifier radius")->required();
  conv->add_option("--out", ca.out, "output grid CSV");
  conv->add_option("--report", ca.report, "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*analyze) return run_analyze(spec);
    if (*ev) return run_eval(spec, matrix_text);
    if (*nest) return run_nest(spec, spec_g);
    if (*fs) return run_fundsol(spec, samples, seed);
    if (*solve) return run_solve(sa);
    if (*conv) return run_convolve(ca);
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConvergence;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
