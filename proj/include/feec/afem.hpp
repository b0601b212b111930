// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_AFEM_HPP
#define FEEC_AFEM_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "feec/estimators.hpp"
#include "feec/refine.hpp"
#include "feec/solvers.hpp"

namespace feec
{

enum class EstimatorKind
{
  Residual,
  ResidualRobust,
  LocalImplicit
};

inline EstimatorKind ParseEstimator(const std::string &s)
{
  if (s == "residual")
  {
    return EstimatorKind::Residual;
  }
  if (s == "residual-robust")
  {
    return EstimatorKind::ResidualRobust;
  }
  if (s == "local-implicit")
  {
    return EstimatorKind::LocalImplicit;
  }
  throw Error("unknown estimator: " + s);
}

enum class SolverKind
{
  Direct,
  Jacobi,  // CG or MINRES with diagonal preconditioning
  Hx       // CG with the auxiliary space preconditioner
};

inline SolverKind ParseSolver(const std::string &s)
{
  if (s == "direct")
  {
    return SolverKind::Direct;
  }
  if (s == "jacobi")
  {
    return SolverKind::Jacobi;
  }
  if (s == "hx")
  {
    return SolverKind::Hx;
  }
  throw Error("unknown solver: " + s);
}

// A solved discrete problem. Spaces live on the heap so fields stay valid
// when the object moves.
template <int Dim>
struct Discretization
{
  std::unique_ptr<ProblemSpaces<Dim>> spaces;
  LinearSystem system;
  Vector x;
  DiscreteField<Dim> u, sigma;
  SolveReport report;

  bool mixed() const { return spaces->has_sigma; }
  int ndofs() const { return static_cast<int>(system.A.rows()); }
  double galerkin_residual() const { return GalerkinResidual(system, x); }
};

template <int Dim>
Discretization<Dim> SolveProblem(const ProblemSpec<Dim> &p, const SimplicialMesh<Dim> &mesh,
                                 SolverKind solver = SolverKind::Direct, double tol = 1e-10,
                                 int maxit = 20000, int direct_cap = kDirectSolveCap)
{
  Discretization<Dim> D;
  D.spaces = std::make_unique<ProblemSpaces<Dim>>(MakeProblemSpaces(mesh, p));
  D.system = AssembleProblem(p, *D.spaces);
  const auto &A = D.system.A;
  const auto &b = D.system.b;
  switch (solver)
  {
    case SolverKind::Direct:
      D.x = SolveDirect(A, b, &D.report, direct_cap);
      break;
    case SolverKind::Jacobi:
      D.x = D.system.saddle() ? SolveMinres(A, b, JacobiPreconditioner(A), tol, maxit, D.report, "jacobi")
                              : SolveCG(A, b, JacobiPreconditioner(A), tol, maxit, D.report, "jacobi");
      break;
    case SolverKind::Hx:
    {
      HxPreconditioner<Dim> hx(p, *D.spaces, A);
      D.x = SolveCG(A, b, hx.as_function(), tol, maxit, D.report, "hx");
      break;
    }
  }
  auto full = D.system.expand(D.x);
  if (D.spaces->has_sigma)
  {
    D.sigma = DiscreteField<Dim>(D.spaces->sigma, std::move(full[0]));
    D.u = DiscreteField<Dim>(D.spaces->trial, std::move(full[1]));
  }
  else
  {
    D.u = DiscreteField<Dim>(D.spaces->trial, std::move(full[0]));
  }
  return D;
}

struct TrueError
{
  double total = 0.0;
  double sigma = 0.0;  // mixed problems only
  double u = 0.0;
};

// eps |d(u - u_h)|^2 + kappa |u - u_h|^2 (H(d)), or the V^{k-1} x V^k pair
// for the Hodge Laplacian, by order-6 quadrature.
template <int Dim>
TrueError ComputeTrueError(const ProblemSpec<Dim> &p, const Discretization<Dim> &D,
                           int degree = kErrorOrder)
{
  if (!p.u_exact)
  {
    throw Error("true_error: no manufactured solution");
  }
  const auto &mesh = D.u.space->mesh();
  const auto &rule = GetSimplexRule(Dim, degree);
  const bool mixed = p.kind == ProblemKind::HodgeLaplacian;
  const bool use_du = p.k < Dim;
  if (use_du && !p.u_exact->has_d())
  {
    throw Error("true_error: manufactured solution lacks d u");
  }
  if (mixed && (!p.sigma_exact || !p.sigma_exact->has_d()))
  {
    throw Error("true_error: manufactured sigma (with d sigma) required");
  }
  double eu = 0.0, es = 0.0;
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    const auto &geo = mesh.cell_geometry(c);
    const double eps = mixed ? 1.0 : p.eps(mesh, c);
    const double kappa = mixed ? 1.0 : p.kappa(mesh, c);
    const Proxy du_h = use_du ? D.u.derivative(c) : Proxy();
    Proxy ds_h;
    if (mixed)
    {
      ds_h = D.sigma.derivative(c);
    }
    double cu = 0.0, cs = 0.0;
    for (int q = 0; q < rule.size(); q++)
    {
      const Point<Dim> x = geo.map(rule.bary[q]);
      double v = kappa * ((*p.u_exact)(x) - D.u.evaluate(c, rule.bary[q])).squaredNorm();
      if (use_du)
      {
        v += eps * (p.u_exact->d(x) - du_h).squaredNorm();
      }
      cu += rule.w[q] * v;
      if (mixed)
      {
        cs += rule.w[q] * (((*p.sigma_exact)(x) - D.sigma.evaluate(c, rule.bary[q])).squaredNorm() +
                           (p.sigma_exact->d(x) - ds_h).squaredNorm());
      }
    }
    eu += cu * geo.volume;
    es += cs * geo.volume;
  }
  return {std::sqrt(eu + es), std::sqrt(es), std::sqrt(eu)};
}

// Error against a solution on the mesh refined uniformly twice more
// (approximate true error when no closed form exists).
template <int Dim>
TrueError ReferenceError(const ProblemSpec<Dim> &p, const SimplicialMesh<Dim> &mesh,
                         const Discretization<Dim> &D, int direct_cap = kDirectSolveCap,
                         int degree = kErrorOrder)
{
  if (p.kind == ProblemKind::HodgeLaplacian)
  {
    throw Error("reference error: only implemented for H(d) problems");
  }
  auto fine1 = BisectAll(mesh);
  auto fine = BisectAll(fine1);
  const auto F = SolveProblem(p, fine, SolverKind::Direct, 1e-10, 20000, direct_cap);
  const auto &rule = GetSimplexRule(Dim, degree);
  double e = 0.0;
  for (int c = 0; c < fine.num_cells(); c++)
  {
    const int coarse = fine1.parent(fine.parent(c));
    const auto &geo = fine.cell_geometry(c);
    const double eps = p.eps(fine, c);
    const double kappa = p.kappa(fine, c);
    double s = 0.0;
    for (int q = 0; q < rule.size(); q++)
    {
      const Point<Dim> x = geo.map(rule.bary[q]);
      s += rule.w[q] * kappa * (F.u.evaluate(c, rule.bary[q]) - D.u.evaluate_at(coarse, x)).squaredNorm();
    }
    if (p.k < Dim)
    {
      s += eps * (F.u.derivative(c) - D.u.derivative(coarse)).squaredNorm();
    }
    e += s * geo.volume;
  }
  const double t = std::sqrt(e);
  return {t, 0.0, t};
}

template <int Dim>
EstimatorReport Estimate(const ProblemSpec<Dim> &p, const Discretization<Dim> &D, EstimatorKind kind)
{
  switch (kind)
  {
    case EstimatorKind::Residual:
      return p.kind == ProblemKind::HodgeLaplacian ? HodgeResidualEstimator(p, D.sigma, D.u)
                                                   : HdResidualEstimator(p, D.u, WeightMode::Standard);
    case EstimatorKind::ResidualRobust:
      if (p.kind == ProblemKind::HodgeLaplacian)
      {
        throw Error("residual-robust estimator applies to H(d) problems only");
      }
      return HdResidualEstimator(p, D.u, WeightMode::Robust);
    case EstimatorKind::LocalImplicit:
      return LocalImplicitEstimator(p, D.u, D.mixed() ? &D.sigma : nullptr).report;
  }
  throw Error("unknown estimator");
}

// Minimal set of cells carrying theta^2 of the squared indicator sum;
// descending order with ties broken by cell id.
inline std::vector<int> DorflerMark(const std::vector<double> &indicators, double theta)
{
  if (!(theta > 0.0) || theta > 1.0)
  {
    throw Error("dorfler_mark: theta must lie in (0, 1]");
  }
  double total = 0.0;
  for (double v : indicators)
  {
    if (!(v >= 0.0))
    {
      throw Error("dorfler_mark: negative or NaN indicator");
    }
    total += v * v;
  }
  std::vector<int> marked;
  if (total == 0.0)
  {
    return marked;
  }
  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return indicators[a] > indicators[b]; });
  const double target = theta * theta * total;
  double acc = 0.0;
  for (int c : order)
  {
    if (indicators[c] == 0.0)
    {
      break;
    }
    marked.push_back(c);
    acc += indicators[c] * indicators[c];
    if (acc >= target * (1.0 - 1e-14))
    {
      break;
    }
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

inline std::vector<int> DorflerMark(const EstimatorReport &r, double theta)
{
  return DorflerMark(r.marking_indicators(), theta);
}

enum class ReferenceMode
{
  None,
  Exact,
  Finer  // two uniform refinements, flagged approx
};

struct AfemOptions
{
  EstimatorKind estimator = EstimatorKind::Residual;
  SolverKind solver = SolverKind::Direct;
  int direct_cap = kDirectSolveCap;
  double theta = 0.5;
  int max_iters = 10;
  int max_dofs = 0;  // 0 = no limit
  double tol = 0.0;  // stop when eta <= tol
  bool uniform = false;
  bool timing = false;  // record wall time; off keeps CSVs bitwise reproducible
  ReferenceMode reference = ReferenceMode::Exact;
};

struct AfemRow
{
  int iter = 0;
  int ndofs = 0;
  int ncells = 0;
  int marked = 0;
  double eta = 0.0;
  double osc = 0.0;
  std::optional<TrueError> error;
  double effectivity = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double seconds = 0.0;
  double galerkin = 0.0;
  double rhs_norm = 0.0;
};

struct AfemHistory
{
  bool mixed = false;
  bool approx = false;
  double theta = 0.5;
  std::vector<AfemRow> rows;
};

template <int Dim>
struct AfemResult
{
  AfemHistory history;
  SimplicialMesh<Dim> final_mesh;
  EstimatorReport final_report;
};

inline constexpr int kMaxStalledRefinements = 50;

template <int Dim>
AfemResult<Dim> AfemLoop(const ProblemSpec<Dim> &p, SimplicialMesh<Dim> mesh, const AfemOptions &opt)
{
  if (!(opt.theta > 0.0) || opt.theta > 1.0)
  {
    throw Error("afem: theta must lie in (0, 1]");
  }
  if (opt.max_iters < 1)
  {
    throw Error("afem: max_iters must be positive");
  }
  AfemResult<Dim> res;
  res.history.mixed = p.kind == ProblemKind::HodgeLaplacian;
  res.history.theta = opt.theta;
  ReferenceMode ref = opt.reference;
  if (ref == ReferenceMode::Exact && !p.u_exact)
  {
    ref = ReferenceMode::None;
  }
  res.history.approx = ref == ReferenceMode::Finer;
  int last_dofs = -1, stalled = 0;
  for (int it = 1;; it++)
  {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string audit = mesh.audit();
    if (!audit.empty())
    {
      throw Error("afem: mesh audit failed: " + audit);
    }
    auto D = SolveProblem(p, mesh, opt.solver, 1e-10, 20000, opt.direct_cap);
    AfemRow row;
    row.iter = it;
    row.ndofs = D.ndofs();
    row.ncells = mesh.num_cells();
    row.iterations = D.report.iterations;
    row.galerkin = D.galerkin_residual();
    row.rhs_norm = D.system.b.norm();
    auto rep = Estimate(p, D, opt.estimator);
    if (row.ndofs <= last_dofs)
    {
      // Refinement touched only constrained entities, so the discrete space
      // did not grow. Refine again before recording the next row.
      if (++stalled > kMaxStalledRefinements)
      {
        throw Error("afem: number of DOFs did not increase");
      }
      const auto marked = opt.uniform ? std::vector<int>() : DorflerMark(rep, opt.theta);
      mesh = marked.empty() ? BisectAll(mesh) : Bisect(mesh, marked);
      it--;
      continue;
    }
    stalled = 0;
    last_dofs = row.ndofs;
    row.eta = rep.eta;
    row.osc = rep.osc;
    if (ref == ReferenceMode::Exact)
    {
      row.error = ComputeTrueError(p, D);
    }
    else if (ref == ReferenceMode::Finer)
    {
      row.error = ReferenceError(p, mesh, D, opt.direct_cap);
    }
    if (row.error)
    {
      row.effectivity = row.error->total > 0.0 ? row.eta / row.error->total
                                               : std::numeric_limits<double>::infinity();
    }
    const bool stop = it >= opt.max_iters || (opt.tol > 0.0 && rep.eta <= opt.tol) ||
                      (opt.max_dofs > 0 && row.ndofs >= opt.max_dofs);
    std::vector<int> marked;
    if (!stop)
    {
      if (opt.uniform)
      {
        marked.resize(mesh.num_cells());
        std::iota(marked.begin(), marked.end(), 0);
      }
      else
      {
        marked = DorflerMark(rep, opt.theta);
      }
      row.marked = static_cast<int>(marked.size());
    }
    if (opt.timing)
    {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    res.history.rows.push_back(row);
    if (stop || marked.empty())
    {
      res.final_report = std::move(rep);
      break;
    }
    mesh = Bisect(mesh, marked);
  }
  res.final_mesh = std::move(mesh);
  return res;
}

struct EffectivitySummary
{
  std::vector<double> values;
  double min = 0.0, max = 0.0;
  bool infinite = false;
  double ratio() const { return infinite ? std::numeric_limits<double>::infinity() : max / min; }
};

inline EffectivitySummary Effectivity(const AfemHistory &h)
{
  EffectivitySummary s;
  for (const auto &r : h.rows)
  {
    if (!r.error)
    {
      throw Error("effectivity: history has no true errors");
    }
    const double e = r.error->total > 0.0 ? r.eta / r.error->total : std::numeric_limits<double>::infinity();
    s.infinite = s.infinite || !std::isfinite(e) || e <= 0.0;
    s.values.push_back(e);
  }
  if (!s.values.empty())
  {
    s.min = *std::min_element(s.values.begin(), s.values.end());
    s.max = *std::max_element(s.values.begin(), s.values.end());
  }
  return s;
}

inline void WriteHistoryCsv(std::ostream &os, const AfemHistory &h)
{
  os << "iter,ndofs,eta,osc,err_total";
  if (h.mixed)
  {
    os << ",err_sigma,err_u";
  }
  os << ",effectivity,iters,seconds";
  if (h.approx)
  {
    os << ",approx";
  }
  os << "\n";
  for (const auto &r : h.rows)
  {
    os << r.iter << "," << r.ndofs << "," << FormatDouble(r.eta) << "," << FormatDouble(r.osc) << ",";
    if (r.error)
    {
      os << FormatDouble(r.error->total);
      if (h.mixed)
      {
        os << "," << FormatDouble(r.error->sigma) << "," << FormatDouble(r.error->u);
      }
      os << "," << FormatDouble(r.effectivity);
    }
    else
    {
      os << (h.mixed ? ",," : "") << ",";
    }
    os << "," << r.iterations << "," << FormatDouble(r.seconds);
    if (h.approx)
    {
      os << ",1";
    }
    os << "\n";
  }
}

}  // namespace feec

#endif  // FEEC_AFEM_HPP
