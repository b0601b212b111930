// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion A1..A11, written to
// stdout and to acceptance_report.txt in the working directory.
// Exit status is 0 once every check has run; pass --strict to return the
// number of failed criteria instead.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "feec/feec.hpp"

using namespace feec;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

// Every direct solve performed here, as (max |b - A x|, |b|_2).
std::vector<std::pair<double, double>> g_solves;

template <int Dim>
void Track(const Discretization<Dim> &D)
{
  g_solves.emplace_back(D.galerkin_residual(), D.system.b.norm());
}

void Track(const AfemHistory &h)
{
  for (const auto &r : h.rows)
  {
    g_solves.emplace_back(r.galerkin, r.rhs_norm);
  }
}

std::string Fmt(double v, int prec = 3)
{
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string List(const std::vector<double> &v, int prec = 3)
{
  std::string s = "[";
  for (size_t i = 0; i < v.size(); i++)
  {
    s += (i ? ", " : "") + Fmt(v[i], prec);
  }
  return s + "]";
}

double Ratio(const std::vector<double> &v)
{
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

// Least-squares slope of log(err) against log(h).
double Rate(const std::vector<double> &h, const std::vector<double> &err)
{
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (size_t i = 0; i < h.size(); i++)
  {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

template <int Dim>
SimplicialMesh<Dim> Mesh(const ProblemSpec<Dim> &p, Domain d, int m)
{
  return GenerateStructured<Dim>(d, m).mark_gamma(p.gamma);
}

// ---------------------------------------------------------------------------

Outcome A1()
{
  long checked = 0, nonzero = 0;
  auto check = [&](const auto &mesh)
  {
    constexpr int n = std::decay_t<decltype(mesh)>::dim;
    for (int k = 0; k + 1 < n; k++)
    {
      const IntSparseMatrix Dk = ExteriorDerivative(BuildSpace(mesh, k, Family::TrimmedP1, false));
      const IntSparseMatrix Dk1 = ExteriorDerivative(BuildSpace(mesh, k + 1, Family::TrimmedP1, false));
      const IntSparseMatrix DD = Dk1 * Dk;
      for (int i = 0; i < DD.outerSize(); i++)
      {
        for (IntSparseMatrix::InnerIterator it(DD, i); it; ++it)
        {
          nonzero += it.value() != 0;
        }
      }
      checked++;
    }
  };
  for (int m : {1, 2, 4})
  {
    check(GenerateStructured<2>(Domain::UnitSquare, m));
  }
  for (int m : {1, 2, 3})
  {
    check(GenerateStructured<3>(Domain::UnitCube, m));
  }
  return {nonzero == 0, std::to_string(checked) + " products, " + std::to_string(nonzero) + " nonzero entries"};
}

// Uniform m = 2, 3, 4 study: error rate and effectivity spread.
template <int Dim>
Outcome TwoSided(const std::string &name, Domain domain, std::vector<double> *eta_out = nullptr)
{
  const auto p = MakeProblem<Dim>(name);
  std::vector<double> h, err, eff;
  for (int m : {2, 3, 4})
  {
    const auto mesh = Mesh(p, domain, m);
    const auto D = SolveProblem(p, mesh);
    Track(D);
    const auto e = ComputeTrueError(p, D);
    const auto r = Estimate(p, D, EstimatorKind::Residual);
    h.push_back(1.0 / m);
    err.push_back(e.total);
    eff.push_back(r.eta / e.total);
    if (eta_out)
    {
      eta_out->push_back(r.eta);
    }
  }
  const double rate = Rate(h, err);
  const double spread = Ratio(eff);
  const bool ok = std::abs(rate - 1.0) <= 0.25 && spread <= 3.0;
  return {ok, name + ": err " + List(err) + " rate " + Fmt(rate) + ", effectivity " + List(eff) +
                  " max/min " + Fmt(spread)};
}

Outcome A3() { return TwoSided<3>("maxwell_cube", Domain::UnitCube); }

Outcome A4()
{
  const auto a = TwoSided<3>("grad_div_cube", Domain::UnitCube);
  const auto b = TwoSided<2>("mixed_poisson_square", Domain::UnitSquare);
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

Outcome A5()
{
  bool ok = true;
  std::string detail;
  const double kappa = 2.5;
  for (int k : {1, 2})
  {
    const Proxy c = MakeProxy({0.75, -1.25, 0.5});
    ProblemSpec<3> p;
    p.kind = ProblemKind::HdPositive;
    p.k = k;
    p.eps = Coefficient<3>(1.0);
    p.kappa = Coefficient<3>(kappa);
    p.f = ConstantForm<3>(k, Proxy(kappa * c));
    p.u_exact = ConstantForm<3>(k, c);
    const double fnorm = kappa * c.norm();
    const auto mesh = GenerateStructured<3>(Domain::UnitCube, 2);
    const auto D = SolveProblem(p, mesh);
    Track(D);
    const auto I = CanonicalInterpolate(D.spaces->trial, *p.u_exact);
    const double diff = (D.u.coeffs - I.coeffs).lpNorm<Eigen::Infinity>();
    ok = ok && diff <= 1e-12;
    for (auto kind : {EstimatorKind::Residual, EstimatorKind::ResidualRobust, EstimatorKind::LocalImplicit})
    {
      const auto r = Estimate(p, D, kind);
      ok = ok && r.eta <= 1e-9 * fnorm && r.osc <= 1e-9 * fnorm;
      detail += (detail.empty() ? "" : ", ");
      detail += "k=" + std::to_string(k) + (kind == EstimatorKind::LocalImplicit ? " implicit" : " explicit") +
                " eta/|f| " + Fmt(r.eta / fnorm, 2) + " osc/|f| " + Fmt(r.osc / fnorm, 2);
    }
    detail += ", k=" + std::to_string(k) + " |u_h - I c| " + Fmt(diff, 2);
  }
  return {ok, detail};
}

// Effectivity of the standard and robust estimators on one fixed mesh.
std::pair<double, double> SweepCase(double eps, double kappa, const SimplicialMesh<3> &mesh)
{
  const auto p = MakeProblem<3>("maxwell_cube", eps, kappa);
  const auto D = SolveProblem(p, mesh);
  Track(D);
  const double e = ComputeTrueError(p, D).total;
  return {Estimate(p, D, EstimatorKind::Residual).eta / e, Estimate(p, D, EstimatorKind::ResidualRobust).eta / e};
}

Outcome A6()
{
  const auto mesh = Mesh(MakeProblem<3>("maxwell_cube"), Domain::UnitCube, 3);
  bool ok = true;
  std::string detail;
  auto sweep = [&](const std::string &label, const std::vector<std::pair<double, double>> &cases)
  {
    std::vector<double> std_eff, rob_eff;
    for (auto [eps, kappa] : cases)
    {
      const auto [s, r] = SweepCase(eps, kappa, mesh);
      std_eff.push_back(s);
      rob_eff.push_back(r);
    }
    const double rs = Ratio(std_eff), rr = Ratio(rob_eff);
    ok = ok && rr <= 10.0 && rr < rs;
    detail += (detail.empty() ? "" : "; ") + label + ": robust " + List(rob_eff) + " max/min " + Fmt(rr, 4) +
              ", standard " + List(std_eff) + " max/min " + Fmt(rs, 4);
  };
  sweep("kappa sweep", {{1, 1}, {1, 1e2}, {1, 1e4}, {1, 1e6}});
  sweep("eps sweep", {{1, 1}, {1e-2, 1}, {1e-4, 1}});
  return {ok, detail};
}

Outcome A7()
{
  const auto p = MakeProblem<3>("maxwell_cube");
  std::vector<double> ratio;
  for (int m : {2, 3, 4})
  {
    const auto mesh = Mesh(p, Domain::UnitCube, m);
    const auto D = SolveProblem(p, mesh);
    Track(D);
    ratio.push_back(Estimate(p, D, EstimatorKind::LocalImplicit).eta / Estimate(p, D, EstimatorKind::Residual).eta);
  }
  const double spread = Ratio(ratio);
  return {spread <= 2.0, "implicit/explicit " + List(ratio) + " max/min " + Fmt(spread)};
}

double L2Distance(const DiscreteField<3> &u, const FormField<3> &v)
{
  const auto &mesh = u.space->mesh();
  const auto &rule = GetSimplexRule(3, 6);
  double s = 0.0;
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    const auto &g = mesh.cell_geometry(c);
    double cs = 0.0;
    for (int q = 0; q < rule.size(); q++)
    {
      cs += rule.w[q] * (v(g.map(rule.bary[q])) - u.evaluate(c, rule.bary[q])).squaredNorm();
    }
    s += cs * g.volume;
  }
  return std::sqrt(s);
}

FormField<3> TrigForm(int k)
{
  FormField<3> v;
  v.k = k;
  v.value = [k](const Point<3> &x) -> Proxy
  {
    if (k == 0)
    {
      return MakeProxy({detail::P3(x) + detail::Q3(x)});
    }
    if (k == 1)
    {
      return Proxy(detail::Us3(x) + detail::GradQ3(x));
    }
    return Proxy(detail::CurlUs3(x) + detail::GradP3(x));
  };
  return v;
}

Outcome A8()
{
  bool ok = true;
  std::string detail;
  // Constants, with and without Gamma.
  double worst = 0.0;
  for (bool gamma : {false, true})
  {
    auto mesh = GenerateStructured<3>(Domain::UnitCube, 2).mark_gamma(GammaSelector::Plane(0, 0.0));
    for (int k = 0; k <= 3; k++)
    {
      const Proxy c = k == 0 || k == 3 ? MakeProxy({0.7}) : MakeProxy({1.0, -0.5, 0.25});
      const auto s = BuildSpace(mesh, k, Family::TrimmedP1, gamma && k < 3);
      const auto Pi = QuasiInterpolate(s, ConstantForm<3>(k, c));
      for (int cell = 0; cell < mesh.num_cells(); cell++)
      {
        worst = std::max(worst, (Pi.evaluate(cell, {0.1, 0.2, 0.3, 0.4}) - c).norm());
      }
    }
  }
  ok = ok && worst <= 1e-13;
  detail += "constants max dev " + Fmt(worst, 2);
  // Gamma DOFs depend only on the trace on Gamma = {x = 0}.
  long mismatched = 0, gamma_dofs = 0;
  auto mesh = GenerateStructured<3>(Domain::UnitCube, 3).mark_gamma(GammaSelector::Plane(0, 0.0));
  for (int k : {0, 1, 2})
  {
    const auto v = TrigForm(k);
    FormField<3> w = v;
    w.value = [v](const Point<3> &x) -> Proxy
    {
      const Proxy a = v(x);
      return Proxy(a + x(0) * std::exp(x(1)) * Proxy::Ones(a.size()));
    };
    FormField<3> z = v;
    z.value = [v](const Point<3> &x) -> Proxy { return Proxy(x(0) * v(x)); };
    const auto s = BuildSpace(mesh, k, Family::TrimmedP1, true);
    const auto Pv = QuasiInterpolate(s, v), Pw = QuasiInterpolate(s, w), Pz = QuasiInterpolate(s, z);
    for (int i = 0; i < s.n_dofs(); i++)
    {
      if (s.constrained(i))
      {
        gamma_dofs++;
        mismatched += Pv.coeffs(i) != Pw.coeffs(i) || Pz.coeffs(i) != 0.0;
      }
    }
  }
  ok = ok && mismatched == 0 && gamma_dofs > 0;
  detail += ", Gamma trace mismatches " + std::to_string(mismatched) + "/" + std::to_string(gamma_dofs);
  // L2 rate.
  for (int k : {0, 1, 2})
  {
    const auto v = TrigForm(k);
    std::vector<double> h, err;
    for (int m : {8, 16, 32})
    {
      const auto mesh = GenerateStructured<3>(Domain::UnitCube, m);
      const auto s = BuildSpace(mesh, k, Family::TrimmedP1, false);
      h.push_back(1.0 / m);
      err.push_back(L2Distance(QuasiInterpolate(s, v), v));
    }
    const double rate = Rate(h, err);
    ok = ok && std::abs(rate - 1.0) <= 0.2;
    detail += ", k=" + std::to_string(k) + " L2 rate " + Fmt(rate);
  }
  return {ok, detail};
}

Outcome A9()
{
  const auto p = MakeProblem<3>("maxwell_cube");
  std::vector<double> hx_it, none_it, cond;
  bool probe_ok = true;
  for (int m : {2, 3, 4})
  {
    const auto mesh = Mesh(p, Domain::UnitCube, m);
    const auto spaces = MakeProblemSpaces(mesh, p);
    const auto sys = AssembleProblem(p, spaces);
    const HxPreconditioner<3> hx(p, spaces, sys.A);
    SolveReport a, b;
    SolveCG(sys.A, sys.b, hx.as_function(), 1e-8, 5000, a, "hx");
    SolveCG(sys.A, sys.b, IdentityPreconditioner(), 1e-8, 5000, b, "none");
    hx_it.push_back(a.iterations);
    none_it.push_back(b.iterations);
    probe_ok = probe_ok && a.converged && b.converged && sys.A.rows() <= 2000;
    cond.push_back(SpectralProbe(sys.A, hx.as_function(), 2000).ratio());
  }
  const double vary = Ratio(hx_it) - 1.0;
  const double growth = Ratio(cond);
  const bool half = hx_it.back() <= 0.5 * none_it.back();
  const bool ok = probe_ok && vary <= 0.5 && half && growth <= 2.0;
  std::string detail = "hx iterations " + List(hx_it) + " (max/min - 1 = " + Fmt(vary, 2) + ")";
  detail += ", unpreconditioned " + List(none_it) + ", probe condition " + List(cond) + " growth " + Fmt(growth);
  if (!(vary <= 0.5))
  {
    detail += "; iteration spread exceeds 50%";
  }
  return {ok, detail};
}

// Uniform refinement runs until it first exceeds min_dofs; adaptive refinement
// (theta = 0.5) then runs until its eta drops to the last uniform eta. The
// singularity of these data only dominates beyond about 1e5 DOFs.
template <int Dim>
Outcome AdaptiveVsUniform(const std::string &name, int min_dofs)
{
  const auto p = MakeProblem<Dim>(name);
  const auto mesh = Mesh(p, Domain::LShape, 2);
  AfemOptions opt;
  opt.reference = ReferenceMode::None;
  opt.direct_cap = 400000;
  opt.uniform = true;
  opt.max_iters = 40;
  opt.max_dofs = min_dofs;
  const auto uni = AfemLoop(p, mesh, opt);
  Track(uni.history);
  const auto &last = uni.history.rows.back();
  opt.uniform = false;
  opt.theta = 0.5;
  opt.max_iters = 400;
  opt.tol = last.eta;
  opt.max_dofs = last.ndofs;
  const auto ada = AfemLoop(p, mesh, opt);
  Track(ada.history);
  const auto &fin = ada.history.rows.back();
  const bool reached = fin.eta <= last.eta;
  const double frac = static_cast<double>(fin.ndofs) / last.ndofs;
  return {reached && frac <= 0.6, name + ": uniform eta " + Fmt(last.eta, 4) + " at " + std::to_string(last.ndofs) +
                                      " DOFs, adaptive eta " + Fmt(fin.eta, 4) + " at " + std::to_string(fin.ndofs) +
                                      " DOFs (" + Fmt(100 * frac, 3) + "%)"};
}

Outcome A10()
{
  const auto a = AdaptiveVsUniform<2>("lshape_singular", 150000);
  const auto b = AdaptiveVsUniform<2>("lshape_singular_k1", 150000);
  return {a.pass && b.pass, a.detail + "; " + b.detail};
}

std::map<std::string, std::string> Snapshot(const fs::path &dir)
{
  std::map<std::string, std::string> files;
  for (const auto &e : fs::directory_iterator(dir))
  {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[e.path().filename().string()] = s.str();
  }
  return files;
}

Outcome A11()
{
  const fs::path root = fs::temp_directory_path() / "feec_acceptance_determinism";
  fs::remove_all(root);
  const char *configs[] = {
      "[problem]\nname = maxwell_cube\nm = 2\n[afem]\nmax_iters = 3\n",
      "[problem]\nname = lshape_singular\nm = 2\n[estimator]\nkind = local-implicit\n[afem]\nmax_iters = 4\n",
      "[problem]\nname = maxwell_cube\nm = 1\nkappa = 1, 1e4\n[estimator]\nkind = residual-robust\n"
      "[afem]\nuniform = true\nmax_iters = 2\n",
      "[problem]\nname = hodge_k1_cube\nm = 2\n[afem]\nmax_iters = 2\n",
  };
  std::ostringstream log;
  int compared = 0, differing = 0;
  for (int i = 0; i < 5; i++)
  {
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; r++)
    {
      const std::string cfg_text =
          i < 4 ? configs[i] : "[problem]\nname = maxwell_cube\nm = 2\n[bench]\nlevels = 2\n[output]\nseed = 5\n";
      auto cfg = ParseConfig(cfg_text);
      cfg.output = (root / ("case" + std::to_string(i)) / ("run" + std::to_string(r))).string();
      const auto dir = i < 4 ? RunExperiment(cfg, log) : RunPrecondBench(cfg, log);
      runs[r] = Snapshot(dir);
    }
    for (const auto &[name, text] : runs[0])
    {
      compared++;
      differing += !runs[1].count(name) || runs[1].at(name) != text;
    }
    differing += runs[0].size() != runs[1].size();
  }
  fs::remove_all(root);
  return {differing == 0 && compared > 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) + " differ"};
}

Outcome A2()
{
  double worst = 0.0;
  for (auto [res, b] : g_solves)
  {
    worst = std::max(worst, b > 0.0 ? res / b : res);
  }
  return {!g_solves.empty() && worst <= 1e-9,
          std::to_string(g_solves.size()) + " direct solves, max_i |<R, phi_i>| / |b| = " + Fmt(worst, 2)};
}

}  // namespace

int main(int argc, char **argv)
{
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  struct Criterion
  {
    const char *id;
    std::function<Outcome()> run;
    double budget;  // seconds
  };
  // A2 inspects the solves made by the other criteria, so it runs last.
  const std::vector<Criterion> order = {
      {"A1", A1, 1},    {"A3", A3, 180}, {"A4", A4, 360}, {"A5", A5, 10},  {"A6", A6, 300}, {"A7", A7, 300},
      {"A8", A8, 60},   {"A9", A9, 300}, {"A10", A10, 300}, {"A11", A11, 300}, {"A2", A2, 30},
  };
  std::map<std::string, std::string> lines;
  int failed = 0;
  for (const auto &c : order)
  {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
      o = c.run();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sec > c.budget)
    {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failed += !o.pass;
    std::ostringstream line;
    line << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << " (" << std::fixed
         << std::setprecision(1) << sec << " s)";
    std::cerr << line.str() << "\n";
    lines[c.id] = line.str();
  }
  std::ofstream report("acceptance_report.txt");
  for (int i = 1; i <= 11; i++)
  {
    const auto &l = lines["A" + std::to_string(i)];
    std::cout << l << "\n";
    report << l << "\n";
  }
  const std::string summary = std::to_string(11 - failed) + "/11 criteria passed";
  std::cout << summary << "\n";
  report << summary << "\n";
  return strict ? failed : 0;
}
