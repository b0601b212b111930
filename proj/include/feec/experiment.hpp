// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_EXPERIMENT_HPP
#define FEEC_EXPERIMENT_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <string>

#include "feec/config.hpp"
#include "feec/mesh_io.hpp"

namespace feec
{

namespace fs = std::filesystem;

// Output directory: the configured path, placed under $FEEC_OUTPUT_ROOT when set.
inline fs::path ResolveOutputDir(const ExperimentConfig &cfg)
{
  fs::path p(cfg.output);
  if (const char *root = std::getenv("FEEC_OUTPUT_ROOT"); root && *root)
  {
    return fs::path(root) / p.relative_path();
  }
  return p;
}

namespace detail
{

inline std::ofstream OpenOutput(const fs::path &p)
{
  std::ofstream os(p, std::ios::binary);
  if (!os)
  {
    throw Error("cannot write " + p.string());
  }
  return os;
}

template <int Dim>
SimplicialMesh<Dim> InitialMesh(const ExperimentConfig &cfg, const ProblemSpec<Dim> &p)
{
  return GenerateStructured<Dim>(cfg.domain, cfg.m).mark_gamma(cfg.gamma ? *cfg.gamma : p.gamma);
}

template <int Dim>
void RunSweep(const ExperimentConfig &cfg, const fs::path &dir, std::ostream &log)
{
  std::ofstream summary;
  if (cfg.sweep())
  {
    summary = OpenOutput(dir / "summary.csv");
    summary << "eps,kappa,iterations,ndofs,eta,err_total,eff_min,eff_max,eff_ratio\n";
  }
  for (double eps : cfg.eps)
  {
    for (double kappa : cfg.kappa)
    {
      auto p = MakeProblem<Dim>(cfg.problem, eps, kappa);
      auto res = AfemLoop(p, InitialMesh(cfg, p), cfg.afem);
      const std::string tag =
          cfg.sweep() ? "_eps" + FormatDouble(eps) + "_kappa" + FormatDouble(kappa) : std::string();
      {
        auto os = OpenOutput(dir / ("history" + tag + ".csv"));
        WriteHistoryCsv(os, res.history);
      }
      {
        auto os = OpenOutput(dir / ("estimator" + tag + ".csv"));
        WriteEstimatorCsv(os, res.final_report);
      }
      const auto &last = res.history.rows.back();
      log << cfg.problem << " eps=" << FormatDouble(eps) << " kappa=" << FormatDouble(kappa)
          << " iterations=" << res.history.rows.size() << " ndofs=" << last.ndofs
          << " eta=" << FormatDouble(last.eta);
      if (last.error)
      {
        log << " err=" << FormatDouble(last.error->total);
      }
      log << "\n";
      if (cfg.sweep())
      {
        summary << FormatDouble(eps) << "," << FormatDouble(kappa) << "," << res.history.rows.size() << ","
                << last.ndofs << "," << FormatDouble(last.eta) << ",";
        if (last.error)
        {
          const auto e = Effectivity(res.history);
          summary << FormatDouble(last.error->total) << "," << FormatDouble(e.min) << ","
                  << FormatDouble(e.max) << "," << FormatDouble(e.ratio()) << "\n";
        }
        else
        {
          summary << ",,,\n";
        }
      }
    }
  }
}

template <int Dim>
void Bench(const ExperimentConfig &cfg, const fs::path &dir, std::ostream &log)
{
  auto os = OpenOutput(dir / "precond_bench.csv");
  os << "level,m,ndofs,preconditioner,iterations,seconds,lambda_min,lambda_max\n";
  for (int level = 0; level < cfg.bench_levels; level++)
  {
    auto p = MakeProblem<Dim>(cfg.problem, cfg.eps.front(), cfg.kappa.front());
    if (p.kind != ProblemKind::HdPositive || p.k < 1)
    {
      throw Error("precond-bench: requires an H(d) problem with k >= 1");
    }
    const int m = cfg.m + level;
    ExperimentConfig c = cfg;
    c.m = m;
    const auto mesh = InitialMesh(c, p);
    const auto spaces = MakeProblemSpaces(mesh, p);
    const auto sys = AssembleProblem(p, spaces);
    std::mt19937_64 gen(cfg.seed * 1000003ull + static_cast<unsigned>(level));
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vector b(sys.A.rows());
    for (Eigen::Index i = 0; i < b.size(); i++)
    {
      b(i) = U(gen);
    }
    const HxPreconditioner<Dim> hx(p, spaces, sys.A);
    const std::pair<std::string, Preconditioner> pcs[] = {
        {"none", IdentityPreconditioner()}, {"jacobi", JacobiPreconditioner(sys.A)}, {"hx", hx.as_function()}};
    for (const auto &[name, B] : pcs)
    {
      SolveReport rep;
      SolveCG(sys.A, b, B, cfg.bench_tol, cfg.bench_max_iters, rep, name);
      os << level + 1 << "," << m << "," << sys.A.rows() << "," << name << "," << rep.iterations << ","
         << FormatDouble(cfg.afem.timing ? rep.seconds : 0.0) << ",";
      if (sys.A.rows() <= cfg.probe_max_dofs)
      {
        const auto sb = SpectralProbe(sys.A, B, cfg.probe_max_dofs);
        os << FormatDouble(sb.lambda_min) << "," << FormatDouble(sb.lambda_max);
      }
      else
      {
        os << ",";
      }
      os << "\n";
      log << "level " << level + 1 << " ndofs=" << sys.A.rows() << " " << name << " iterations=" << rep.iterations
          << "\n";
    }
  }
}

}  // namespace detail

// Runs the configured AFEM experiment (or sweep); writes history/estimator CSVs,
// a summary for sweeps, and a verbatim copy of the configuration.
inline fs::path RunExperiment(const ExperimentConfig &cfg, std::ostream &log)
{
  const fs::path dir = ResolveOutputDir(cfg);
  fs::create_directories(dir);
  {
    auto os = detail::OpenOutput(dir / "config.cfg");
    os << cfg.text;
  }
  if (cfg.dim == 2)
  {
    detail::RunSweep<2>(cfg, dir, log);
  }
  else
  {
    detail::RunSweep<3>(cfg, dir, log);
  }
  return dir;
}

inline fs::path RunPrecondBench(const ExperimentConfig &cfg, std::ostream &log)
{
  const fs::path dir = ResolveOutputDir(cfg);
  fs::create_directories(dir);
  {
    auto os = detail::OpenOutput(dir / "config.cfg");
    os << cfg.text;
  }
  if (cfg.dim == 2)
  {
    detail::Bench<2>(cfg, dir, log);
  }
  else
  {
    detail::Bench<3>(cfg, dir, log);
  }
  return dir;
}

template <int Dim>
void PrintMeshInfo(const SimplicialMesh<Dim> &mesh, std::ostream &os)
{
  os << "V=" << mesh.num_vertices() << " E=" << mesh.num_simplices(1) << " F=" << mesh.num_simplices(2);
  if constexpr (Dim == 3)
  {
    os << " T=" << mesh.num_cells();
  }
  os << ", chi=" << mesh.euler_characteristic() << "\n";
  os << "dim=" << Dim << " shape_regularity=" << FormatDouble(mesh.shape_regularity())
     << " volume=" << FormatDouble(mesh.total_volume()) << "\n";
}

// Generator spec "<domain>:<m>" (square, cube, lshape, fichera) or a mesh file.
inline void MeshInfo(const std::string &spec, std::ostream &os)
{
  const auto colon = spec.rfind(':');
  if (colon != std::string::npos && !fs::exists(spec))
  {
    const Domain d = ParseDomain(spec.substr(0, colon));
    const int m = detail::ParseInt("mesh-info", spec.substr(colon + 1));
    if (m < 1)
    {
      throw Error("mesh-info: subdivisions must be positive");
    }
    if (DomainDimension(d) == 2)
    {
      PrintMeshInfo(GenerateStructured<2>(d, m), os);
    }
    else
    {
      PrintMeshInfo(GenerateStructured<3>(d, m), os);
    }
    return;
  }
  std::visit([&](const auto &mesh) { PrintMeshInfo(mesh, os); }, ReadMeshFile(spec));
}

inline void ListProblems(std::ostream &os)
{
  for (const auto &p : ProblemRegistry())
  {
    os << p.name << "  n=" << p.dim << " k=" << p.k << " domain=" << DomainName(p.domain)
       << " gamma=" << (p.gamma_whole ? "whole" : "empty") << (p.exact ? "" : " (no closed form)") << "\n    "
       << p.summary << "\n";
  }
}

}  // namespace feec

#endif  // FEEC_EXPERIMENT_HPP
