// SPDX-License-Identifier: Apache-2.0
//
// feec_cli: experiment runner.
//   feec_cli run <cfg>            AFEM run or parameter sweep
//   feec_cli precond-bench <cfg>  CG iterations per preconditioner and level
//   feec_cli mesh-info <spec>     counts for "<domain>:<m>" or a mesh file
//   feec_cli list-problems
// Exit codes: 0 success, 2 usage/parse errors, 3 runtime errors.
// FEEC_OUTPUT_ROOT, when set, prefixes the configured output path.

#include <iostream>

#include <CLI11.hpp>

#include "feec/experiment.hpp"

namespace
{

constexpr int kParseError = 2;
constexpr int kRuntimeError = 3;

template <class F>
int Guard(F &&body)
{
  try
  {
    body();
    return 0;
  }
  catch (const feec::ConfigError &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Finite element exterior calculus experiments"};
  app.require_subcommand(1);
  std::string cfg_path, mesh_spec;

  auto *run = app.add_subcommand("run", "run an AFEM experiment from a config file");
  run->add_option("config", cfg_path, "config file")->required();
  auto *bench = app.add_subcommand("precond-bench", "compare preconditioners over refinement levels");
  bench->add_option("config", cfg_path, "config file")->required();
  auto *info = app.add_subcommand("mesh-info", "print mesh counts and shape regularity");
  info->add_option("spec", mesh_spec, "<domain>:<m> or mesh file")->required();
  app.add_subcommand("list-problems", "list registered problems");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return kParseError;
  }

  if (run->parsed())
  {
    return Guard([&] { feec::RunExperiment(feec::LoadConfig(cfg_path), std::cout); });
  }
  if (bench->parsed())
  {
    return Guard([&] { feec::RunPrecondBench(feec::LoadConfig(cfg_path), std::cout); });
  }
  if (info->parsed())
  {
    try
    {
      feec::MeshInfo(mesh_spec, std::cout);
      return 0;
    }
    catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << "\n";
      return kParseError;
    }
  }
  feec::ListProblems(std::cout);
  return 0;
}
