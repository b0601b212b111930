// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_CONFIG_HPP
#define FEEC_CONFIG_HPP

// Experiment configuration: sectioned "key = value" text.
//
//   file    := { line }
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') any
//   section := '[' name ']'
//   entry   := key '=' value        (value: number, word, or comma list)
//
// Sections and keys (defaults in brackets):
//   [problem]   name, domain [registry], m [2], gamma [registry]
//               (whole | empty | x=<v> | y=<v> | z=<v>), k [registry, checked],
//               eps [1], kappa [1]  -- eps and kappa accept comma-separated sweeps
//   [estimator] kind [residual] (residual | residual-robust | local-implicit)
//   [afem]      theta [0.5], max_iters [5], max_dofs [0], tol [0],
//               uniform [false], reference [auto] (auto | exact | finer | none)
//   [solver]    kind [direct] (direct | jacobi | hx), direct_cap [50000]
//   [bench]     levels [3], tol [1e-8], max_iters [5000], probe_max_dofs [2000]
//   [output]    path [output], timing [false], seed [1]

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "feec/afem.hpp"
#include "feec/problems.hpp"

namespace feec
{

// Raised for malformed or inconsistent configuration files.
class ConfigError : public Error
{
public:
  using Error::Error;
};

struct ExperimentConfig
{
  std::string text;  // verbatim source
  std::string problem;
  Domain domain = Domain::UnitCube;
  int dim = 3;
  int m = 2;
  std::optional<GammaSelector> gamma;  // override of the registry default
  std::vector<double> eps{1.0}, kappa{1.0};
  AfemOptions afem;
  int bench_levels = 3;
  double bench_tol = 1e-8;
  int bench_max_iters = 5000;
  int probe_max_dofs = 2000;
  std::string output = "output";
  unsigned seed = 1;

  bool sweep() const { return eps.size() * kappa.size() > 1; }
};

namespace detail
{

inline std::string Trim(const std::string &s)
{
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
  {
    a++;
  }
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
  {
    b--;
  }
  return s.substr(a, b - a);
}

inline double ParseNumber(const std::string &key, const std::string &v)
{
  std::size_t pos = 0;
  double x = 0.0;
  try
  {
    x = std::stod(v, &pos);
  }
  catch (const std::exception &)
  {
    throw ConfigError("config: " + key + ": not a number: '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x))
  {
    throw ConfigError("config: " + key + ": not a number: '" + v + "'");
  }
  return x;
}

inline int ParseInt(const std::string &key, const std::string &v)
{
  const double x = ParseNumber(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e9)
  {
    throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
  }
  return static_cast<int>(x);
}

inline bool ParseBool(const std::string &key, const std::string &v)
{
  if (v == "true" || v == "yes" || v == "1")
  {
    return true;
  }
  if (v == "false" || v == "no" || v == "0")
  {
    return false;
  }
  throw ConfigError("config: " + key + ": expected true or false");
}

inline std::vector<double> ParseList(const std::string &key, const std::string &v)
{
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');)
  {
    out.push_back(ParseNumber(key, Trim(item)));
  }
  if (out.empty())
  {
    throw ConfigError("config: " + key + ": empty list");
  }
  for (double x : out)
  {
    if (!(x > 0.0))
    {
      throw ConfigError("config: " + key + ": values must be positive");
    }
  }
  return out;
}

inline GammaSelector ParseGamma(const std::string &v)
{
  if (v == "whole")
  {
    return GammaSelector::Whole();
  }
  if (v == "empty")
  {
    return GammaSelector::Empty();
  }
  if (v.size() > 2 && v[1] == '=' && v[0] >= 'x' && v[0] <= 'z')
  {
    return GammaSelector::Plane(v[0] - 'x', ParseNumber("problem.gamma", v.substr(2)));
  }
  throw ConfigError("config: problem.gamma: expected whole, empty or <axis>=<value>");
}

}  // namespace detail

inline ExperimentConfig ParseConfig(const std::string &text)
{
  using namespace detail;
  std::map<std::string, std::string> kv;
  std::string section;
  std::istringstream is(text);
  int lineno = 0;
  for (std::string raw; std::getline(is, raw);)
  {
    lineno++;
    const std::string line = Trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';')
    {
      continue;
    }
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[')
    {
      if (line.back() != ']')
      {
        throw ConfigError(where + "unterminated section header");
      }
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
    {
      throw ConfigError(where + "expected key = value");
    }
    if (section.empty())
    {
      throw ConfigError(where + "entry outside a section");
    }
    const std::string key = section + "." + Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (value.empty())
    {
      throw ConfigError(where + "empty value for " + key);
    }
    if (!kv.emplace(key, value).second)
    {
      throw ConfigError(where + "duplicate key " + key);
    }
  }

  ExperimentConfig cfg;
  cfg.text = text;
  auto take = [&](const std::string &key) -> std::optional<std::string>
  {
    auto it = kv.find(key);
    if (it == kv.end())
    {
      return std::nullopt;
    }
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  const auto name = take("problem.name");
  if (!name)
  {
    throw ConfigError("config: problem.name is required");
  }
  const ProblemInfo *info = nullptr;
  try
  {
    info = &FindProblem(*name);
  }
  catch (const Error &e)
  {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.problem = info->name;
  cfg.dim = info->dim;
  cfg.domain = info->domain;
  if (auto v = take("problem.domain"))
  {
    Domain d;
    try
    {
      d = ParseDomain(*v);
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (d != info->domain)
    {
      throw ConfigError("config: problem " + info->name + " is defined on " + DomainName(info->domain));
    }
  }
  if (auto v = take("problem.m"))
  {
    cfg.m = ParseInt("problem.m", *v);
    if (cfg.m < 1)
    {
      throw ConfigError("config: problem.m must be at least 1");
    }
  }
  if (auto v = take("problem.gamma"))
  {
    cfg.gamma = ParseGamma(*v);
  }
  if (auto v = take("problem.k"))
  {
    if (ParseInt("problem.k", *v) != info->k)
    {
      throw ConfigError("config: problem " + info->name + " has k = " + std::to_string(info->k));
    }
  }
  if (auto v = take("problem.eps"))
  {
    cfg.eps = ParseList("problem.eps", *v);
  }
  if (auto v = take("problem.kappa"))
  {
    cfg.kappa = ParseList("problem.kappa", *v);
  }
  if (auto v = take("estimator.kind"))
  {
    try
    {
      cfg.afem.estimator = ParseEstimator(*v);
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (info->kind == ProblemKind::HodgeLaplacian && cfg.afem.estimator == EstimatorKind::ResidualRobust)
  {
    throw ConfigError("config: residual-robust applies to H(d) problems only");
  }
  if (auto v = take("afem.theta"))
  {
    cfg.afem.theta = ParseNumber("afem.theta", *v);
  }
  if (!(cfg.afem.theta > 0.0) || cfg.afem.theta > 1.0)
  {
    throw ConfigError("config: afem.theta must lie in (0, 1]");
  }
  if (auto v = take("afem.max_iters"))
  {
    cfg.afem.max_iters = ParseInt("afem.max_iters", *v);
  }
  if (cfg.afem.max_iters < 1)
  {
    throw ConfigError("config: afem.max_iters must be positive");
  }
  if (auto v = take("afem.max_dofs"))
  {
    cfg.afem.max_dofs = ParseInt("afem.max_dofs", *v);
  }
  if (auto v = take("afem.tol"))
  {
    cfg.afem.tol = ParseNumber("afem.tol", *v);
  }
  if (auto v = take("afem.uniform"))
  {
    cfg.afem.uniform = ParseBool("afem.uniform", *v);
  }
  cfg.afem.reference = info->exact ? ReferenceMode::Exact : ReferenceMode::Finer;
  if (auto v = take("afem.reference"))
  {
    if (*v == "none")
    {
      cfg.afem.reference = ReferenceMode::None;
    }
    else if (*v == "finer")
    {
      cfg.afem.reference = ReferenceMode::Finer;
    }
    else if (*v == "exact")
    {
      if (!info->exact)
      {
        throw ConfigError("config: problem " + info->name + " has no closed-form solution");
      }
      cfg.afem.reference = ReferenceMode::Exact;
    }
    else if (*v != "auto")
    {
      throw ConfigError("config: afem.reference: expected auto, exact, finer or none");
    }
  }
  if (cfg.afem.reference == ReferenceMode::Finer && info->kind == ProblemKind::HodgeLaplacian)
  {
    throw ConfigError("config: finer reference is available for H(d) problems only");
  }
  if (auto v = take("solver.kind"))
  {
    try
    {
      cfg.afem.solver = ParseSolver(*v);
    }
    catch (const Error &e)
    {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (auto v = take("solver.direct_cap"))
  {
    cfg.afem.direct_cap = ParseInt("solver.direct_cap", *v);
    if (cfg.afem.direct_cap < 1)
    {
      throw ConfigError("config: solver.direct_cap must be positive");
    }
  }
  if (auto v = take("bench.levels"))
  {
    cfg.bench_levels = ParseInt("bench.levels", *v);
    if (cfg.bench_levels < 1)
    {
      throw ConfigError("config: bench.levels must be positive");
    }
  }
  if (auto v = take("bench.tol"))
  {
    cfg.bench_tol = ParseNumber("bench.tol", *v);
  }
  if (auto v = take("bench.max_iters"))
  {
    cfg.bench_max_iters = ParseInt("bench.max_iters", *v);
  }
  if (auto v = take("bench.probe_max_dofs"))
  {
    cfg.probe_max_dofs = ParseInt("bench.probe_max_dofs", *v);
  }
  if (auto v = take("output.path"))
  {
    cfg.output = *v;
  }
  if (auto v = take("output.timing"))
  {
    cfg.afem.timing = ParseBool("output.timing", *v);
  }
  if (auto v = take("output.seed"))
  {
    const int s = ParseInt("output.seed", *v);
    if (s < 0)
    {
      throw ConfigError("config: output.seed must be nonnegative");
    }
    cfg.seed = static_cast<unsigned>(s);
  }
  if (!kv.empty())
  {
    throw ConfigError("config: unknown key " + kv.begin()->first);
  }
  return cfg;
}

inline ExperimentConfig LoadConfig(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("config: cannot open " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace feec

#endif  // FEEC_CONFIG_HPP
