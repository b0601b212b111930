// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_PROBLEMS_HPP
#define FEEC_PROBLEMS_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "feec/assembly.hpp"
#include "feec/generate.hpp"

namespace feec
{

// Registry of benchmark problems. Manufactured solutions are written with
// s(t) = sin(pi t), c(t) = cos(pi t) and are compatible with the boundary
// set of the entry (homogeneous essential traces on Gamma, homogeneous
// natural traces elsewhere).
struct ProblemInfo
{
  std::string name;
  int dim = 3;
  int k = 0;
  ProblemKind kind = ProblemKind::HdPositive;
  Domain domain = Domain::UnitCube;
  bool gamma_whole = true;
  bool exact = true;  // closed-form solution available
  std::string summary;
};

inline const std::vector<ProblemInfo> &ProblemRegistry()
{
  static const std::vector<ProblemInfo> reg = {
      {"reaction_diffusion_square", 2, 0, ProblemKind::ReactionDiffusion, Domain::UnitSquare, true, true,
       "-eps lap u + kappa u = f, u = s(x)s(y)"},
      {"reaction_diffusion_cube", 3, 0, ProblemKind::ReactionDiffusion, Domain::UnitCube, true, true,
       "-eps lap u + kappa u = f, u = s(x)s(y)s(z)"},
      {"maxwell_square", 2, 1, ProblemKind::HdPositive, Domain::UnitSquare, true, true,
       "eps rot rot u + kappa u = f, u = (s(y), s(x)) + grad s(x)s(y)"},
      {"maxwell_cube", 3, 1, ProblemKind::HdPositive, Domain::UnitCube, true, true,
       "eps curl curl u + kappa u = f, u = (s(y)s(z), s(z)s(x), s(x)s(y)) + grad s(x)s(y)s(z)"},
      {"grad_div_cube", 3, 2, ProblemKind::HdPositive, Domain::UnitCube, true, true,
       "-eps grad div u + kappa u = f, u = grad c(x)c(y)c(z) + curl (s(y)s(z), s(z)s(x), s(x)s(y))"},
      {"mixed_poisson_square", 2, 2, ProblemKind::HodgeLaplacian, Domain::UnitSquare, false, true,
       "sigma = delta u, d sigma = f, u = s(x)s(y)"},
      {"mixed_poisson_cube", 3, 3, ProblemKind::HodgeLaplacian, Domain::UnitCube, false, true,
       "sigma = delta u, d sigma = f, u = s(x)s(y)s(z)"},
      {"hodge_k1_cube", 3, 1, ProblemKind::HodgeLaplacian, Domain::UnitCube, true, true,
       "sigma = -div u, grad sigma + curl curl u = f, u = (s(y)s(z), s(z)s(x), s(x)s(y)) + grad s(x)s(y)s(z)"},
      {"lshape_singular", 2, 0, ProblemKind::ReactionDiffusion, Domain::LShape, true, false,
       "-lap u + u = 1 on the L-shape, corner singularity r^(2/3)"},
      {"lshape_singular_k1", 2, 1, ProblemKind::HdPositive, Domain::LShape, true, false,
       "rot rot u + u = (1, 0) on the L-shape"},
  };
  return reg;
}

inline const ProblemInfo &FindProblem(const std::string &name)
{
  for (const auto &p : ProblemRegistry())
  {
    if (p.name == name)
    {
      return p;
    }
  }
  throw Error("unknown problem: " + name);
}

namespace detail
{

constexpr double kPi = std::numbers::pi;

inline double S(double t) { return std::sin(kPi * t); }
inline double C(double t) { return std::cos(kPi * t); }

template <int Dim>
FormField<Dim> Field(int k, typename FormField<Dim>::Fn v, typename FormField<Dim>::Fn d = {},
                     typename FormField<Dim>::Fn delta = {})
{
  FormField<Dim> f;
  f.k = k;
  f.value = std::move(v);
  f.d = std::move(d);
  f.delta = std::move(delta);
  return f;
}

// 3D building blocks.
inline Proxy Us3(const Point<3> &x)  // (s(y)s(z), s(z)s(x), s(x)s(y)), divergence free
{
  return MakeProxy({S(x[1]) * S(x[2]), S(x[2]) * S(x[0]), S(x[0]) * S(x[1])});
}
inline Proxy CurlUs3(const Point<3> &x)
{
  const double p = kPi;
  return MakeProxy({p * S(x[0]) * (C(x[1]) - C(x[2])), p * S(x[1]) * (C(x[2]) - C(x[0])),
                    p * S(x[2]) * (C(x[0]) - C(x[1]))});
}
inline double P3(const Point<3> &x) { return S(x[0]) * S(x[1]) * S(x[2]); }
inline Proxy GradP3(const Point<3> &x)
{
  const double p = kPi;
  return MakeProxy({p * C(x[0]) * S(x[1]) * S(x[2]), p * S(x[0]) * C(x[1]) * S(x[2]),
                    p * S(x[0]) * S(x[1]) * C(x[2])});
}
inline double Q3(const Point<3> &x) { return C(x[0]) * C(x[1]) * C(x[2]); }
inline Proxy GradQ3(const Point<3> &x)
{
  const double p = kPi;
  return MakeProxy({-p * S(x[0]) * C(x[1]) * C(x[2]), -p * C(x[0]) * S(x[1]) * C(x[2]),
                    -p * C(x[0]) * C(x[1]) * S(x[2])});
}

inline double P2(const Point<2> &x) { return S(x[0]) * S(x[1]); }
inline Proxy GradP2(const Point<2> &x)
{
  return MakeProxy({kPi * C(x[0]) * S(x[1]), kPi * S(x[0]) * C(x[1])});
}

}  // namespace detail

// Builds the registry entry on the unit square/cube or L-shape for the given
// coefficients. Only HdPositive/ReactionDiffusion entries use eps and kappa.
template <int Dim>
ProblemSpec<Dim> MakeProblem(const std::string &name, double eps = 1.0, double kappa = 1.0)
{
  using namespace detail;
  const auto &info = FindProblem(name);
  if (info.dim != Dim)
  {
    throw Error("problem " + name + " has dimension " + std::to_string(info.dim));
  }
  if (!(eps > 0.0) || !(kappa > 0.0))
  {
    throw Error("problem " + name + ": eps and kappa must be positive");
  }
  ProblemSpec<Dim> p;
  p.kind = info.kind;
  p.k = info.k;
  p.eps = eps;
  p.kappa = kappa;
  p.gamma = info.gamma_whole ? GammaSelector::Whole() : GammaSelector::Empty();
  if (info.kind == ProblemKind::HodgeLaplacian)
  {
    p.eps = 1.0;
    p.kappa = 1.0;
  }
  const double pi2 = kPi * kPi;

  if constexpr (Dim == 2)
  {
    if (name == "reaction_diffusion_square")
    {
      p.u_exact = Field<2>(0, [](const Point<2> &x) { return MakeProxy({P2(x)}); }, GradP2);
      p.f = Field<2>(0, [=](const Point<2> &x) { return MakeProxy({(2 * pi2 * eps + kappa) * P2(x)}); });
    }
    else if (name == "maxwell_square")
    {
      // u = (s(y), s(x)) + grad p; rot rot (s(y), s(x)) = pi^2 (s(y), s(x)).
      auto us = [](const Point<2> &x) { return MakeProxy({S(x[1]), S(x[0])}); };
      p.u_exact = Field<2>(
          1, [=](const Point<2> &x) { return Proxy(us(x) + GradP2(x)); },
          [](const Point<2> &x) { return MakeProxy({kPi * (C(x[0]) - C(x[1]))}); });
      p.f = Field<2>(
          1, [=](const Point<2> &x) { return Proxy((pi2 * eps + kappa) * us(x) + kappa * GradP2(x)); }, {},
          [=](const Point<2> &x) { return MakeProxy({-kappa * (-2 * pi2) * P2(x)}); });
    }
    else if (name == "mixed_poisson_square")
    {
      p.u_exact = Field<2>(2, [](const Point<2> &x) { return MakeProxy({P2(x)}); });
      // sigma = delta u = (d_y u, -d_x u), d sigma = -lap u.
      p.sigma_exact = Field<2>(
          1, [](const Point<2> &x) { return MakeProxy({kPi * S(x[0]) * C(x[1]), -kPi * C(x[0]) * S(x[1])}); },
          [=](const Point<2> &x) { return MakeProxy({2 * pi2 * P2(x)}); });
      p.f = Field<2>(
          2, [=](const Point<2> &x) { return MakeProxy({2 * pi2 * P2(x)}); }, {},
          [=](const Point<2> &x)
          { return MakeProxy({2 * pi2 * kPi * S(x[0]) * C(x[1]), -2 * pi2 * kPi * C(x[0]) * S(x[1])}); });
    }
    else if (name == "lshape_singular")
    {
      p.f = ConstantForm<2>(0, MakeProxy({1.0}));
    }
    else if (name == "lshape_singular_k1")
    {
      p.f = ConstantForm<2>(1, MakeProxy({1.0, 0.0}));
    }
    else
    {
      throw Error("problem " + name + " is not two dimensional");
    }
  }
  else
  {
    if (name == "reaction_diffusion_cube")
    {
      p.u_exact = Field<3>(0, [](const Point<3> &x) { return MakeProxy({P3(x)}); }, GradP3);
      p.f = Field<3>(0, [=](const Point<3> &x) { return MakeProxy({(3 * pi2 * eps + kappa) * P3(x)}); });
    }
    else if (name == "maxwell_cube")
    {
      // curl curl us = 2 pi^2 us; -div grad p = 3 pi^2 p.
      p.u_exact = Field<3>(
          1, [](const Point<3> &x) { return Proxy(Us3(x) + GradP3(x)); }, CurlUs3);
      p.f = Field<3>(
          1, [=](const Point<3> &x) { return Proxy((2 * pi2 * eps + kappa) * Us3(x) + kappa * GradP3(x)); }, {},
          [=](const Point<3> &x) { return MakeProxy({3 * pi2 * kappa * P3(x)}); });
    }
    else if (name == "grad_div_cube")
    {
      // u = grad q + curl us, div u = lap q = -3 pi^2 q, curl^3 us = 2 pi^2 curl us.
      p.u_exact = Field<3>(
          2, [](const Point<3> &x) { return Proxy(GradQ3(x) + CurlUs3(x)); },
          [=](const Point<3> &x) { return MakeProxy({-3 * pi2 * Q3(x)}); });
      p.f = Field<3>(
          2, [=](const Point<3> &x) { return Proxy((3 * pi2 * eps + kappa) * GradQ3(x) + kappa * CurlUs3(x)); },
          {}, [=](const Point<3> &x) { return Proxy(2 * pi2 * kappa * CurlUs3(x)); });
    }
    else if (name == "mixed_poisson_cube")
    {
      p.u_exact = Field<3>(3, [](const Point<3> &x) { return MakeProxy({P3(x)}); });
      p.sigma_exact = Field<3>(
          2, [](const Point<3> &x) { return Proxy(-GradP3(x)); },
          [=](const Point<3> &x) { return MakeProxy({3 * pi2 * P3(x)}); });
      p.f = Field<3>(
          3, [=](const Point<3> &x) { return MakeProxy({3 * pi2 * P3(x)}); }, {},
          [=](const Point<3> &x) { return Proxy(-3 * pi2 * GradP3(x)); });
    }
    else if (name == "hodge_k1_cube")
    {
      // sigma = -div u = 3 pi^2 p, f = -lap u = 2 pi^2 us + 3 pi^2 grad p.
      p.u_exact = Field<3>(
          1, [](const Point<3> &x) { return Proxy(Us3(x) + GradP3(x)); }, CurlUs3);
      p.sigma_exact = Field<3>(
          0, [=](const Point<3> &x) { return MakeProxy({3 * pi2 * P3(x)}); },
          [=](const Point<3> &x) { return Proxy(3 * pi2 * GradP3(x)); });
      p.f = Field<3>(
          1, [=](const Point<3> &x) { return Proxy(2 * pi2 * Us3(x) + 3 * pi2 * GradP3(x)); }, {},
          [=](const Point<3> &x) { return MakeProxy({9 * pi2 * pi2 * P3(x)}); });
    }
    else
    {
      throw Error("problem " + name + " is not three dimensional");
    }
  }
  p.validate();
  return p;
}

}  // namespace feec

#endif  // FEEC_PROBLEMS_HPP
