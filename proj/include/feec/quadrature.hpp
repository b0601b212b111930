// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_QUADRATURE_HPP
#define FEEC_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "feec/common.hpp"

namespace feec
{

// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule
{
  std::vector<double> x, w;
};

inline LineRule GaussLegendre(int npts)
{
  LineRule rule;
  rule.x.resize(npts);
  rule.w.resize(npts);
  for (int i = 0; i < npts; i++)
  {
    // Newton iteration on P_n from the Chebyshev guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (npts + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= npts; j++)
      {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (npts == 1)
      {
        p1 = z;
        p0 = 1.0;
      }
      dp = npts * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16)
      {
        break;
      }
    }
    if (npts == 1)
    {
      z = 0.0;
      dp = 1.0;
    }
    rule.x[i] = 0.5 * (1.0 - z);
    rule.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

// Quadrature on the reference d-simplex. Points are barycentric coordinates
// (lambda_0, ..., lambda_d) and weights sum to one, so that the integral over a
// simplex T is |T| * sum_q w_q f(x_q).
struct SimplexRule
{
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 4>> bary;
  std::vector<double> w;
  int size() const { return static_cast<int>(w.size()); }
};

namespace detail
{

// Collapsed-coordinate (conical product) rule, exact for polynomials of the
// requested total degree.
inline SimplexRule BuildSimplexRule(int dim, int degree)
{
  SimplexRule rule;
  rule.dim = dim;
  rule.degree = degree;
  auto npts = [](int deg) { return std::max(1, (deg + 2) / 2); };
  if (dim == 0)
  {
    rule.bary.push_back({1.0, 0.0, 0.0, 0.0});
    rule.w.push_back(1.0);
  }
  else if (dim == 1)
  {
    const LineRule g = GaussLegendre(npts(degree));
    for (std::size_t i = 0; i < g.x.size(); i++)
    {
      rule.bary.push_back({1.0 - g.x[i], g.x[i], 0.0, 0.0});
      rule.w.push_back(g.w[i]);
    }
  }
  else if (dim == 2)
  {
    const LineRule gu = GaussLegendre(npts(degree + 1)), gv = GaussLegendre(npts(degree));
    for (std::size_t i = 0; i < gu.x.size(); i++)
    {
      for (std::size_t j = 0; j < gv.x.size(); j++)
      {
        const double u = gu.x[i], v = gv.x[j];
        const double x = u, y = (1.0 - u) * v;
        rule.bary.push_back({1.0 - x - y, x, y, 0.0});
        rule.w.push_back(2.0 * gu.w[i] * gv.w[j] * (1.0 - u));
      }
    }
  }
  else if (dim == 3)
  {
    const LineRule gu = GaussLegendre(npts(degree + 2)), gv = GaussLegendre(npts(degree + 1)),
                   gw = GaussLegendre(npts(degree));
    for (std::size_t i = 0; i < gu.x.size(); i++)
    {
      for (std::size_t j = 0; j < gv.x.size(); j++)
      {
        for (std::size_t l = 0; l < gw.x.size(); l++)
        {
          const double u = gu.x[i], v = gv.x[j], s = gw.x[l];
          const double x = u, y = (1.0 - u) * v, z = (1.0 - u) * (1.0 - v) * s;
          rule.bary.push_back({1.0 - x - y - z, x, y, z});
          rule.w.push_back(6.0 * gu.w[i] * gv.w[j] * gw.w[l] * (1.0 - u) * (1.0 - u) *
                           (1.0 - v));
        }
      }
    }
  }
  else
  {
    throw Error("BuildSimplexRule: unsupported dimension");
  }
  return rule;
}

}  // namespace detail

inline constexpr int kMaxQuadratureDegree = 12;

inline const SimplexRule &GetSimplexRule(int dim, int degree)
{
  static const auto rules = []
  {
    std::array<std::array<SimplexRule, kMaxQuadratureDegree + 1>, 4> r;
    for (int d = 0; d <= 3; d++)
    {
      for (int p = 0; p <= kMaxQuadratureDegree; p++)
      {
        r[d][p] = detail::BuildSimplexRule(d, p);
      }
    }
    return r;
  }();
  if (dim < 0 || dim > 3 || degree < 0 || degree > kMaxQuadratureDegree)
  {
    throw Error("GetSimplexRule: unsupported dimension or degree");
  }
  return rules[dim][degree];
}

// Default orders used throughout: element integrals of discrete quantities
// against smooth data, and true-error evaluation.
inline constexpr int kAssemblyOrder = 4;
inline constexpr int kErrorOrder = 6;

}  // namespace feec

#endif  // FEEC_QUADRATURE_HPP
