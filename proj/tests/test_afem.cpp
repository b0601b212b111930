// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "feec/afem.hpp"
#include "feec/problems.hpp"

using namespace feec;

TEST(Dorfler, SimpleCases)
{
  EXPECT_EQ(DorflerMark(std::vector<double>{1, 0, 2, 3}, 1.0), (std::vector<int>{0, 2, 3}));
  EXPECT_EQ(DorflerMark(std::vector<double>{0.1, 10, 0.2}, 0.9), (std::vector<int>{1}));
  EXPECT_TRUE(DorflerMark(std::vector<double>{0, 0}, 0.5).empty());
  // Ties go to the lower cell id.
  EXPECT_EQ(DorflerMark(std::vector<double>{1, 1, 1, 1}, 0.5), (std::vector<int>{0}));
  EXPECT_THROW(DorflerMark(std::vector<double>{1}, 0.0), Error);
  EXPECT_THROW(DorflerMark(std::vector<double>{1}, 1.5), Error);
}

TEST(Dorfler, MinimalCardinalityAgainstExhaustiveSearch)
{
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; trial++)
  {
    const int n = 10;
    std::vector<double> eta(n);
    double total = 0.0;
    for (auto &v : eta)
    {
      v = U(gen);
      total += v * v;
    }
    const double theta = 0.2 + 0.7 * U(gen);
    const auto marked = DorflerMark(eta, theta);
    double got = 0.0;
    for (int c : marked)
    {
      got += eta[c] * eta[c];
    }
    EXPECT_GE(got, theta * theta * total * (1 - 1e-12));
    int best = n + 1;
    for (int mask = 0; mask < (1 << n); mask++)
    {
      double s = 0.0;
      for (int i = 0; i < n; i++)
      {
        if (mask >> i & 1)
        {
          s += eta[i] * eta[i];
        }
      }
      if (s >= theta * theta * total)
      {
        best = std::min(best, __builtin_popcount(mask));
      }
    }
    EXPECT_EQ(static_cast<int>(marked.size()), best);
  }
}

TEST(TrueError, InterpolantOfConstantIsExact)
{
  ProblemSpec<3> p;
  p.kind = ProblemKind::HdPositive;
  p.k = 1;
  p.f = ConstantForm<3>(1, MakeProxy({1, 2, 3}));
  p.u_exact = ConstantForm<3>(1, MakeProxy({1, 2, 3}));
  auto mesh = GenerateStructured<3>(Domain::UnitCube, 2);
  auto D = SolveProblem(p, mesh);
  D.u = CanonicalInterpolate(D.spaces->trial, *p.u_exact);
  EXPECT_LT(ComputeTrueError(p, D).total, 1e-10);
  p.u_exact.reset();
  EXPECT_THROW(ComputeTrueError(p, D), Error);
}

TEST(TrueError, FirstOrderRateOnMaxwellCube)
{
  auto p = MakeProblem<3>("maxwell_cube");
  std::vector<double> lh, le;
  for (int m : {2, 3, 4})
  {
    auto mesh = GenerateStructured<3>(Domain::UnitCube, m).mark_gamma(p.gamma);
    auto D = SolveProblem(p, mesh);
    EXPECT_LE(D.galerkin_residual(), 1e-9 * D.system.b.norm());
    lh.push_back(std::log(1.0 / m));
    le.push_back(std::log(ComputeTrueError(p, D).total));
  }
  const double mh = (lh[0] + lh[1] + lh[2]) / 3, me = (le[0] + le[1] + le[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; i++)
  {
    num += (lh[i] - mh) * (le[i] - me);
    den += (lh[i] - mh) * (lh[i] - mh);
  }
  EXPECT_NEAR(num / den, 1.0, 0.25);
}

TEST(Afem, SingleIterationGivesOneRow)
{
  auto p = MakeProblem<2>("reaction_diffusion_square");
  AfemOptions opt;
  opt.max_iters = 1;
  auto r = AfemLoop(p, GenerateStructured<2>(Domain::UnitSquare, 2).mark_gamma(p.gamma), opt);
  ASSERT_EQ(r.history.rows.size(), 1u);
  EXPECT_EQ(r.history.rows[0].marked, 0);
  const auto e = Effectivity(r.history);
  EXPECT_DOUBLE_EQ(e.ratio(), 1.0);
}

TEST(Afem, EstimatorDecreasesOnSmoothProblem)
{
  auto p = MakeProblem<2>("maxwell_square");
  AfemOptions opt;
  opt.max_iters = 5;
  opt.theta = 0.5;
  auto r = AfemLoop(p, GenerateStructured<2>(Domain::UnitSquare, 2).mark_gamma(p.gamma), opt);
  ASSERT_EQ(r.history.rows.size(), 5u);
  for (std::size_t i = 1; i < r.history.rows.size(); i++)
  {
    EXPECT_LT(r.history.rows[i].eta, r.history.rows[i - 1].eta);
    EXPECT_GT(r.history.rows[i].ndofs, r.history.rows[i - 1].ndofs);
  }
  for (const auto &row : r.history.rows)
  {
    EXPECT_LE(row.galerkin, 1e-9 * row.rhs_norm);
    EXPECT_GE(row.error->total, 0.0);
  }
  EXPECT_TRUE(r.final_mesh.audit().empty());
}

TEST(Afem, ExactSolutionStopsAtFirstIteration)
{
  ProblemSpec<3> p;
  p.kind = ProblemKind::HdPositive;
  p.k = 2;
  p.kappa = 4.0;
  p.f = ConstantForm<3>(2, MakeProxy({4, 0, -8}));
  p.u_exact = ConstantForm<3>(2, MakeProxy({1, 0, -2}));
  AfemOptions opt;
  opt.max_iters = 5;
  opt.tol = 1e-9;
  auto r = AfemLoop(p, GenerateStructured<3>(Domain::UnitCube, 1), opt);
  ASSERT_EQ(r.history.rows.size(), 1u);
  EXPECT_LE(r.history.rows[0].eta, 1e-9);
}

TEST(Afem, EffectivitySummary)
{
  AfemHistory h;
  for (int i = 0; i < 3; i++)
  {
    AfemRow row;
    row.eta = 0.5 * (i + 1);
    row.error = TrueError{0.5 * (i + 1), 0, 0};
    h.rows.push_back(row);
  }
  auto e = Effectivity(h);
  for (double v : e.values)
  {
    EXPECT_DOUBLE_EQ(v, 1.0);
  }
  h.rows[1].error->total = 0.0;
  EXPECT_TRUE(Effectivity(h).infinite);
  h.rows[1].error.reset();
  EXPECT_THROW(Effectivity(h), Error);
}

TEST(Afem, HistoryCsvIsReproducible)
{
  auto p = MakeProblem<2>("mixed_poisson_square");
  AfemOptions opt;
  opt.max_iters = 3;
  auto run = [&]
  {
    auto r = AfemLoop(p, GenerateStructured<2>(Domain::UnitSquare, 2), opt);
    std::ostringstream os;
    WriteHistoryCsv(os, r.history);
    WriteEstimatorCsv(os, r.final_report);
    return os.str();
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  EXPECT_EQ(a.substr(0, a.find('\n')), "iter,ndofs,eta,osc,err_total,err_sigma,err_u,effectivity,iters,seconds");
}

TEST(Afem, ReferenceErrorOnSingularProblem)
{
  auto p = MakeProblem<2>("lshape_singular");
  AfemOptions opt;
  opt.max_iters = 2;
  opt.reference = ReferenceMode::Finer;
  auto r = AfemLoop(p, GenerateStructured<2>(Domain::LShape, 2).mark_gamma(p.gamma), opt);
  EXPECT_TRUE(r.history.approx);
  for (const auto &row : r.history.rows)
  {
    ASSERT_TRUE(row.error.has_value());
    EXPECT_GT(row.error->total, 0.0);
    EXPECT_GT(row.effectivity, 0.5);
    EXPECT_LT(row.effectivity, 50.0);
  }
}

TEST(Afem, RefinementOnlyOnGammaDoesNotStallHistory)
{
  // Small theta marks boundary cells whose bisection adds only constrained
  // vertices; the loop must keep refining until the space grows.
  auto p = MakeProblem<2>("lshape_singular");
  AfemOptions opt;
  opt.reference = ReferenceMode::None;
  opt.theta = 0.3;
  opt.max_iters = 40;
  auto r = AfemLoop(p, GenerateStructured<2>(Domain::LShape, 2).mark_gamma(p.gamma), opt);
  ASSERT_EQ(r.history.rows.size(), 40u);
  for (size_t i = 1; i < r.history.rows.size(); i++)
  {
    EXPECT_GT(r.history.rows[i].ndofs, r.history.rows[i - 1].ndofs);
    EXPECT_EQ(r.history.rows[i].iter, static_cast<int>(i) + 1);
  }
}
