// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "feec/generate.hpp"
#include "feec/refine.hpp"
#include "feec/spaces.hpp"

using namespace feec;

namespace
{

const double kPi = std::numbers::pi;

template <int Dim>
Eigen::MatrixXi Dense(const IntSparseMatrix &A)
{
  return Eigen::MatrixXi(A);
}

// Linear proxy field x -> A x + b with its exact derivative proxy.
template <int Dim>
FormField<Dim> LinearForm(int k, const Eigen::MatrixXd &A, const Eigen::VectorXd &b)
{
  FormField<Dim> f;
  f.k = k;
  f.value = [A, b](const Point<Dim> &x) -> Proxy { return Proxy(A * x + b); };
  f.d = [A, k](const Point<Dim> &) -> Proxy
  {
    if (k == 0)
    {
      return Proxy(A.row(0).transpose());
    }
    if (k == 1 && Dim == 2)
    {
      return MakeProxy({A(1, 0) - A(0, 1)});
    }
    if (k == 1)
    {
      return MakeProxy({A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1)});
    }
    return MakeProxy({A.trace()});
  };
  return f;
}

}  // namespace

TEST(Spaces, DofCountsAndConstraints)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 1);
  EXPECT_EQ(BuildSpace(cube, 1, Family::TrimmedP1, false).n_dofs(), 19);
  auto sq = GenerateStructured<2>(Domain::UnitSquare, 1).mark_gamma(GammaSelector::Whole());
  auto p1 = BuildSpace(sq, 0, Family::LagrangeP1, true);
  EXPECT_EQ(p1.n_dofs(), 4);
  EXPECT_EQ(p1.n_free(), 0);
  auto p0 = BuildSpace(cube, 3, Family::PiecewiseP0, false);
  EXPECT_EQ(p0.n_dofs(), cube.num_cells());
  EXPECT_THROW(BuildSpace(cube, 1, Family::LagrangeP1, false), Error);
  EXPECT_THROW(BuildSpace(cube, 2, Family::PiecewiseP0, false), Error);
  auto vec = BuildSpace(cube, 1, Family::VectorLagrangeP1, false);
  EXPECT_EQ(vec.n_dofs(), 8 * 3);

  // Constrained DOFs are exactly those carried by the closure of Gamma.
  auto c2 = GenerateStructured<3>(Domain::UnitCube, 2).mark_gamma(GammaSelector::Plane(2, 0.0));
  for (int k = 0; k <= 2; k++)
  {
    auto s = BuildSpace(c2, k, Family::TrimmedP1, true);
    for (int i = 0; i < s.n_dofs(); i++)
    {
      bool on = true;
      for (int v : c2.simplex(k, i))
      {
        on = on && c2.vertex(v)(2) == 0.0;
      }
      EXPECT_EQ(s.constrained(i), on);
    }
  }
}

TEST(Spaces, ComplexPropertyExact)
{
  auto check = [](const auto &mesh)
  {
    constexpr int n = std::decay_t<decltype(mesh)>::dim;
    for (int k = 0; k + 1 < n; k++)
    {
      auto sk = BuildSpace(mesh, k, Family::TrimmedP1, false);
      auto sk1 = BuildSpace(mesh, k + 1, Family::TrimmedP1, false);
      const IntSparseMatrix Dk = ExteriorDerivative(sk), Dk1 = ExteriorDerivative(sk1);
      const IntSparseMatrix DD = Dk1 * Dk;
      for (int i = 0; i < DD.outerSize(); i++)
      {
        for (IntSparseMatrix::InnerIterator it(DD, i); it; ++it)
        {
          EXPECT_EQ(it.value(), 0);
        }
      }
      for (int i = 0; i < Dk.outerSize(); i++)
      {
        for (IntSparseMatrix::InnerIterator it(Dk, i); it; ++it)
        {
          EXPECT_TRUE(it.value() == 1 || it.value() == -1);
        }
      }
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
}

TEST(Spaces, IncidenceOnTriangleAndRank)
{
  auto tri = Mesh2::Build({Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)},
                          {{0, 1, 2}});
  auto D0 = Dense<2>(ExteriorDerivative(BuildSpace(tri, 0, Family::LagrangeP1, false)));
  ASSERT_EQ(D0.rows(), 3);
  ASSERT_EQ(D0.cols(), 3);
  for (int r = 0; r < 3; r++)
  {
    EXPECT_EQ(D0.row(r).sum(), 0);
  }
  auto sq = GenerateStructured<2>(Domain::UnitSquare, 2);
  Eigen::MatrixXd D = Dense<2>(ExteriorDerivative(BuildSpace(sq, 0, Family::LagrangeP1, false)))
                          .cast<double>();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
  EXPECT_EQ(lu.rank(), sq.num_vertices() - 1);
}

TEST(Spaces, WhitneyDuality)
{
  // DOF_i(phi_j) = delta_ij on every cell, for all degrees.
  auto check = [](const auto &mesh)
  {
    constexpr int n = std::decay_t<decltype(mesh)>::dim;
    for (int k = 0; k <= n; k++)
    {
      auto s = BuildSpace(mesh, k, Family::TrimmedP1, false);
      std::vector<int> dofs;
      for (int c = 0; c < mesh.num_cells(); c++)
      {
        s.cell_dofs(c, dofs);
        for (std::size_t j = 0; j < dofs.size(); j++)
        {
          DiscreteField<n> phi(s);
          phi.coeffs(dofs[j]) = 1.0;
          const auto &g = mesh.cell_geometry(c);
          FormField<n> restricted;
          restricted.k = k;
          restricted.value = [&](const Point<n> &x) { return phi.evaluate(c, g.barycentric(x)); };
          for (std::size_t i = 0; i < dofs.size(); i++)
          {
            const auto x = s.carrier_points(dofs[i]);
            EXPECT_NEAR(DofFunctional<n>(k, x, restricted), i == j ? 1.0 : 0.0, 1e-12);
          }
        }
      }
    }
  };
  check(GenerateStructured<2>(Domain::UnitSquare, 1));
  check(GenerateStructured<3>(Domain::UnitCube, 1));
  check(BisectAll(GenerateStructured<3>(Domain::UnitCube, 1)));
}

TEST(Spaces, EvaluateProxy)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 2);
  auto s0 = BuildSpace(cube, 0, Family::LagrangeP1, false);
  DiscreteField<3> u(s0);
  for (int v = 0; v < cube.num_vertices(); v++)
  {
    u.coeffs(v) = cube.vertex(v)(0);
  }
  const std::array<double, 4> l{0.1, 0.2, 0.3, 0.4};
  for (int c = 0; c < cube.num_cells(); c++)
  {
    EXPECT_NEAR(u.evaluate(c, l)(0), cube.cell_geometry(c).map(l)(0), 1e-14);
  }
  EXPECT_THROW(u.evaluate(0, {1.5, -0.5, 0.0, 0.0}), Error);

  // Constants are reproduced by the canonical interpolant in every degree.
  const Proxy c1 = MakeProxy({0.3, -1.2, 2.0});
  for (int k : {1, 2})
  {
    auto s = BuildSpace(cube, k, Family::TrimmedP1, false);
    auto I = CanonicalInterpolate(s, ConstantForm<3>(k, c1));
    for (int c = 0; c < cube.num_cells(); c++)
    {
      EXPECT_NEAR((I.evaluate(c, {0.25, 0.25, 0.25, 0.25}) - c1).norm(), 0.0, 1e-13);
      EXPECT_NEAR((I.evaluate(c, {0.7, 0.1, 0.1, 0.1}) - c1).norm(), 0.0, 1e-13);
    }
  }
  auto s3 = BuildSpace(cube, 3, Family::TrimmedP1, false);
  auto I3 = CanonicalInterpolate(s3, ConstantForm<3>(3, MakeProxy({2.5})));
  EXPECT_NEAR(I3.evaluate(4, l)(0), 2.5, 1e-13);

  // A face field with unit DOF on one face has unit flux through it (oriented
  // by the ascending vertex order), computed by face quadrature from each side.
  auto s2 = BuildSpace(cube, 2, Family::TrimmedP1, false);
  for (int f : {0, 7, 20})
  {
    DiscreteField<3> phi(s2);
    phi.coeffs(f) = 1.0;
    auto fv = cube.simplex(2, f);
    const Eigen::Vector3d a = cube.vertex(fv[0]), b = cube.vertex(fv[1]), cc = cube.vertex(fv[2]);
    const Eigen::Vector3d n = (b - a).cross(cc - a).normalized();
    const double area = 0.5 * (b - a).cross(cc - a).norm();
    for (int cell : cube.face_cells(f))
    {
      if (cell < 0)
      {
        continue;
      }
      const auto &rule = GetSimplexRule(2, 4);
      double flux = 0.0;
      for (int q = 0; q < rule.size(); q++)
      {
        const Eigen::Vector3d x = rule.bary[q][0] * a + rule.bary[q][1] * b + rule.bary[q][2] * cc;
        flux += rule.w[q] * area * phi.evaluate_at(cell, x).dot(Proxy(n));
      }
      EXPECT_NEAR(flux, 1.0, 1e-13);
    }
  }
}

TEST(Spaces, CommutingDiagramLinearFields)
{
  Eigen::MatrixXd A3(3, 3);
  A3 << 0.4, -1.0, 0.3, 2.0, 0.1, -0.7, 0.5, 1.5, -0.2;
  Eigen::VectorXd b3(3);
  b3 << 0.2, -0.1, 0.9;
  auto cube = BisectAll(GenerateStructured<3>(Domain::UnitCube, 2));
  {
    Eigen::MatrixXd a(1, 3);
    a << 1.0, -2.0, 0.5;
    Eigen::VectorXd c(1);
    c << 0.3;
    auto s0 = BuildSpace(cube, 0, Family::LagrangeP1, false);
    auto s1 = BuildSpace(cube, 1, Family::TrimmedP1, false);
    auto f = LinearForm<3>(0, a, c);
    FormField<3> df = ConstantForm<3>(1, f.d(Point<3>::Zero()));
    Vector lhs = ToReal(ExteriorDerivative(s0)) * CanonicalInterpolate(s0, f).coeffs;
    EXPECT_LT((lhs - CanonicalInterpolate(s1, df).coeffs).lpNorm<Eigen::Infinity>(), 1e-13);
  }
  for (int k : {1, 2})
  {
    auto sk = BuildSpace(cube, k, Family::TrimmedP1, false);
    auto sk1 = BuildSpace(cube, k + 1, Family::TrimmedP1, false);
    auto f = LinearForm<3>(k, A3, b3);
    FormField<3> df = ConstantForm<3>(k + 1, f.d(Point<3>::Zero()));
    Vector lhs = ToReal(ExteriorDerivative(sk)) * CanonicalInterpolate(sk, f).coeffs;
    EXPECT_LT((lhs - CanonicalInterpolate(sk1, df).coeffs).lpNorm<Eigen::Infinity>(), 1e-13);
    // The piecewise derivative of the interpolant matches too.
    auto I = CanonicalInterpolate(sk, f);
    for (int c = 0; c < cube.num_cells(); c++)
    {
      EXPECT_LT((I.derivative(c) - df(Point<3>::Zero())).norm(), 1e-12);
    }
  }
  auto sq = GenerateStructured<2>(Domain::UnitSquare, 3);
  Eigen::MatrixXd A2(2, 2);
  A2 << 0.4, -1.0, 2.0, 0.1;
  Eigen::VectorXd b2(2);
  b2 << 0.2, -0.1;
  auto s1 = BuildSpace(sq, 1, Family::TrimmedP1, false);
  auto s2 = BuildSpace(sq, 2, Family::TrimmedP1, false);
  auto f = LinearForm<2>(1, A2, b2);
  FormField<2> df = ConstantForm<2>(2, f.d(Point<2>::Zero()));
  Vector lhs = ToReal(ExteriorDerivative(s1)) * CanonicalInterpolate(s1, f).coeffs;
  EXPECT_LT((lhs - CanonicalInterpolate(s2, df).coeffs).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Spaces, ConstrainedImageUnderD)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 2).mark_gamma(GammaSelector::Whole());
  for (int k = 0; k < 3; k++)
  {
    auto sk = BuildSpace(cube, k, Family::TrimmedP1, true);
    auto sk1 = BuildSpace(cube, k + 1, Family::TrimmedP1, true);
    const IntSparseMatrix D = ExteriorDerivative(sk);
    for (int r = 0; r < D.outerSize(); r++)
    {
      if (!sk1.constrained(r))
      {
        continue;
      }
      for (IntSparseMatrix::InnerIterator it(D, r); it; ++it)
      {
        EXPECT_TRUE(sk.constrained(it.col()));
      }
    }
  }
}

TEST(Spaces, QuasiInterpolationBasics)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 2).mark_gamma(GammaSelector::Whole());
  const Proxy c = MakeProxy({1.0, -0.5, 0.25});
  for (int k : {0, 1, 2, 3})
  {
    const Proxy ck = k == 0 || k == 3 ? MakeProxy({0.7}) : c;
    auto s = BuildSpace(cube, k, Family::TrimmedP1, false);
    auto Pi = QuasiInterpolate(s, ConstantForm<3>(k, ck));
    for (int cell = 0; cell < cube.num_cells(); cell++)
    {
      EXPECT_LT((Pi.evaluate(cell, {0.1, 0.2, 0.3, 0.4}) - ck).norm(), 1e-13);
    }
  }
  // Trace-free on Gamma => Gamma DOFs vanish exactly.
  auto bump = [](const Eigen::Vector3d &x)
  { return x(0) * (1 - x(0)) * x(1) * (1 - x(1)) * x(2) * (1 - x(2)); };
  for (int k : {0, 1, 2})
  {
    FormField<3> v;
    v.k = k;
    v.value = [&, k](const Eigen::Vector3d &x) -> Proxy
    {
      const double s = std::sin(kPi * x(0)) + 2.0;
      if (k == 0)
      {
        return MakeProxy({bump(x) * s});
      }
      return MakeProxy({bump(x) * s, bump(x) * x(1), -bump(x)});
    };
    auto s = BuildSpace(cube, k, Family::TrimmedP1, true);
    auto Pi = QuasiInterpolate(s, v);
    for (int i = 0; i < s.n_dofs(); i++)
    {
      if (s.constrained(i))
      {
        EXPECT_EQ(Pi.coeffs(i), 0.0);
      }
    }
  }
}

TEST(Spaces, ClementMatchesPiAtZero)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 2);
  FormField<3> v;
  v.k = 0;
  v.value = [](const Eigen::Vector3d &x) { return MakeProxy({std::sin(x(0)) * std::exp(x(1) - x(2))}); };
  auto pi = QuasiInterpolate(BuildSpace(cube, 0, Family::LagrangeP1, false), v);
  auto cl = ClementInterpolate(BuildSpace(cube, 0, Family::VectorLagrangeP1, false), v);
  EXPECT_EQ(pi.coeffs, cl.coeffs);
  auto vec = BuildSpace(cube, 1, Family::VectorLagrangeP1, false);
  auto cc = ClementInterpolate(vec, ConstantForm<3>(1, MakeProxy({1.0, 2.0, 3.0})));
  for (int i = 0; i < vec.n_dofs(); i++)
  {
    EXPECT_NEAR(cc.coeffs(i), 1.0 + i % 3, 1e-14);
  }
}

TEST(Spaces, NodalEmbeddingReproducesLinearFields)
{
  auto cube = GenerateStructured<3>(Domain::UnitCube, 2);
  Eigen::MatrixXd A(3, 3);
  A << 0.4, -1.0, 0.3, 2.0, 0.1, -0.7, 0.5, 1.5, -0.2;
  Eigen::VectorXd b(3);
  b << 0.2, -0.1, 0.9;
  for (int k : {1, 2})
  {
    auto w = BuildSpace(cube, k, Family::TrimmedP1, false);
    auto vp = BuildSpace(cube, k, Family::VectorLagrangeP1, false);
    auto f = LinearForm<3>(k, A, b);
    Vector nodal(vp.n_dofs());
    for (int v = 0; v < cube.num_vertices(); v++)
    {
      nodal.segment(3 * v, 3) = A * cube.vertex(v) + b;
    }
    Vector emb = NodalEmbedding(w, vp) * nodal;
    EXPECT_LT((emb - CanonicalInterpolate(w, f).coeffs).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}
