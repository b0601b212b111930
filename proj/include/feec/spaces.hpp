// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_SPACES_HPP
#define FEEC_SPACES_HPP

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "feec/forms.hpp"
#include "feec/mesh.hpp"
#include "feec/quadrature.hpp"

namespace feec
{

enum class Family
{
  TrimmedP1,         // Whitney forms, one DOF per k-simplex
  LagrangeP1,        // k = 0
  PiecewiseP0,       // k = n, indicator basis
  VectorLagrangeP1,  // C(n,k) copies of scalar P1, proxy of H^1 k-forms
};

inline std::string FamilyName(Family f)
{
  switch (f)
  {
    case Family::TrimmedP1:
      return "TrimmedP1";
    case Family::LagrangeP1:
      return "LagrangeP1";
    case Family::PiecewiseP0:
      return "PiecewiseP0";
    case Family::VectorLagrangeP1:
      return "VectorLagrangeP1";
  }
  return {};
}

namespace detail
{

// 3D cross product and 2D scalar cross product on gradient columns.
template <int Dim>
Proxy Wedge2(const Point<Dim> &a, const Point<Dim> &b)
{
  if constexpr (Dim == 2)
  {
    return MakeProxy({a(0) * b(1) - a(1) * b(0)});
  }
  else
  {
    return a.cross(b);
  }
}

inline double Det3(const Eigen::Vector3d &a, const Eigen::Vector3d &b, const Eigen::Vector3d &c)
{
  return a.dot(b.cross(c));
}

}  // namespace detail

// Whitney basis proxy of the local k-subsimplex `sub` (local vertex indices in
// ascending order) at barycentric point `l`, and the proxy of its derivative.
template <int Dim>
Proxy WhitneyValue(const CellGeometry<Dim> &g, int k, std::span<const int> sub,
                   const std::array<double, 4> &l)
{
  const auto &G = g.grad_lambda;
  switch (k)
  {
    case 0:
      return MakeProxy({l[sub[0]]});
    case 1:
    {
      const int a = sub[0], b = sub[1];
      return Proxy(l[a] * G.col(b) - l[b] * G.col(a));
    }
    case 2:
    {
      if constexpr (Dim == 3)
      {
        const int a = sub[0], b = sub[1], c = sub[2];
        const Eigen::Vector3d ga = G.col(a), gb = G.col(b), gc = G.col(c);
        return Proxy(2.0 * (l[a] * gb.cross(gc) - l[b] * ga.cross(gc) + l[c] * ga.cross(gb)));
      }
      break;
    }
    default:
      break;
  }
  if (k == Dim)
  {
    // n! dl_1 ^ ... ^ dl_n: constant, equal to the orientation sign over |T|.
    return MakeProxy({(g.det > 0 ? 1.0 : -1.0) / g.volume});
  }
  throw Error("WhitneyValue: unsupported degree");
}

template <int Dim>
Proxy WhitneyDerivative(const CellGeometry<Dim> &g, int k, std::span<const int> sub)
{
  const auto &G = g.grad_lambda;
  if (k == 0)
  {
    return Proxy(G.col(sub[0]));
  }
  if (k == Dim)
  {
    throw Error("WhitneyDerivative: d of an n-form");
  }
  if (k == 1)
  {
    const Point<Dim> ga = G.col(sub[0]), gb = G.col(sub[1]);
    return Proxy(2.0 * detail::Wedge2<Dim>(ga, gb));
  }
  if constexpr (Dim == 3)
  {
    return MakeProxy({6.0 * detail::Det3(G.col(sub[0]), G.col(sub[1]), G.col(sub[2]))});
  }
  throw Error("WhitneyDerivative: unsupported degree");
}

// Oriented k-vector of a simplex with vertices x_0..x_k (ascending global ids):
// the DOF of a constant proxy c is c . OrientedMeasure.
template <int Dim>
Proxy OrientedMeasure(int k, std::span<const Point<Dim>> x)
{
  switch (k)
  {
    case 0:
      return MakeProxy({1.0});
    case 1:
      if (k < Dim)
      {
        return Proxy(x[1] - x[0]);
      }
      break;
    case 2:
      if constexpr (Dim == 3)
      {
        return Proxy(0.5 * (x[1] - x[0]).cross(x[2] - x[0]));
      }
      break;
    default:
      break;
  }
  if (k == Dim)
  {
    Eigen::Matrix<double, Dim, Dim> J;
    for (int i = 0; i < Dim; i++)
    {
      J.col(i) = x[i + 1] - x[0];
    }
    return MakeProxy({J.determinant() / Factorial(Dim)});
  }
  throw Error("OrientedMeasure: unsupported degree");
}

template <int Dim>
class FormSpace
{
public:
  FormSpace() = default;
  FormSpace(const SimplicialMesh<Dim> &mesh, int k, Family family, bool gamma)
      : mesh_(&mesh), k_(k), family_(family), gamma_(gamma)
  {
    if (k < 0 || k > Dim)
    {
      throw Error("build_space: form degree out of range");
    }
    if ((family == Family::LagrangeP1 && k != 0) || (family == Family::PiecewiseP0 && k != Dim))
    {
      throw Error("build_space: family " + FamilyName(family) + " incompatible with k=" +
                  std::to_string(k));
    }
    components_ = family == Family::VectorLagrangeP1 ? ProxyComponents(k, Dim) : 1;
    switch (family)
    {
      case Family::TrimmedP1:
      case Family::LagrangeP1:
        n_dofs_ = mesh.num_simplices(k);
        break;
      case Family::PiecewiseP0:
        n_dofs_ = mesh.num_cells();
        break;
      case Family::VectorLagrangeP1:
        n_dofs_ = mesh.num_vertices() * components_;
        break;
    }
    constrained_.assign(n_dofs_, 0);
    if (gamma)
    {
      for (int i = 0; i < n_dofs_; i++)
      {
        constrained_[i] = mesh.in_gamma(carrier_dim(), carrier(i));
      }
    }
    free_index_.assign(n_dofs_, -1);
    for (int i = 0; i < n_dofs_; i++)
    {
      if (!constrained_[i])
      {
        free_index_[i] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(i);
      }
    }
    if (family == Family::TrimmedP1 || family == Family::LagrangeP1)
    {
      local_subsets_ = Combinations(Dim + 1, k + 1);
    }
  }

  const SimplicialMesh<Dim> &mesh() const { return *mesh_; }
  int k() const { return k_; }
  Family family() const { return family_; }
  bool gamma() const { return gamma_; }
  int n_dofs() const { return n_dofs_; }
  int components() const { return components_; }
  int proxy_size() const { return ProxyComponents(k_, Dim); }
  bool is_whitney() const { return family_ == Family::TrimmedP1 || family_ == Family::LagrangeP1; }

  bool constrained(int i) const { return constrained_[i] != 0; }
  const std::vector<int> &free_dofs() const { return free_dofs_; }
  int free_index(int i) const { return free_index_[i]; }
  int n_free() const { return static_cast<int>(free_dofs_.size()); }

  // Carrier entity of a DOF: (dimension, index).
  int carrier_dim() const
  {
    switch (family_)
    {
      case Family::TrimmedP1:
      case Family::LagrangeP1:
        return k_;
      case Family::PiecewiseP0:
        return Dim;
      case Family::VectorLagrangeP1:
        return 0;
    }
    return 0;
  }
  int carrier(int i) const { return family_ == Family::VectorLagrangeP1 ? i / components_ : i; }

  int local_size() const
  {
    switch (family_)
    {
      case Family::TrimmedP1:
      case Family::LagrangeP1:
        return Binomial(Dim + 1, k_ + 1);
      case Family::PiecewiseP0:
        return 1;
      case Family::VectorLagrangeP1:
        return (Dim + 1) * components_;
    }
    return 0;
  }

  void cell_dofs(int c, std::vector<int> &out) const
  {
    out.clear();
    switch (family_)
    {
      case Family::TrimmedP1:
      case Family::LagrangeP1:
      {
        auto e = mesh_->cell_entities(k_, c);
        out.assign(e.begin(), e.end());
        break;
      }
      case Family::PiecewiseP0:
        out.push_back(c);
        break;
      case Family::VectorLagrangeP1:
        for (int v : mesh_->simplex(Dim, c))
        {
          for (int j = 0; j < components_; j++)
          {
            out.push_back(v * components_ + j);
          }
        }
        break;
    }
  }

  // Local basis proxies (and derivative proxies) at a barycentric point.
  void basis(int c, const std::array<double, 4> &l, std::vector<Proxy> &values) const
  {
    const auto &g = mesh_->cell_geometry(c);
    values.clear();
    switch (family_)
    {
      case Family::TrimmedP1:
      case Family::LagrangeP1:
        for (const auto &s : local_subsets_)
        {
          values.push_back(WhitneyValue<Dim>(g, k_, s, l));
        }
        break;
      case Family::PiecewiseP0:
        values.push_back(MakeProxy({1.0}));
        break;
      case Family::VectorLagrangeP1:
        for (int a = 0; a <= Dim; a++)
        {
          for (int j = 0; j < components_; j++)
          {
            Proxy p = Proxy::Zero(components_);
            p(j) = l[a];
            values.push_back(p);
          }
        }
        break;
    }
  }

  // Derivative proxies of the local basis; constant on each cell for Whitney forms.
  void basis_derivative(int c, std::vector<Proxy> &values) const
  {
    if (!is_whitney() || k_ == Dim)
    {
      throw Error("basis_derivative: only for Whitney forms with k < n");
    }
    const auto &g = mesh_->cell_geometry(c);
    values.clear();
    for (const auto &s : local_subsets_)
    {
      values.push_back(WhitneyDerivative<Dim>(g, k_, s));
    }
  }

  // Vertex coordinates of the DOF carrier simplex, ascending ids.
  std::vector<Point<Dim>> carrier_points(int i) const
  {
    std::vector<Point<Dim>> x;
    for (int v : mesh_->simplex(carrier_dim(), carrier(i)))
    {
      x.push_back(mesh_->vertex(v));
    }
    return x;
  }

private:
  const SimplicialMesh<Dim> *mesh_ = nullptr;
  int k_ = 0;
  Family family_ = Family::TrimmedP1;
  bool gamma_ = false;
  int n_dofs_ = 0;
  int components_ = 1;
  std::vector<char> constrained_;
  std::vector<int> free_dofs_, free_index_;
  std::vector<std::vector<int>> local_subsets_;
};

template <int Dim>
FormSpace<Dim> BuildSpace(const SimplicialMesh<Dim> &mesh, int k, Family family, bool gamma)
{
  return FormSpace<Dim>(mesh, k, family, gamma);
}

template <int Dim>
struct DiscreteField
{
  const FormSpace<Dim> *space = nullptr;
  Vector coeffs;

  DiscreteField() = default;
  DiscreteField(const FormSpace<Dim> &s, Vector c) : space(&s), coeffs(std::move(c))
  {
    if (coeffs.size() != s.n_dofs())
    {
      throw Error("DiscreteField: coefficient length mismatch");
    }
  }
  explicit DiscreteField(const FormSpace<Dim> &s) : space(&s), coeffs(Vector::Zero(s.n_dofs())) {}

  Proxy evaluate(int c, const std::array<double, 4> &l) const
  {
    constexpr double tol = 1e-12;
    for (int i = 0; i <= Dim; i++)
    {
      if (l[i] < -tol)
      {
        throw Error("evaluate_proxy: point outside cell");
      }
    }
    thread_local std::vector<int> dofs;
    thread_local std::vector<Proxy> phi;
    space->cell_dofs(c, dofs);
    space->basis(c, l, phi);
    Proxy v = Proxy::Zero(space->proxy_size());
    for (std::size_t i = 0; i < dofs.size(); i++)
    {
      v += coeffs(dofs[i]) * phi[i];
    }
    return v;
  }

  // Proxy of d of the field on cell c (constant for Whitney forms).
  Proxy derivative(int c) const
  {
    thread_local std::vector<int> dofs;
    thread_local std::vector<Proxy> dphi;
    space->cell_dofs(c, dofs);
    space->basis_derivative(c, dphi);
    Proxy v = Proxy::Zero(ProxyComponents(space->k() + 1, Dim));
    for (std::size_t i = 0; i < dofs.size(); i++)
    {
      v += coeffs(dofs[i]) * dphi[i];
    }
    return v;
  }

  Proxy evaluate_at(int c, const Point<Dim> &x) const
  {
    return evaluate(c, space->mesh().cell_geometry(c).barycentric(x));
  }
};

// ASCII dump as "dof value" lines.
template <int Dim>
void WriteField(std::ostream &os, const DiscreteField<Dim> &u)
{
  for (Eigen::Index i = 0; i < u.coeffs.size(); i++)
  {
    os << i << " " << FormatDouble(u.coeffs(i)) << "\n";
  }
}

// Signed incidence matrix D_k: rows (k+1)-simplices, columns k-simplices.
template <int Dim>
IntSparseMatrix ExteriorDerivative(const FormSpace<Dim> &space)
{
  if (!space.is_whitney())
  {
    throw Error("exterior_derivative: space must be Whitney (TrimmedP1/LagrangeP1)");
  }
  const int k = space.k();
  if (k >= Dim)
  {
    throw Error("exterior_derivative: no (k+1)-forms for k = n");
  }
  const auto &mesh = space.mesh();
  const int rows = mesh.num_simplices(k + 1);
  std::vector<Eigen::Triplet<int>> trips;
  trips.reserve(static_cast<std::size_t>(rows) * (k + 2));
  std::array<int, 4> face{};
  for (int s = 0; s < rows; s++)
  {
    auto t = mesh.simplex(k + 1, s);
    for (int j = 0; j <= k + 1; j++)
    {
      for (int i = 0, p = 0; i <= k + 1; i++)
      {
        if (i != j)
        {
          face[p++] = t[i];
        }
      }
      const int col = mesh.find_simplex(k, std::span<const int>(face.data(), k + 1));
      trips.emplace_back(s, col, j % 2 == 0 ? 1 : -1);
    }
  }
  IntSparseMatrix D(rows, mesh.num_simplices(k));
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

inline SparseMatrix ToReal(const IntSparseMatrix &A)
{
  return A.cast<double>();
}

// DOF functional of a k-form on a k-simplex with the given vertex coordinates.
template <int Dim>
double DofFunctional(int k, std::span<const Point<Dim>> x, const FormField<Dim> &v,
                     int degree = kAssemblyOrder)
{
  const Proxy m = OrientedMeasure<Dim>(k, x);
  if (k == 0)
  {
    return v(x[0])(0);
  }
  const auto &rule = GetSimplexRule(k, degree);
  double s = 0.0;
  for (int q = 0; q < rule.size(); q++)
  {
    Point<Dim> p = Point<Dim>::Zero();
    for (int i = 0; i <= k; i++)
    {
      p += rule.bary[q][i] * x[i];
    }
    s += rule.w[q] * v(p).dot(m);
  }
  return s;
}

// Canonical (DOF) interpolation into a Whitney space.
template <int Dim>
DiscreteField<Dim> CanonicalInterpolate(const FormSpace<Dim> &space, const FormField<Dim> &v,
                                        int degree = kAssemblyOrder)
{
  if (!space.is_whitney())
  {
    throw Error("canonical interpolation: Whitney space required");
  }
  DiscreteField<Dim> u(space);
  for (int i = 0; i < space.n_dofs(); i++)
  {
    const auto x = space.carrier_points(i);
    u.coeffs(i) = DofFunctional<Dim>(space.k(), x, v, degree);
  }
  return u;
}

namespace detail
{

// Average of the proxy of v over cell c.
template <int Dim>
Proxy CellAverage(const SimplicialMesh<Dim> &mesh, int c, const FormField<Dim> &v, int degree)
{
  const auto &g = mesh.cell_geometry(c);
  const auto &rule = GetSimplexRule(Dim, degree);
  Proxy s;
  for (int q = 0; q < rule.size(); q++)
  {
    const Proxy val = rule.w[q] * v(g.map(rule.bary[q]));
    s = q == 0 ? val : Proxy(s + val);
  }
  return s;
}

// Tangential-trace proxy of a k-form on a face with unit normal nu.
template <int Dim>
Proxy TangentialTrace(int k, const Proxy &v, const Point<Dim> &nu)
{
  if (k == 0)
  {
    return v;
  }
  if (k == 1)
  {
    return Proxy(v - v.dot(Proxy(nu)) * Proxy(nu));
  }
  if (k == 2 && Dim == 3)
  {
    return Proxy(v.dot(Proxy(nu)) * Proxy(nu));
  }
  throw Error("TangentialTrace: unsupported degree");
}

template <int Dim>
Proxy FaceTraceAverage(const FaceGeometry<Dim> &f, int k, const FormField<Dim> &v, int degree)
{
  const auto &rule = GetSimplexRule(Dim - 1, degree);
  Proxy s;
  for (int q = 0; q < rule.size(); q++)
  {
    const Proxy val = rule.w[q] * TangentialTrace<Dim>(k, v(f.map(rule.bary[q])), f.normal);
    s = q == 0 ? val : Proxy(s + val);
  }
  return s;
}

// sigma_i selection: smallest-id adjacent cell, or with gamma the smallest-id
// Gamma face, for every entity of dimension d. Returned as (is_face, id).
template <int Dim>
std::vector<std::pair<bool, int>> SelectSigma(const SimplicialMesh<Dim> &mesh, int d, bool gamma)
{
  std::vector<std::pair<bool, int>> sigma(mesh.num_simplices(d), {false, -1});
  if (gamma && d < Dim)
  {
    const auto subsets = Combinations(Dim, d + 1);
    for (int f = 0; f < mesh.num_faces(); f++)
    {
      if (mesh.boundary_tag(f) != BoundaryTag::GammaEssential)
      {
        continue;
      }
      auto fv = mesh.simplex(Dim - 1, f);
      for (const auto &s : subsets)
      {
        std::array<int, 4> t{};
        for (int i = 0; i <= d; i++)
        {
          t[i] = fv[s[i]];
        }
        const int e = mesh.find_simplex(d, std::span<const int>(t.data(), d + 1));
        if (sigma[e].second < 0)
        {
          sigma[e] = {true, f};
        }
      }
    }
  }
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    for (int e : mesh.cell_entities(d, c))
    {
      if (sigma[e].second < 0)
      {
        sigma[e] = {false, c};
      }
    }
  }
  return sigma;
}

}  // namespace detail

// Quasi-interpolation Pi_h^k: DOF i is the DOF functional of the L2 projection
// of v onto constants over sigma_i (an adjacent cell, or a Gamma face when the
// carrier lies in the closure of Gamma).
template <int Dim>
DiscreteField<Dim> QuasiInterpolate(const FormSpace<Dim> &space, const FormField<Dim> &v,
                                    int degree = kAssemblyOrder)
{
  if (!space.is_whitney())
  {
    throw Error("quasi_interpolate_pih: Whitney space required");
  }
  const auto &mesh = space.mesh();
  const int k = space.k();
  const auto sigma = detail::SelectSigma(mesh, k, space.gamma());
  std::vector<Proxy> cell_avg(mesh.num_cells()), face_avg(mesh.num_faces());
  std::vector<char> have_cell(mesh.num_cells(), 0), have_face(mesh.num_faces(), 0);
  DiscreteField<Dim> u(space);
  for (int i = 0; i < space.n_dofs(); i++)
  {
    const auto [on_face, id] = sigma[i];
    Proxy q;
    if (on_face)
    {
      if (!have_face[id])
      {
        face_avg[id] = detail::FaceTraceAverage(mesh.face_geometry(id), k, v, degree);
        have_face[id] = 1;
      }
      q = face_avg[id];
    }
    else
    {
      if (!have_cell[id])
      {
        cell_avg[id] = detail::CellAverage(mesh, id, v, degree);
        have_cell[id] = 1;
      }
      q = cell_avg[id];
    }
    const auto x = space.carrier_points(i);
    u.coeffs(i) = q.dot(OrientedMeasure<Dim>(k, x));
  }
  return u;
}

// Componentwise Clement-type interpolation into VectorLagrangeP1 with the same
// sigma_i averaging as QuasiInterpolate, so that both agree for k = 0.
template <int Dim>
DiscreteField<Dim> ClementInterpolate(const FormSpace<Dim> &space, const FormField<Dim> &v,
                                      int degree = kAssemblyOrder)
{
  if (space.family() != Family::VectorLagrangeP1)
  {
    throw Error("clement_interpolate: VectorLagrangeP1 space required");
  }
  const auto &mesh = space.mesh();
  const auto sigma = detail::SelectSigma(mesh, 0, space.gamma());
  const int nc = space.components();
  DiscreteField<Dim> u(space);
  for (int vtx = 0; vtx < mesh.num_vertices(); vtx++)
  {
    const auto [on_face, id] = sigma[vtx];
    Proxy q;
    if (on_face)
    {
      const auto &f = mesh.face_geometry(id);
      const auto &rule = GetSimplexRule(Dim - 1, degree);
      q = Proxy::Zero(nc);
      for (int p = 0; p < rule.size(); p++)
      {
        q += rule.w[p] * v(f.map(rule.bary[p]));
      }
    }
    else
    {
      q = detail::CellAverage(mesh, id, v, degree);
    }
    for (int j = 0; j < nc; j++)
    {
      u.coeffs(vtx * nc + j) = q(j);
    }
  }
  return u;
}

// Nodal embedding of VectorLagrangeP1 (k-form proxies) into the Whitney
// k-forms: canonical DOFs of piecewise linear vector fields, exact.
template <int Dim>
SparseMatrix NodalEmbedding(const FormSpace<Dim> &whitney, const FormSpace<Dim> &vector_p1)
{
  if (!whitney.is_whitney() || vector_p1.family() != Family::VectorLagrangeP1 ||
      whitney.k() != vector_p1.k())
  {
    throw Error("NodalEmbedding: incompatible spaces");
  }
  const auto &mesh = whitney.mesh();
  const int k = whitney.k();
  const int nc = vector_p1.components();
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < whitney.n_dofs(); i++)
  {
    const auto x = whitney.carrier_points(i);
    const Proxy m = OrientedMeasure<Dim>(k, x);
    auto verts = mesh.simplex(k, i);
    for (int v : verts)
    {
      for (int j = 0; j < nc; j++)
      {
        // Integral of lambda_v over the simplex is 1/(k+1) of its measure.
        const double w = k == 0 ? 1.0 : m(j) / (k + 1);
        if (w != 0.0)
        {
          trips.emplace_back(i, v * nc + j, w);
        }
      }
    }
  }
  SparseMatrix P(whitney.n_dofs(), vector_p1.n_dofs());
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

}  // namespace feec

#endif  // FEEC_SPACES_HPP
