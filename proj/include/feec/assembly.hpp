// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_ASSEMBLY_HPP
#define FEEC_ASSEMBLY_HPP

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "feec/spaces.hpp"

namespace feec
{

enum class ProblemKind
{
  HdPositive,
  HodgeLaplacian,
  ReactionDiffusion
};

// Piecewise constant coefficient: a scalar, or a function sampled at cell centroids.
template <int Dim>
struct Coefficient
{
  double value = 1.0;
  std::function<double(const Point<Dim> &)> field;

  Coefficient() = default;
  Coefficient(double v) : value(v) {}  // NOLINT: implicit from scalar is intended

  bool is_constant() const { return !field; }
  double operator()(const SimplicialMesh<Dim> &mesh, int c) const
  {
    return field ? field(mesh.cell_geometry(c).centroid) : value;
  }
};

template <int Dim>
struct ProblemSpec
{
  ProblemKind kind = ProblemKind::HdPositive;
  int k = 0;
  Coefficient<Dim> eps, kappa;
  FormField<Dim> f;
  GammaSelector gamma = GammaSelector::Empty();
  std::optional<FormField<Dim>> u_exact;      // with d when available
  std::optional<FormField<Dim>> sigma_exact;  // mixed problems

  void validate() const
  {
    if (f.k != k)
    {
      throw Error("ProblemSpec: load degree does not match k");
    }
    switch (kind)
    {
      case ProblemKind::HdPositive:
        if (k < 0 || k > Dim - 1)
        {
          throw Error("ProblemSpec: H(d) problem requires 0 <= k <= n-1");
        }
        break;
      case ProblemKind::ReactionDiffusion:
        if (k != 0)
        {
          throw Error("ProblemSpec: reaction-diffusion requires k = 0");
        }
        break;
      case ProblemKind::HodgeLaplacian:
        if (k < 1 || k > Dim)
        {
          throw Error("ProblemSpec: Hodge Laplacian requires 1 <= k <= n");
        }
        break;
    }
    if (kind != ProblemKind::HodgeLaplacian && eps.is_constant() && kappa.is_constant() &&
        (!(eps.value > 0.0) || !(kappa.value > 0.0)))
    {
      throw Error("ProblemSpec: eps and kappa must be positive");
    }
  }
};

// System on free DOFs. For saddle problems the unknown is (sigma, u) with the
// sigma block first.
struct LinearSystem
{
  SparseMatrix A;
  Vector b;
  std::vector<int> free_dofs;  // per block, full-space indices in block order
  std::vector<int> block_sizes;
  std::vector<int> full_sizes;

  bool saddle() const { return block_sizes.size() == 2; }

  // Free-DOF vector -> full coefficient vectors, one per block.
  std::vector<Vector> expand(const Vector &x) const
  {
    std::vector<Vector> out;
    int offset = 0;
    for (std::size_t blk = 0; blk < block_sizes.size(); blk++)
    {
      Vector full = Vector::Zero(full_sizes[blk]);
      for (int i = 0; i < block_sizes[blk]; i++)
      {
        full(free_dofs[offset + i]) = x(offset + i);
      }
      out.push_back(std::move(full));
      offset += block_sizes[blk];
    }
    return out;
  }
};

namespace detail
{

template <int Dim>
void CheckWeight(const SimplicialMesh<Dim> &mesh, const Coefficient<Dim> &w)
{
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    if (!(w(mesh, c) > 0.0))
    {
      throw Error("assembly: nonpositive weight");
    }
  }
}

inline SparseMatrix FromTriplets(int rows, int cols, const std::vector<Eigen::Triplet<double>> &t)
{
  SparseMatrix A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace detail

// Weighted mass matrix (kappa u, v) over the full space.
template <int Dim>
SparseMatrix AssembleMass(const FormSpace<Dim> &space, const Coefficient<Dim> &weight = {},
                          int degree = kAssemblyOrder)
{
  const auto &mesh = space.mesh();
  detail::CheckWeight(mesh, weight);
  const auto &rule = GetSimplexRule(Dim, degree);
  const int nl = space.local_size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_cells()) * nl * nl);
  std::vector<int> dofs;
  std::vector<Proxy> phi;
  Eigen::MatrixXd local(nl, nl);
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    space.cell_dofs(c, dofs);
    local.setZero();
    const double scale = weight(mesh, c) * mesh.cell_geometry(c).volume;
    for (int q = 0; q < rule.size(); q++)
    {
      space.basis(c, rule.bary[q], phi);
      for (int i = 0; i < nl; i++)
      {
        for (int j = 0; j <= i; j++)
        {
          local(i, j) += rule.w[q] * phi[i].dot(phi[j]);
        }
      }
    }
    for (int i = 0; i < nl; i++)
    {
      for (int j = 0; j <= i; j++)
      {
        const double v = scale * local(i, j);
        trips.emplace_back(dofs[i], dofs[j], v);
        if (i != j)
        {
          trips.emplace_back(dofs[j], dofs[i], v);
        }
      }
    }
  }
  return detail::FromTriplets(space.n_dofs(), space.n_dofs(), trips);
}

// (eps d u, d v) = D_k^T M_{k+1}(eps) D_k over the full space.
template <int Dim>
SparseMatrix AssembleStiffness(const FormSpace<Dim> &space_k, const FormSpace<Dim> &space_k1,
                               const Coefficient<Dim> &weight = {})
{
  if (&space_k.mesh() != &space_k1.mesh() || space_k1.k() != space_k.k() + 1 ||
      !space_k1.is_whitney())
  {
    throw Error("assemble_stiffness: spaces do not form a complex pair");
  }
  const SparseMatrix D = ToReal(ExteriorDerivative(space_k));
  const SparseMatrix M = AssembleMass(space_k1, weight);
  SparseMatrix K = D.transpose() * M * D;
  return SparseMatrix(K.pruned());
}

// Load vector b_i = (f, phi_i) over the full space.
template <int Dim>
Vector AssembleLoad(const FormSpace<Dim> &space, const FormField<Dim> &f, int degree = kAssemblyOrder)
{
  const auto &mesh = space.mesh();
  const auto &rule = GetSimplexRule(Dim, degree);
  Vector b = Vector::Zero(space.n_dofs());
  std::vector<int> dofs;
  std::vector<Proxy> phi;
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    const auto &g = mesh.cell_geometry(c);
    space.cell_dofs(c, dofs);
    for (int q = 0; q < rule.size(); q++)
    {
      const Proxy fx = f(g.map(rule.bary[q]));
      space.basis(c, rule.bary[q], phi);
      for (std::size_t i = 0; i < dofs.size(); i++)
      {
        b(dofs[i]) += g.volume * rule.w[q] * fx.dot(phi[i]);
      }
    }
  }
  return b;
}

// Row/column restriction to the free DOFs of the given spaces.
template <int Dim>
SparseMatrix RestrictFree(const SparseMatrix &A, const FormSpace<Dim> &rows,
                          const FormSpace<Dim> &cols)
{
  std::vector<Eigen::Triplet<double>> trips;
  for (int r = 0; r < A.outerSize(); r++)
  {
    const int fr = rows.free_index(r);
    if (fr < 0)
    {
      continue;
    }
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      const int fc = cols.free_index(static_cast<int>(it.col()));
      if (fc >= 0)
      {
        trips.emplace_back(fr, fc, it.value());
      }
    }
  }
  return detail::FromTriplets(rows.n_free(), cols.n_free(), trips);
}

template <int Dim>
Vector RestrictFree(const Vector &b, const FormSpace<Dim> &space)
{
  Vector r(space.n_free());
  for (int i = 0; i < space.n_free(); i++)
  {
    r(i) = b(space.free_dofs()[i]);
  }
  return r;
}

// Bundle of the discrete spaces used by a problem on a given mesh.
template <int Dim>
struct ProblemSpaces
{
  FormSpace<Dim> trial;   // V^k (u)
  FormSpace<Dim> next;    // V^{k+1} (d u), unused at k = n
  FormSpace<Dim> sigma;   // V^{k-1} for mixed problems
  bool has_next = false;
  bool has_sigma = false;
};

template <int Dim>
ProblemSpaces<Dim> MakeProblemSpaces(const SimplicialMesh<Dim> &mesh, const ProblemSpec<Dim> &p)
{
  ProblemSpaces<Dim> s;
  const bool gamma = mesh.has_gamma();
  const Family fam = p.k == 0 ? Family::LagrangeP1 : Family::TrimmedP1;
  s.trial = FormSpace<Dim>(mesh, p.k, fam, gamma);
  if (p.k < Dim)
  {
    s.next = FormSpace<Dim>(mesh, p.k + 1, Family::TrimmedP1, gamma);
    s.has_next = true;
  }
  if (p.kind == ProblemKind::HodgeLaplacian)
  {
    s.sigma = FormSpace<Dim>(mesh, p.k - 1, p.k == 1 ? Family::LagrangeP1 : Family::TrimmedP1, gamma);
    s.has_sigma = true;
  }
  return s;
}

// (eps d u, d v) + (kappa u, v) = (f, v) on the Gamma-constrained space.
template <int Dim>
LinearSystem AssembleHd(const ProblemSpec<Dim> &p, const ProblemSpaces<Dim> &s)
{
  p.validate();
  if (p.kind == ProblemKind::HodgeLaplacian)
  {
    throw Error("assemble_hd: problem kind is HodgeLaplacian");
  }
  SparseMatrix A = AssembleMass(s.trial, p.kappa);
  A += AssembleStiffness(s.trial, s.next, p.eps);
  LinearSystem sys;
  sys.A = RestrictFree(A, s.trial, s.trial);
  sys.b = RestrictFree(AssembleLoad(s.trial, p.f), s.trial);
  sys.free_dofs = s.trial.free_dofs();
  sys.block_sizes = {s.trial.n_free()};
  sys.full_sizes = {s.trial.n_dofs()};
  return sys;
}

// Whitelist of configurations with trivial harmonic forms: contractible
// domain (Euler characteristic 1), Gamma empty or the whole boundary, and
// k < n when Gamma is the whole boundary.
template <int Dim>
void CheckTrivialHarmonics(const SimplicialMesh<Dim> &mesh, int k)
{
  if (mesh.euler_characteristic() != 1)
  {
    throw Error("Hodge Laplacian: domain is not contractible (nontrivial harmonic forms)");
  }
  int tagged = 0, boundary = 0;
  for (int f = 0; f < mesh.num_faces(); f++)
  {
    if (mesh.is_boundary_face(f))
    {
      boundary++;
      tagged += mesh.boundary_tag(f) == BoundaryTag::GammaEssential;
    }
  }
  if (tagged != 0 && tagged != boundary)
  {
    throw Error("Hodge Laplacian: mixed boundary conditions are not whitelisted");
  }
  if (tagged == boundary && k == Dim)
  {
    throw Error("Hodge Laplacian: k = n with Gamma = boundary has harmonic forms");
  }
}

// Symmetric saddle system
//   [ -M_{k-1}        D_{k-1}^T M_k      ] [sigma]   [ 0 ]
//   [ M_k D_{k-1}     D_k^T M_{k+1} D_k  ] [  u  ] = [ f ]
// (first block row of the mixed formulation multiplied by -1).
template <int Dim>
LinearSystem AssembleHodgeLaplacian(const ProblemSpec<Dim> &p, const ProblemSpaces<Dim> &s)
{
  p.validate();
  if (p.kind != ProblemKind::HodgeLaplacian)
  {
    throw Error("assemble_hodge_laplacian: wrong problem kind");
  }
  CheckTrivialHarmonics(s.trial.mesh(), p.k);
  const SparseMatrix Ms = AssembleMass(s.sigma);
  const SparseMatrix Mu = AssembleMass(s.trial);
  const SparseMatrix D = ToReal(ExteriorDerivative(s.sigma));
  const SparseMatrix B = SparseMatrix(Mu * D);
  SparseMatrix Kuu(s.trial.n_dofs(), s.trial.n_dofs());
  if (s.has_next)
  {
    Kuu = AssembleStiffness(s.trial, s.next);
  }
  const SparseMatrix Ass = RestrictFree(Ms, s.sigma, s.sigma);
  const SparseMatrix Bus = RestrictFree(B, s.trial, s.sigma);
  const SparseMatrix Auu = RestrictFree(Kuu, s.trial, s.trial);
  const int ns = s.sigma.n_free(), nu = s.trial.n_free();
  std::vector<Eigen::Triplet<double>> trips;
  auto add = [&](const SparseMatrix &X, int r0, int c0, double scale, bool transpose)
  {
    for (int r = 0; r < X.outerSize(); r++)
    {
      for (SparseMatrix::InnerIterator it(X, r); it; ++it)
      {
        const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
        if (transpose)
        {
          trips.emplace_back(r0 + j, c0 + i, scale * it.value());
        }
        else
        {
          trips.emplace_back(r0 + i, c0 + j, scale * it.value());
        }
      }
    }
  };
  add(Ass, 0, 0, -1.0, false);
  add(Bus, 0, ns, 1.0, true);
  add(Bus, ns, 0, 1.0, false);
  add(Auu, ns, ns, 1.0, false);
  LinearSystem sys;
  sys.A = detail::FromTriplets(ns + nu, ns + nu, trips);
  sys.b = Vector::Zero(ns + nu);
  sys.b.tail(nu) = RestrictFree(AssembleLoad(s.trial, p.f), s.trial);
  sys.free_dofs = s.sigma.free_dofs();
  sys.free_dofs.insert(sys.free_dofs.end(), s.trial.free_dofs().begin(), s.trial.free_dofs().end());
  sys.block_sizes = {ns, nu};
  sys.full_sizes = {s.sigma.n_dofs(), s.trial.n_dofs()};
  return sys;
}

template <int Dim>
LinearSystem AssembleProblem(const ProblemSpec<Dim> &p, const ProblemSpaces<Dim> &s)
{
  return p.kind == ProblemKind::HodgeLaplacian ? AssembleHodgeLaplacian(p, s) : AssembleHd(p, s);
}

// Relative asymmetry max |A - A^T| / max |A|.
inline double SymmetryDefect(const SparseMatrix &A)
{
  const SparseMatrix T = SparseMatrix(A.transpose());
  const SparseMatrix diff = A - T;
  double dmax = 0.0, amax = 0.0;
  for (int r = 0; r < diff.outerSize(); r++)
  {
    for (SparseMatrix::InnerIterator it(diff, r); it; ++it)
    {
      dmax = std::max(dmax, std::abs(it.value()));
    }
  }
  for (int r = 0; r < A.outerSize(); r++)
  {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      amax = std::max(amax, std::abs(it.value()));
    }
  }
  return amax > 0.0 ? dmax / amax : 0.0;
}

// Galerkin residual max_i |<R, phi_i>| = |b - A x|_inf over free DOFs.
inline double GalerkinResidual(const LinearSystem &sys, const Vector &x)
{
  return (sys.b - sys.A * x).lpNorm<Eigen::Infinity>();
}

// Matrix Market coordinate dump (general, 1-based).
inline void WriteMatrixMarket(std::ostream &os, const SparseMatrix &A)
{
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (int r = 0; r < A.outerSize(); r++)
  {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      os << it.row() + 1 << " " << it.col() + 1 << " " << FormatDouble(it.value()) << "\n";
    }
  }
}

inline void WriteMatrixMarket(std::ostream &os, const Vector &b)
{
  os << "%%MatrixMarket matrix array real general\n";
  os << b.size() << " 1\n";
  for (Eigen::Index i = 0; i < b.size(); i++)
  {
    os << FormatDouble(b(i)) << "\n";
  }
}

}  // namespace feec

#endif  // FEEC_ASSEMBLY_HPP
