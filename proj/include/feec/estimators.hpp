// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_ESTIMATORS_HPP
#define FEEC_ESTIMATORS_HPP

#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "feec/assembly.hpp"

namespace feec
{

inline constexpr int kEstimatorOrder = 6;

enum class WeightMode
{
  Standard,
  Robust
};

// Weighting of one residual group: plain mesh size, the kappa^{-1/2} scaled
// mesh size, or the singularly perturbed h-bar = min(eps^{-1/2} h, kappa^{-1/2}).
enum class GroupWeight
{
  Standard,
  Kappa,
  Bar
};

template <int Dim>
using CellFn = std::function<Proxy(int cell, const Point<Dim> &x)>;
template <int Dim>
using FaceFn = std::function<Proxy(int face, const Point<Dim> &x)>;

template <int Dim>
struct ResidualGroup
{
  CellFn<Dim> R;  // element residual, empty means zero
  FaceFn<Dim> J;  // face jump on skeleton faces, empty means zero
  GroupWeight weight = GroupWeight::Standard;
};

struct CellIndicator
{
  std::array<double, 4> vol{}, jump{};
  double l2 = 0.0;
  double osc = 0.0;
  double eta = 0.0;
};

struct EstimatorReport
{
  bool hodge = false;
  WeightMode mode = WeightMode::Standard;
  std::vector<CellIndicator> cells;
  std::array<double, 4> face_total_sq{};  // sum over skeleton faces, per group
  double eta = 0.0;
  double osc = 0.0;

  // Per-cell marking indicator with oscillation added in quadrature.
  std::vector<double> marking_indicators() const
  {
    std::vector<double> v;
    v.reserve(cells.size());
    for (const auto &c : cells)
    {
      v.push_back(std::sqrt(c.eta * c.eta + c.osc * c.osc));
    }
    return v;
  }

  void finalize()
  {
    double e2 = 0.0, o2 = 0.0;
    for (auto &c : cells)
    {
      double t = c.l2 * c.l2;
      for (int g = 0; g < 4; g++)
      {
        t += c.vol[g] * c.vol[g] + c.jump[g] * c.jump[g];
      }
      c.eta = std::sqrt(t);
      e2 += t;
      o2 += c.osc * c.osc;
    }
    eta = std::sqrt(e2);
    osc = std::sqrt(o2);
  }
};

inline void WriteEstimatorCsv(std::ostream &os, const EstimatorReport &r)
{
  os << "cell_id,eta_total,vol1,jump1,vol2,jump2,osc";
  if (r.hodge)
  {
    os << ",vol3,jump3,vol4,jump4";
  }
  os << "\n";
  for (std::size_t c = 0; c < r.cells.size(); c++)
  {
    const auto &x = r.cells[c];
    os << c << "," << FormatDouble(x.eta) << "," << FormatDouble(x.vol[0]) << ","
       << FormatDouble(x.jump[0]) << "," << FormatDouble(x.vol[1]) << "," << FormatDouble(x.jump[1])
       << "," << FormatDouble(x.osc);
    if (r.hodge)
    {
      // The L2 term of the k = n Hodge estimator is reported in the vol3 column.
      const double v3 = std::sqrt(x.vol[2] * x.vol[2] + x.l2 * x.l2);
      os << "," << FormatDouble(v3) << "," << FormatDouble(x.jump[2]) << ","
         << FormatDouble(x.vol[3]) << "," << FormatDouble(x.jump[3]);
    }
    os << "\n";
  }
}

namespace detail
{

struct Weights
{
  double eps = 1.0, kappa = 1.0;

  double cell(GroupWeight g, double h) const
  {
    switch (g)
    {
      case GroupWeight::Standard:
        return h;
      case GroupWeight::Kappa:
        return h / std::sqrt(kappa);
      case GroupWeight::Bar:
        return std::min(h / std::sqrt(eps), 1.0 / std::sqrt(kappa));
    }
    return h;
  }
  double face(GroupWeight g, double hs) const
  {
    switch (g)
    {
      case GroupWeight::Standard:
        return std::sqrt(hs);
      case GroupWeight::Kappa:
        return std::sqrt(hs) / std::sqrt(kappa);
      case GroupWeight::Bar:
        return std::pow(eps, -0.25) * std::sqrt(std::min(hs / std::sqrt(eps), 1.0 / std::sqrt(kappa)));
    }
    return hs;
  }
};

// L2 projection onto P1 over a d-simplex given barycentric quadrature values.
// Returns the nodal (barycentric) coefficients per component.
inline std::vector<Proxy> ProjectP1(int d, const SimplexRule &rule, const std::vector<Proxy> &vals)
{
  const int nc = static_cast<int>(vals[0].size());
  std::vector<Proxy> mom(d + 1, Proxy::Zero(nc));
  Proxy total = Proxy::Zero(nc);
  for (int q = 0; q < rule.size(); q++)
  {
    for (int a = 0; a <= d; a++)
    {
      mom[a] += rule.w[q] * rule.bary[q][a] * vals[q];
    }
  }
  for (const auto &m : mom)
  {
    total += m;
  }
  // Inverse of the normalised P1 mass matrix (I + 1 1^T) / ((d+1)(d+2)).
  std::vector<Proxy> c(d + 1);
  for (int a = 0; a <= d; a++)
  {
    c[a] = (d + 1) * (d + 2) * (mom[a] - total / (d + 2));
  }
  return c;
}

inline Proxy EvalP1(const std::vector<Proxy> &c, const std::array<double, 4> &l)
{
  Proxy v = l[0] * c[0];
  for (std::size_t a = 1; a < c.size(); a++)
  {
    v += l[a] * c[a];
  }
  return v;
}

// Proxy of the trace of the Hodge star of a j-form on a face with normal nu.
template <int Dim>
Proxy TraceStar(int j, const Proxy &w, const Point<Dim> &nu)
{
  if (j == Dim)
  {
    return w;
  }
  if (j == 1)
  {
    return MakeProxy({w.dot(Proxy(nu))});
  }
  if constexpr (Dim == 3)
  {
    if (j == 2)
    {
      const Eigen::Vector3d v = w;
      return Proxy(v.cross(nu));
    }
  }
  throw Error("TraceStar: unsupported degree");
}

// Coderivative proxy of a P1 form given the gradients of its components
// (column c = grad of component c).
template <int Dim>
Proxy CoderivativeOfLinear(int k, const Eigen::Matrix<double, Dim, Eigen::Dynamic> &grads)
{
  if (k == Dim)
  {
    if constexpr (Dim == 2)
    {
      return MakeProxy({grads(1, 0), -grads(0, 0)});
    }
    else
    {
      return Proxy(-grads.col(0));
    }
  }
  if (k == 1)
  {
    double div = 0.0;
    for (int a = 0; a < Dim; a++)
    {
      div += grads(a, a);
    }
    return MakeProxy({-div});
  }
  if constexpr (Dim == 3)
  {
    if (k == 2)
    {
      return MakeProxy({grads(1, 2) - grads(2, 1), grads(2, 0) - grads(0, 2), grads(0, 1) - grads(1, 0)});
    }
  }
  throw Error("CoderivativeOfLinear: unsupported degree");
}

}  // namespace detail

// ⟦tr⋆ w⟧ on skeleton faces for a piecewise j-form given cellwise: value from
// the lower-id cell minus the higher-id one; one-sided on boundary faces.
template <int Dim>
FaceFn<Dim> JumpOf(const SimplicialMesh<Dim> &mesh, int j, CellFn<Dim> w, double sign = 1.0)
{
  if (j <= 0)
  {
    return {};
  }
  return [&mesh, j, w, sign](int f, const Point<Dim> &x) -> Proxy
  {
    const auto &fc = mesh.face_cells(f);
    const auto &nu = mesh.face_geometry(f).normal;
    Proxy v = detail::TraceStar<Dim>(j, w(fc[0], x), nu);
    if (fc[1] >= 0)
    {
      v -= detail::TraceStar<Dim>(j, w(fc[1], x), nu);
    }
    return Proxy(sign * v);
  };
}

// Residual dual-norm estimate for a representation by element residuals and
// face jumps, with oscillation against elementwise / facewise P1 projections.
template <int Dim>
EstimatorReport H1ResidualNormEstimate(const SimplicialMesh<Dim> &mesh,
                                       const std::vector<ResidualGroup<Dim>> &groups, WeightMode mode,
                                       const Coefficient<Dim> &eps = {},
                                       const Coefficient<Dim> &kappa = {},
                                       int degree = kEstimatorOrder)
{
  if (groups.size() > 4)
  {
    throw Error("residual estimate: at most four groups");
  }
  if (mode == WeightMode::Robust && (!eps.is_constant() || !kappa.is_constant()))
  {
    throw Error("residual estimate: robust mode requires constant eps and kappa");
  }
  detail::Weights W{eps.value, kappa.value};
  EstimatorReport rep;
  rep.mode = mode;
  rep.cells.assign(mesh.num_cells(), {});
  std::vector<double> osc_sq(mesh.num_cells(), 0.0);
  const auto &crule = GetSimplexRule(Dim, degree);
  const auto &frule = GetSimplexRule(Dim - 1, degree);
  std::vector<Proxy> vals;

  for (std::size_t gi = 0; gi < groups.size(); gi++)
  {
    const auto &g = groups[gi];
    const GroupWeight gw = mode == WeightMode::Standard ? GroupWeight::Standard : g.weight;
    if (g.R)
    {
      for (int c = 0; c < mesh.num_cells(); c++)
      {
        const auto &geo = mesh.cell_geometry(c);
        vals.clear();
        double r2 = 0.0;
        for (int q = 0; q < crule.size(); q++)
        {
          vals.push_back(g.R(c, geo.map(crule.bary[q])));
          r2 += crule.w[q] * vals.back().squaredNorm();
        }
        const auto P = detail::ProjectP1(Dim, crule, vals);
        double o2 = 0.0;
        for (int q = 0; q < crule.size(); q++)
        {
          o2 += crule.w[q] * (vals[q] - detail::EvalP1(P, crule.bary[q])).squaredNorm();
        }
        const double w = W.cell(gw, geo.diameter);
        rep.cells[c].vol[gi] = w * std::sqrt(r2 * geo.volume);
        osc_sq[c] += w * w * o2 * geo.volume;
      }
    }
    if (g.J)
    {
      for (int f = 0; f < mesh.num_faces(); f++)
      {
        if (!mesh.in_skeleton(f))
        {
          continue;
        }
        const auto &fg = mesh.face_geometry(f);
        vals.clear();
        double j2 = 0.0;
        for (int q = 0; q < frule.size(); q++)
        {
          vals.push_back(g.J(f, fg.map(frule.bary[q])));
          j2 += frule.w[q] * vals.back().squaredNorm();
        }
        double o2 = 0.0;
        if (gw != GroupWeight::Bar)
        {
          const auto P = detail::ProjectP1(Dim - 1, frule, vals);
          for (int q = 0; q < frule.size(); q++)
          {
            o2 += frule.w[q] * (vals[q] - detail::EvalP1(P, frule.bary[q])).squaredNorm();
          }
        }
        const double w = W.face(gw, fg.diameter);
        const double contrib = w * w * j2 * fg.measure;
        const double ocontrib = w * w * o2 * fg.measure;
        rep.face_total_sq[gi] += contrib;
        const auto &fc = mesh.face_cells(f);
        const double share = fc[1] >= 0 ? 0.5 : 1.0;
        for (int c : fc)
        {
          if (c >= 0)
          {
            // Accumulate squares; converted to norms below.
            rep.cells[c].jump[gi] += share * contrib;
            osc_sq[c] += share * ocontrib;
          }
        }
      }
      for (auto &cell : rep.cells)
      {
        cell.jump[gi] = std::sqrt(cell.jump[gi]);
      }
    }
  }
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    rep.cells[c].osc = std::sqrt(osc_sq[c]);
  }
  rep.finalize();
  return rep;
}

// Cellwise coderivative of the load: analytic when supplied, otherwise the
// coderivative of its elementwise P1 projection.
template <int Dim>
CellFn<Dim> LoadCoderivative(const SimplicialMesh<Dim> &mesh, const FormField<Dim> &f,
                             int degree = kEstimatorOrder)
{
  if (f.has_delta())
  {
    return [f](int, const Point<Dim> &x) { return f.delta(x); };
  }
  const int k = f.k;
  const auto &rule = GetSimplexRule(Dim, degree);
  auto cache = std::make_shared<std::vector<Proxy>>(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    const auto &geo = mesh.cell_geometry(c);
    std::vector<Proxy> vals;
    for (int q = 0; q < rule.size(); q++)
    {
      vals.push_back(f(geo.map(rule.bary[q])));
    }
    const auto P = detail::ProjectP1(Dim, rule, vals);
    const int nc = static_cast<int>(P[0].size());
    Eigen::Matrix<double, Dim, Eigen::Dynamic> grads = Eigen::Matrix<double, Dim, Eigen::Dynamic>::Zero(Dim, nc);
    for (int a = 0; a <= Dim; a++)
    {
      for (int comp = 0; comp < nc; comp++)
      {
        grads.col(comp) += P[a](comp) * geo.grad_lambda.col(a);
      }
    }
    (*cache)[c] = detail::CoderivativeOfLinear<Dim>(k, grads);
  }
  return [cache](int c, const Point<Dim> &) { return (*cache)[c]; };
}

template <int Dim>
CellFn<Dim> FieldValue(const DiscreteField<Dim> &u)
{
  return [&u](int c, const Point<Dim> &x) { return u.evaluate_at(c, x); };
}

template <int Dim>
CellFn<Dim> FieldDerivative(const DiscreteField<Dim> &u)
{
  return [&u](int c, const Point<Dim> &) { return u.derivative(c); };
}

// Explicit residual estimator for (eps d u, d v) + (kappa u, v) = (f, v).
// Group 1 (k >= 1): R = delta f (elementwise delta of Whitney forms is zero),
//                   J = [[tr* (f - kappa u_h)]].
// Group 2:          R = f - kappa u_h, J = -[[tr* eps d u_h]].
template <int Dim>
EstimatorReport HdResidualEstimator(const ProblemSpec<Dim> &p, const DiscreteField<Dim> &u,
                                    WeightMode mode)
{
  const auto &mesh = u.space->mesh();
  const int k = p.k;
  if (p.kind == ProblemKind::HodgeLaplacian || k >= Dim)
  {
    throw Error("hd_residual_estimator: unsupported (k, n)");
  }
  auto eps = p.eps;
  auto kappa = p.kappa;
  CellFn<Dim> resid = [&mesh, &p, &u, kappa](int c, const Point<Dim> &x) -> Proxy
  { return Proxy(p.f(x) - kappa(mesh, c) * u.evaluate_at(c, x)); };
  CellFn<Dim> flux = [&mesh, &u, eps](int c, const Point<Dim> &) -> Proxy
  { return Proxy(eps(mesh, c) * u.derivative(c)); };

  std::vector<ResidualGroup<Dim>> groups(2);
  if (k >= 1)
  {
    groups[0].R = LoadCoderivative(mesh, p.f);
    groups[0].J = JumpOf(mesh, k, resid);
    groups[0].weight = GroupWeight::Kappa;
  }
  groups[1].R = resid;
  groups[1].J = JumpOf(mesh, k + 1, flux, -1.0);
  groups[1].weight = GroupWeight::Bar;
  return H1ResidualNormEstimate(mesh, groups, mode, p.eps, p.kappa);
}

// Explicit residual estimator for the mixed Hodge Laplacian.
//   H1: J = -[[tr* sigma_h]]            H2: R = -sigma_h, J = [[tr* u_h]]
//   H3: R = delta f, J = [[tr* (f - d sigma_h)]]
//   H4: R = f - d sigma_h, J = -[[tr* d u_h]]
// For k = n groups 3 and 4 are replaced by |f - d sigma_h|_T.
template <int Dim>
EstimatorReport HodgeResidualEstimator(const ProblemSpec<Dim> &p, const DiscreteField<Dim> &sigma,
                                       const DiscreteField<Dim> &u)
{
  if (p.kind != ProblemKind::HodgeLaplacian)
  {
    throw Error("hodge_residual_estimator: wrong problem kind");
  }
  const auto &mesh = u.space->mesh();
  CheckTrivialHarmonics(mesh, p.k);
  const int k = p.k;
  CellFn<Dim> sig = FieldValue(sigma);
  CellFn<Dim> uval = FieldValue(u);
  CellFn<Dim> resid = [&p, &sigma](int c, const Point<Dim> &x) -> Proxy
  { return Proxy(p.f(x) - sigma.derivative(c)); };

  std::vector<ResidualGroup<Dim>> groups(k == Dim ? 2 : 4);
  groups[0].J = JumpOf(mesh, k - 1, sig, -1.0);
  groups[1].R = [sig](int c, const Point<Dim> &x) -> Proxy { return Proxy(-sig(c, x)); };
  groups[1].J = JumpOf(mesh, k, uval);
  if (k < Dim)
  {
    groups[2].R = LoadCoderivative(mesh, p.f);
    groups[2].J = JumpOf(mesh, k, resid);
    groups[3].R = resid;
    groups[3].J = JumpOf(mesh, k + 1, FieldDerivative(u), -1.0);
  }
  auto rep = H1ResidualNormEstimate(mesh, groups, WeightMode::Standard);
  rep.hodge = true;
  if (k == Dim)
  {
    const auto &rule = GetSimplexRule(Dim, kEstimatorOrder);
    for (int c = 0; c < mesh.num_cells(); c++)
    {
      const auto &geo = mesh.cell_geometry(c);
      std::vector<Proxy> vals;
      double s = 0.0;
      for (int q = 0; q < rule.size(); q++)
      {
        vals.push_back(resid(c, geo.map(rule.bary[q])));
        s += rule.w[q] * vals.back().squaredNorm();
      }
      const auto P = detail::ProjectP1(Dim, rule, vals);
      double o = 0.0;
      for (int q = 0; q < rule.size(); q++)
      {
        o += rule.w[q] * (vals[q] - detail::EvalP1(P, rule.bary[q])).squaredNorm();
      }
      rep.cells[c].l2 = std::sqrt(s * geo.volume);
      rep.cells[c].osc = std::sqrt(rep.cells[c].osc * rep.cells[c].osc + o * geo.volume);
    }
    rep.finalize();
  }
  return rep;
}

// Scalar quadratic Lagrange basis on a cell: vertex functions l_a (2 l_a - 1)
// then edge functions 4 l_a l_b in lexicographic edge order.
template <int Dim>
struct P2Basis
{
  static constexpr int size = (Dim + 1) * (Dim + 2) / 2;

  static void eval(const CellGeometry<Dim> &g, const std::array<double, 4> &l,
                   Eigen::Matrix<double, size, 1> &phi, Eigen::Matrix<double, Dim, size> &grad)
  {
    int i = 0;
    for (int a = 0; a <= Dim; a++, i++)
    {
      phi(i) = l[a] * (2.0 * l[a] - 1.0);
      grad.col(i) = (4.0 * l[a] - 1.0) * g.grad_lambda.col(a);
    }
    for (int a = 0; a <= Dim; a++)
    {
      for (int b = a + 1; b <= Dim; b++, i++)
      {
        phi(i) = 4.0 * l[a] * l[b];
        grad.col(i) = 4.0 * (l[a] * g.grad_lambda.col(b) + l[b] * g.grad_lambda.col(a));
      }
    }
  }
};

// Proxy of d applied to the j-form phi * e_comp given grad phi.
template <int Dim>
Proxy DOfComponent(int j, int comp, const Point<Dim> &grad)
{
  if (j == 0)
  {
    return Proxy(grad);
  }
  if (j == 1)
  {
    if constexpr (Dim == 2)
    {
      // rot (phi e_comp) = d_x b - d_y a
      return MakeProxy({comp == 1 ? grad(0) : -grad(1)});
    }
    else
    {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(comp) = 1.0;
      return Proxy(Eigen::Vector3d(grad).cross(e));
    }
  }
  if (j == 2 && Dim == 3)
  {
    return MakeProxy({grad(comp)});
  }
  throw Error("DOfComponent: unsupported degree");
}

// A residual functional v -> int g0 . v + g1 . d v on test j-forms.
template <int Dim>
struct LocalFunctional
{
  int j = 0;
  CellFn<Dim> g0;  // j-form, may be empty
  CellFn<Dim> g1;  // (j+1)-form, may be empty
};

struct ImplicitResult
{
  EstimatorReport report;
  // Per vertex, per functional: squared H^1 norm of the local solution.
  std::vector<std::vector<double>> vertex_values;
};

// Squared H^1 norms of the patch Riesz representatives of each functional:
// for every vertex i solve (eta, psi)_{H^1(Omega_i)} = r(psi) over
// componentwise P2 on Omega_i vanishing on interior patch faces and on Gamma.
template <int Dim>
std::vector<std::vector<double>> SolveLocalPatches(const SimplicialMesh<Dim> &mesh,
                                                   const std::vector<LocalFunctional<Dim>> &funcs,
                                                   int degree = kEstimatorOrder)
{
  constexpr int nb = P2Basis<Dim>::size;
  const auto &rule = GetSimplexRule(Dim, degree);
  const auto edge_pairs = Combinations(Dim + 1, 2);
  std::vector<std::vector<double>> out(mesh.num_vertices(), std::vector<double>(funcs.size(), 0.0));

  // Global P2 node numbering: vertices then edges.
  const int nv = mesh.num_vertices();
  auto node_of = [&](int c, int local) -> int
  {
    if (local <= Dim)
    {
      return mesh.simplex(Dim, c)[local];
    }
    return nv + mesh.cell_entities(1, c)[local - Dim - 1];
  };

  std::vector<int> local_index(nv + mesh.num_simplices(1), -1);
  Eigen::Matrix<double, nb, 1> phi;
  Eigen::Matrix<double, Dim, nb> grad;

  for (int vtx = 0; vtx < nv; vtx++)
  {
    const auto patch = mesh.vertex_patch(vtx);
    // Fixed nodes: those on patch faces opposite vtx that are interior mesh
    // faces, and those in the closure of Gamma.
    std::vector<int> nodes;
    std::vector<char> fixed;
    for (int c : patch)
    {
      for (int l = 0; l < nb; l++)
      {
        const int node = node_of(c, l);
        if (local_index[node] < 0)
        {
          local_index[node] = static_cast<int>(nodes.size());
          nodes.push_back(node);
          const bool gamma = node < nv ? mesh.in_gamma(0, node) : mesh.in_gamma(1, node - nv);
          fixed.push_back(gamma);
        }
      }
      const auto sv = mesh.simplex(Dim, c);
      const auto faces = mesh.cell_entities(Dim - 1, c);
      const auto fsub = Combinations(Dim + 1, Dim);
      for (std::size_t fi = 0; fi < faces.size(); fi++)
      {
        bool has_vtx = false;
        for (int a : fsub[fi])
        {
          has_vtx = has_vtx || sv[a] == vtx;
        }
        if (has_vtx || mesh.is_boundary_face(faces[fi]))
        {
          continue;
        }
        // All P2 nodes of the opposite face are fixed.
        for (int l = 0; l < nb; l++)
        {
          bool on_face = true;
          if (l <= Dim)
          {
            on_face = std::find(fsub[fi].begin(), fsub[fi].end(), l) != fsub[fi].end();
          }
          else
          {
            const auto &e = edge_pairs[l - Dim - 1];
            on_face = std::find(fsub[fi].begin(), fsub[fi].end(), e[0]) != fsub[fi].end() &&
                      std::find(fsub[fi].begin(), fsub[fi].end(), e[1]) != fsub[fi].end();
          }
          if (on_face)
          {
            fixed[local_index[node_of(c, l)]] = 1;
          }
        }
      }
    }
    std::vector<int> free_of(nodes.size(), -1);
    int nfree = 0;
    for (std::size_t i = 0; i < nodes.size(); i++)
    {
      if (!fixed[i])
      {
        free_of[i] = nfree++;
      }
    }
    if (nfree == 0)
    {
      for (int node : nodes)
      {
        local_index[node] = -1;
      }
      continue;
    }

    // Scalar H^1 matrix; each form component uses the same block.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nfree, nfree);
    std::vector<Eigen::MatrixXd> rhs(funcs.size());
    for (std::size_t fi = 0; fi < funcs.size(); fi++)
    {
      rhs[fi] = Eigen::MatrixXd::Zero(nfree, ProxyComponents(funcs[fi].j, Dim));
    }
    std::array<int, nb> lf;
    for (int c : patch)
    {
      const auto &geo = mesh.cell_geometry(c);
      for (int l = 0; l < nb; l++)
      {
        lf[l] = free_of[local_index[node_of(c, l)]];
      }
      for (int q = 0; q < rule.size(); q++)
      {
        P2Basis<Dim>::eval(geo, rule.bary[q], phi, grad);
        const double w = rule.w[q] * geo.volume;
        const Point<Dim> x = geo.map(rule.bary[q]);
        for (int a = 0; a < nb; a++)
        {
          if (lf[a] < 0)
          {
            continue;
          }
          for (int b = 0; b < nb; b++)
          {
            if (lf[b] >= 0)
            {
              A(lf[a], lf[b]) += w * (phi(a) * phi(b) + grad.col(a).dot(grad.col(b)));
            }
          }
        }
        for (std::size_t fi = 0; fi < funcs.size(); fi++)
        {
          const auto &F = funcs[fi];
          const int nc = ProxyComponents(F.j, Dim);
          const Proxy g0 = F.g0 ? F.g0(c, x) : Proxy::Zero(nc);
          const Proxy g1 = F.g1 ? F.g1(c, x) : Proxy::Zero(ProxyComponents(F.j + 1, Dim));
          for (int a = 0; a < nb; a++)
          {
            if (lf[a] < 0)
            {
              continue;
            }
            for (int comp = 0; comp < nc; comp++)
            {
              double v = g0(comp) * phi(a);
              if (F.g1)
              {
                v += g1.dot(DOfComponent<Dim>(F.j, comp, grad.col(a)));
              }
              rhs[fi](lf[a], comp) += w * v;
            }
          }
        }
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
    {
      throw Error("local patch system is not SPD");
    }
    for (std::size_t fi = 0; fi < funcs.size(); fi++)
    {
      const Eigen::MatrixXd sol = llt.solve(rhs[fi]);
      out[vtx][fi] = std::max(0.0, (rhs[fi].array() * sol.array()).sum());
    }
    for (int node : nodes)
    {
      local_index[node] = -1;
    }
  }
  return out;
}

// Distribute per-vertex squared values to cells in proportion to volume and
// store the square roots in the chosen report column.
template <int Dim>
void DistributePatchValues(const SimplicialMesh<Dim> &mesh,
                           const std::vector<std::vector<double>> &values, std::size_t index,
                           std::vector<double> &cell_sq)
{
  for (int v = 0; v < mesh.num_vertices(); v++)
  {
    const auto patch = mesh.vertex_patch(v);
    double vol = 0.0;
    for (int c : patch)
    {
      vol += mesh.cell_geometry(c).volume;
    }
    for (int c : patch)
    {
      cell_sq[c] += values[v][index] * mesh.cell_geometry(c).volume / vol;
    }
  }
}

// Implicit estimator from local patch problems. H(d): eta with g1 = f - kappa u_h
// on (k-1)-forms, zeta with g0 = f - kappa u_h, g1 = -eps d u_h on k-forms.
// Hodge: eta^sigma (g1 = sigma_h, (k-2)-forms), zeta^sigma (g0 = sigma_h,
// g1 = -u_h), eta^u (g1 = f - d sigma_h), zeta^u (g0 = f - d sigma_h,
// g1 = -d u_h); at k = n the u part is the L2 norm of f - d sigma_h.
template <int Dim>
ImplicitResult LocalImplicitEstimator(const ProblemSpec<Dim> &p, const DiscreteField<Dim> &u,
                                      const DiscreteField<Dim> *sigma = nullptr)
{
  const auto &mesh = u.space->mesh();
  const int k = p.k;
  ImplicitResult res;
  std::vector<LocalFunctional<Dim>> funcs;
  std::vector<int> column;  // report group receiving each functional
  EstimatorReport explicit_rep;
  auto eps = p.eps;
  auto kappa = p.kappa;
  if (p.kind != ProblemKind::HodgeLaplacian)
  {
    CellFn<Dim> resid = [&mesh, &p, &u, kappa](int c, const Point<Dim> &x) -> Proxy
    { return Proxy(p.f(x) - kappa(mesh, c) * u.evaluate_at(c, x)); };
    CellFn<Dim> flux = [&mesh, &u, eps](int c, const Point<Dim> &) -> Proxy
    { return Proxy(-eps(mesh, c) * u.derivative(c)); };
    if (k >= 1)
    {
      funcs.push_back({k - 1, {}, resid});
      column.push_back(0);
    }
    funcs.push_back({k, resid, flux});
    column.push_back(1);
    explicit_rep = HdResidualEstimator(p, u, WeightMode::Standard);
  }
  else
  {
    if (!sigma)
    {
      throw Error("local_implicit_estimator: sigma_h required for the Hodge Laplacian");
    }
    CellFn<Dim> sig = FieldValue(*sigma);
    CellFn<Dim> uval = [&u](int c, const Point<Dim> &x) -> Proxy { return Proxy(-u.evaluate_at(c, x)); };
    CellFn<Dim> resid = [&p, sigma](int c, const Point<Dim> &x) -> Proxy
    { return Proxy(p.f(x) - sigma->derivative(c)); };
    if (k >= 2)
    {
      funcs.push_back({k - 2, {}, sig});
      column.push_back(0);
    }
    funcs.push_back({k - 1, sig, uval});
    column.push_back(1);
    if (k < Dim)
    {
      CellFn<Dim> du = [&u](int c, const Point<Dim> &) -> Proxy { return Proxy(-u.derivative(c)); };
      funcs.push_back({k - 1, {}, resid});
      column.push_back(2);
      funcs.push_back({k, resid, du});
      column.push_back(3);
    }
    explicit_rep = HodgeResidualEstimator(p, *sigma, u);
  }
  res.vertex_values = SolveLocalPatches(mesh, funcs);
  res.report.hodge = p.kind == ProblemKind::HodgeLaplacian;
  res.report.cells.assign(mesh.num_cells(), {});
  for (std::size_t fi = 0; fi < funcs.size(); fi++)
  {
    std::vector<double> cell_sq(mesh.num_cells(), 0.0);
    DistributePatchValues(mesh, res.vertex_values, fi, cell_sq);
    for (int c = 0; c < mesh.num_cells(); c++)
    {
      res.report.cells[c].vol[column[fi]] = std::sqrt(cell_sq[c]);
    }
  }
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    res.report.cells[c].l2 = explicit_rep.cells[c].l2;
    res.report.cells[c].osc = explicit_rep.cells[c].osc;
  }
  res.report.finalize();
  return res;
}

}  // namespace feec

#endif  // FEEC_ESTIMATORS_HPP
