// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_MESH_HPP
#define FEEC_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "feec/common.hpp"

namespace feec
{

enum class BoundaryTag : std::uint8_t
{
  Interior,
  GammaEssential,
  GammaNatural
};

// Fixed-width table of sorted vertex tuples, one row per simplex.
class SimplexTable
{
public:
  SimplexTable() = default;
  explicit SimplexTable(int width) : width_(width) {}

  int width() const { return width_; }
  int size() const { return width_ == 0 ? 0 : static_cast<int>(data_.size()) / width_; }
  std::span<const int> operator[](int i) const
  {
    return {data_.data() + static_cast<std::size_t>(i) * width_, static_cast<std::size_t>(width_)};
  }
  void push_back(std::span<const int> row) { data_.insert(data_.end(), row.begin(), row.end()); }

private:
  int width_ = 0;
  std::vector<int> data_;
};

template <int Dim>
struct CellGeometry
{
  Point<Dim> x0;
  Eigen::Matrix<double, Dim, Dim> jacobian;      // columns x_i - x_0
  Eigen::Matrix<double, Dim, Dim> inv_jacobian;  // rows are grad lambda_1..n
  Eigen::Matrix<double, Dim, Dim + 1> grad_lambda;
  double det = 0.0;  // signed determinant of the jacobian
  double volume = 0.0;
  double diameter = 0.0;
  Point<Dim> centroid;

  Point<Dim> map(const std::array<double, 4> &bary) const
  {
    Point<Dim> x = x0;
    for (int i = 1; i <= Dim; i++)
    {
      x += bary[i] * jacobian.col(i - 1);
    }
    return x;
  }

  std::array<double, 4> barycentric(const Point<Dim> &x) const
  {
    const Point<Dim> l = inv_jacobian * (x - x0);
    std::array<double, 4> b{};
    b[0] = 1.0 - l.sum();
    for (int i = 0; i < Dim; i++)
    {
      b[i + 1] = l(i);
    }
    return b;
  }
};

// Geometry of an (n-1)-dimensional face.
template <int Dim>
struct FaceGeometry
{
  int id = -1;
  Point<Dim> normal;  // outward on the boundary, from lower to higher cell id inside
  double measure = 0.0;
  double diameter = 0.0;
  Point<Dim> centroid;
  std::array<Point<Dim>, Dim> vertices;

  Point<Dim> map(const std::array<double, 4> &bary) const
  {
    Point<Dim> x = Point<Dim>::Zero();
    for (int i = 0; i < Dim; i++)
    {
      x += bary[i] * vertices[i];
    }
    return x;
  }
};

// Gamma selection on boundary faces.
struct GammaSelector
{
  enum class Kind
  {
    WholeBoundary,
    None,
    CoordinatePlane
  };
  Kind kind = Kind::None;
  int axis = 0;
  double value = 0.0;

  static GammaSelector Whole() { return {Kind::WholeBoundary, 0, 0.0}; }
  static GammaSelector Empty() { return {Kind::None, 0, 0.0}; }
  static GammaSelector Plane(int axis, double value) { return {Kind::CoordinatePlane, axis, value}; }
};

namespace detail
{

inline std::uint64_t PackKey(std::span<const int> v)
{
  std::uint64_t key = 0;
  for (int i : v)
  {
    key = (key << 21) | static_cast<std::uint64_t>(i + 1);
  }
  return key;
}

template <int Dim>
double SimplexDiameter(std::span<const Point<Dim>> pts)
{
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); i++)
  {
    for (std::size_t j = i + 1; j < pts.size(); j++)
    {
      d = std::max(d, (pts[i] - pts[j]).norm());
    }
  }
  return d;
}

// Measure of the (m)-simplex spanned by pts in R^Dim (Gram determinant).
template <int Dim>
double SimplexMeasure(std::span<const Point<Dim>> pts)
{
  const int m = static_cast<int>(pts.size()) - 1;
  if (m == 0)
  {
    return 1.0;
  }
  Eigen::MatrixXd E(Dim, m);
  for (int i = 0; i < m; i++)
  {
    E.col(i) = pts[i + 1] - pts[0];
  }
  const double g = (E.transpose() * E).determinant();
  return std::sqrt(std::max(g, 0.0)) / Factorial(m);
}

}  // namespace detail

// Conforming simplicial mesh in dimension Dim (2 or 3) with its full skeleton.
//
// Every simplex is stored with ascending global vertex indices, so the
// orientation of all sub-simplices is induced by the global vertex numbering.
// Cells also keep a separate vertex ordering and generation used by bisection.
template <int Dim>
class SimplicialMesh
{
  static_assert(Dim == 2 || Dim == 3, "SimplicialMesh supports Dim = 2, 3");

public:
  static constexpr int dim = Dim;
  using Cell = std::array<int, Dim + 1>;
  using FaceKey = std::array<int, Dim>;

  SimplicialMesh() = default;

  // Build from vertices and cells given in refinement order (the first and
  // the generation-selected vertex span the refinement edge). Boundary faces
  // missing from the tag map default to GammaNatural.
  static SimplicialMesh Build(std::vector<Point<Dim>> vertices, std::vector<Cell> ordered_cells,
                              std::vector<int> generation = {},
                              const std::map<FaceKey, BoundaryTag> &boundary_tags = {},
                              std::vector<int> parent = {})
  {
    SimplicialMesh m;
    if (vertices.size() >= (1u << 20))
    {
      throw Error("SimplicialMesh: too many vertices");
    }
    m.vertices_ = std::move(vertices);
    m.ordered_cells_ = std::move(ordered_cells);
    const int nc = static_cast<int>(m.ordered_cells_.size());
    m.generation_ = generation.empty() ? std::vector<int>(nc, 0) : std::move(generation);
    m.parent_ = parent.empty() ? std::vector<int>(nc, -1) : std::move(parent);
    if (static_cast<int>(m.generation_.size()) != nc || static_cast<int>(m.parent_.size()) != nc)
    {
      throw Error("SimplicialMesh: generation/parent size mismatch");
    }
    m.BuildTopology();
    m.BuildGeometry();
    for (int f = 0; f < m.num_simplices(Dim - 1); f++)
    {
      if (m.face_cells_[f][1] >= 0)
      {
        m.face_tag_[f] = BoundaryTag::Interior;
        continue;
      }
      FaceKey key;
      std::ranges::copy(m.simplex(Dim - 1, f), key.begin());
      auto it = boundary_tags.find(key);
      m.face_tag_[f] = (it == boundary_tags.end() || it->second == BoundaryTag::Interior)
                           ? BoundaryTag::GammaNatural
                           : it->second;
    }
    m.BuildGammaClosure();
    m.reference_volume_ = m.total_volume();
    m.reference_boundary_measure_ = m.boundary_measure();
    return m;
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(ordered_cells_.size()); }
  int num_faces() const { return num_simplices(Dim - 1); }
  int num_simplices(int d) const { return d == 0 ? num_vertices() : simplices_[d].size(); }

  const Point<Dim> &vertex(int i) const { return vertices_[i]; }
  const std::vector<Point<Dim>> &vertices() const { return vertices_; }

  // Sorted vertex tuple of the i-th d-simplex.
  std::span<const int> simplex(int d, int i) const
  {
    if (d == 0)
    {
      return {&vertex_ids_[i], 1};
    }
    return simplices_[d][i];
  }

  const Cell &ordered_cell(int c) const { return ordered_cells_[c]; }
  int generation(int c) const { return generation_[c]; }
  int parent(int c) const { return parent_[c]; }

  // Global indices of the local d-subsimplices of cell c, in lexicographic
  // order of local vertex subsets.
  std::span<const int> cell_entities(int d, int c) const
  {
    const int w = Binomial(Dim + 1, d + 1);
    return {cell_entities_[d].data() + static_cast<std::size_t>(c) * w, static_cast<std::size_t>(w)};
  }

  // Index of the d-simplex with the given sorted vertex tuple, or -1.
  int find_simplex(int d, std::span<const int> sorted) const
  {
    if (d == 0)
    {
      return sorted[0];
    }
    if (d == Dim)
    {
      throw Error("find_simplex: cell lookup not supported");
    }
    auto it = lookup_[d].find(detail::PackKey(sorted));
    return it == lookup_[d].end() ? -1 : it->second;
  }

  // Adjacent cells of a face; second entry -1 on the boundary. Sorted ascending.
  const std::array<int, 2> &face_cells(int f) const { return face_cells_[f]; }
  BoundaryTag boundary_tag(int f) const { return face_tag_[f]; }
  bool is_boundary_face(int f) const { return face_cells_[f][1] < 0; }

  // True if the d-simplex lies in the closure of Gamma.
  bool in_gamma(int d, int i) const { return gamma_closure_[d][i] != 0; }
  bool has_gamma() const
  {
    return std::ranges::any_of(face_tag_, [](BoundaryTag t) { return t == BoundaryTag::GammaEssential; });
  }

  const CellGeometry<Dim> &cell_geometry(int c) const { return cell_geometry_[c]; }
  const FaceGeometry<Dim> &face_geometry(int f) const { return face_geometry_[f]; }

  // Cells containing vertex v, ascending.
  std::span<const int> vertex_patch(int v) const
  {
    if (v < 0 || v >= num_vertices())
    {
      throw Error("vertex_patch: invalid vertex id");
    }
    return {vertex_cells_.data() + vertex_cells_offset_[v],
            static_cast<std::size_t>(vertex_cells_offset_[v + 1] - vertex_cells_offset_[v])};
  }

  // Interior faces plus boundary faces not in Gamma.
  std::vector<FaceGeometry<Dim>> skeleton() const
  {
    std::vector<FaceGeometry<Dim>> out;
    for (int f = 0; f < num_faces(); f++)
    {
      if (in_skeleton(f))
      {
        out.push_back(face_geometry_[f]);
      }
    }
    return out;
  }
  bool in_skeleton(int f) const { return face_tag_[f] != BoundaryTag::GammaEssential; }

  SimplicialMesh mark_gamma(const GammaSelector &sel) const
  {
    SimplicialMesh m = *this;
    for (int f = 0; f < num_faces(); f++)
    {
      if (!is_boundary_face(f))
      {
        continue;
      }
      bool tag = false;
      switch (sel.kind)
      {
        case GammaSelector::Kind::WholeBoundary:
          tag = true;
          break;
        case GammaSelector::Kind::None:
          tag = false;
          break;
        case GammaSelector::Kind::CoordinatePlane:
        {
          constexpr double tol = 1e-12;
          int on = 0;
          for (int v : simplex(Dim - 1, f))
          {
            on += std::abs(vertices_[v](sel.axis) - sel.value) < tol;
          }
          const bool centroid_on =
              std::abs(face_geometry_[f].centroid(sel.axis) - sel.value) < tol;
          if (centroid_on && on != Dim)
          {
            throw Error("mark_gamma: selector splits a face");
          }
          tag = on == Dim;
          break;
        }
      }
      m.face_tag_[f] = tag ? BoundaryTag::GammaEssential : BoundaryTag::GammaNatural;
    }
    m.BuildGammaClosure();
    return m;
  }

  double total_volume() const
  {
    double v = 0.0;
    for (const auto &g : cell_geometry_)
    {
      v += g.volume;
    }
    return v;
  }

  double boundary_measure() const
  {
    double s = 0.0;
    for (int f = 0; f < num_faces(); f++)
    {
      if (is_boundary_face(f))
      {
        s += face_geometry_[f].measure;
      }
    }
    return s;
  }

  double reference_volume() const { return reference_volume_; }

  // Max over cells of circumradius / inradius.
  double shape_regularity() const
  {
    double worst = 0.0;
    for (int c = 0; c < num_cells(); c++)
    {
      worst = std::max(worst, CellShapeRatio(c));
    }
    return worst;
  }

  double CellShapeRatio(int c) const
  {
    std::array<Point<Dim>, Dim + 1> x;
    for (int i = 0; i <= Dim; i++)
    {
      x[i] = vertices_[simplex(Dim, c)[i]];
    }
    Eigen::Matrix<double, Dim, Dim> A;
    Point<Dim> b;
    for (int i = 1; i <= Dim; i++)
    {
      A.row(i - 1) = 2.0 * (x[i] - x[0]).transpose();
      b(i - 1) = x[i].squaredNorm() - x[0].squaredNorm();
    }
    const Point<Dim> center = A.fullPivLu().solve(b);
    const double circum = (center - x[0]).norm();
    double facets = 0.0;
    for (int f : cell_entities(Dim - 1, c))
    {
      facets += face_geometry_[f].measure;
    }
    const double inradius = Dim * cell_geometry_[c].volume / facets;
    return circum / inradius;
  }

  int euler_characteristic() const
  {
    int chi = 0;
    for (int d = 0; d <= Dim; d++)
    {
      chi += (d % 2 == 0 ? 1 : -1) * num_simplices(d);
    }
    return chi;
  }

  // Structural audit: face adjacency, volume and boundary-measure conservation
  // against the generating mesh, and closedness of the boundary surface.
  // Returns an empty string when the mesh is conforming.
  std::string audit() const
  {
    for (int c = 0; c < num_cells(); c++)
    {
      if (!(cell_geometry_[c].volume > 0.0))
      {
        return "degenerate cell " + std::to_string(c);
      }
    }
    const double vol = total_volume();
    if (std::abs(vol - reference_volume_) > 1e-12 * reference_volume_)
    {
      return "volume mismatch";
    }
    if (std::abs(boundary_measure() - reference_boundary_measure_) >
        1e-10 * reference_boundary_measure_)
    {
      return "boundary measure mismatch (hanging faces)";
    }
    std::vector<int> count(num_simplices(Dim - 2), 0);
    for (int f = 0; f < num_faces(); f++)
    {
      if (!is_boundary_face(f))
      {
        continue;
      }
      auto s = simplex(Dim - 1, f);
      for (const auto &sub : Combinations(Dim, Dim - 1))
      {
        std::array<int, Dim - 1> key;
        for (int i = 0; i < Dim - 1; i++)
        {
          key[i] = s[sub[i]];
        }
        count[find_simplex(Dim - 2, key)]++;
      }
    }
    for (int c : count)
    {
      if (c != 0 && c != 2)
      {
        return "boundary surface not closed";
      }
    }
    return {};
  }

  void set_reference_measures(double volume, double boundary)
  {
    reference_volume_ = volume;
    reference_boundary_measure_ = boundary;
  }
  double reference_boundary_measure() const { return reference_boundary_measure_; }

private:
  void BuildTopology()
  {
    const int nv = num_vertices();
    const int nc = num_cells();
    vertex_ids_.resize(nv);
    std::iota(vertex_ids_.begin(), vertex_ids_.end(), 0);

    simplices_[Dim] = SimplexTable(Dim + 1);
    std::vector<Cell> sorted(nc);
    for (int c = 0; c < nc; c++)
    {
      sorted[c] = ordered_cells_[c];
      std::ranges::sort(sorted[c]);
      for (int v : sorted[c])
      {
        if (v < 0 || v >= nv)
        {
          throw Error("SimplicialMesh: cell references invalid vertex");
        }
      }
      simplices_[Dim].push_back(sorted[c]);
    }

    for (int d = 1; d < Dim; d++)
    {
      std::vector<std::vector<int>> all;
      const auto subsets = Combinations(Dim + 1, d + 1);
      all.reserve(static_cast<std::size_t>(nc) * subsets.size());
      for (int c = 0; c < nc; c++)
      {
        for (const auto &s : subsets)
        {
          std::vector<int> t(d + 1);
          for (int i = 0; i <= d; i++)
          {
            t[i] = sorted[c][s[i]];
          }
          all.push_back(std::move(t));
        }
      }
      std::ranges::sort(all);
      all.erase(std::unique(all.begin(), all.end()), all.end());
      simplices_[d] = SimplexTable(d + 1);
      lookup_[d].clear();
      lookup_[d].reserve(all.size());
      for (std::size_t i = 0; i < all.size(); i++)
      {
        simplices_[d].push_back(all[i]);
        lookup_[d].emplace(detail::PackKey(all[i]), static_cast<int>(i));
      }
    }

    for (int d = 0; d <= Dim; d++)
    {
      const auto subsets = Combinations(Dim + 1, d + 1);
      auto &ent = cell_entities_[d];
      ent.assign(static_cast<std::size_t>(nc) * subsets.size(), -1);
      for (int c = 0; c < nc; c++)
      {
        for (std::size_t j = 0; j < subsets.size(); j++)
        {
          int id;
          if (d == Dim)
          {
            id = c;
          }
          else
          {
            std::array<int, Dim + 1> t{};
            for (int i = 0; i <= d; i++)
            {
              t[i] = sorted[c][subsets[j][i]];
            }
            id = find_simplex(d, std::span<const int>(t.data(), d + 1));
          }
          ent[c * subsets.size() + j] = id;
        }
      }
    }

    const int nf = num_simplices(Dim - 1);
    face_cells_.assign(nf, {-1, -1});
    for (int c = 0; c < nc; c++)
    {
      for (int f : cell_entities(Dim - 1, c))
      {
        auto &fc = face_cells_[f];
        if (fc[0] < 0)
        {
          fc[0] = c;
        }
        else if (fc[1] < 0)
        {
          fc[1] = c;
        }
        else
        {
          throw Error("SimplicialMesh: face shared by more than two cells");
        }
      }
    }
    for (auto &fc : face_cells_)
    {
      if (fc[1] >= 0 && fc[1] < fc[0])
      {
        std::swap(fc[0], fc[1]);
      }
    }
    face_tag_.assign(nf, BoundaryTag::Interior);

    vertex_cells_offset_.assign(nv + 1, 0);
    for (int c = 0; c < nc; c++)
    {
      for (int v : sorted[c])
      {
        vertex_cells_offset_[v + 1]++;
      }
    }
    std::partial_sum(vertex_cells_offset_.begin(), vertex_cells_offset_.end(),
                     vertex_cells_offset_.begin());
    vertex_cells_.assign(vertex_cells_offset_[nv], -1);
    std::vector<int> fill(vertex_cells_offset_.begin(), vertex_cells_offset_.end() - 1);
    for (int c = 0; c < nc; c++)
    {
      for (int v : sorted[c])
      {
        vertex_cells_[fill[v]++] = c;
      }
    }
  }

  void BuildGeometry()
  {
    const int nc = num_cells();
    cell_geometry_.resize(nc);
    for (int c = 0; c < nc; c++)
    {
      auto s = simplex(Dim, c);
      auto &g = cell_geometry_[c];
      std::array<Point<Dim>, Dim + 1> x;
      for (int i = 0; i <= Dim; i++)
      {
        x[i] = vertices_[s[i]];
      }
      g.x0 = x[0];
      for (int i = 1; i <= Dim; i++)
      {
        g.jacobian.col(i - 1) = x[i] - x[0];
      }
      g.det = g.jacobian.determinant();
      g.volume = std::abs(g.det) / Factorial(Dim);
      g.inv_jacobian = g.jacobian.inverse();
      g.grad_lambda.col(0) = -g.inv_jacobian.colwise().sum().transpose();
      for (int i = 1; i <= Dim; i++)
      {
        g.grad_lambda.col(i) = g.inv_jacobian.row(i - 1).transpose();
      }
      g.diameter = detail::SimplexDiameter<Dim>(x);
      g.centroid = Point<Dim>::Zero();
      for (const auto &p : x)
      {
        g.centroid += p / (Dim + 1);
      }
    }

    const int nf = num_faces();
    face_geometry_.resize(nf);
    for (int f = 0; f < nf; f++)
    {
      auto s = simplex(Dim - 1, f);
      auto &g = face_geometry_[f];
      g.id = f;
      for (int i = 0; i < Dim; i++)
      {
        g.vertices[i] = vertices_[s[i]];
      }
      g.measure = detail::SimplexMeasure<Dim>(g.vertices);
      g.diameter = detail::SimplexDiameter<Dim>(g.vertices);
      g.centroid = Point<Dim>::Zero();
      for (const auto &p : g.vertices)
      {
        g.centroid += p / Dim;
      }
      Point<Dim> n;
      if constexpr (Dim == 2)
      {
        const Point<Dim> t = g.vertices[1] - g.vertices[0];
        n << t(1), -t(0);
      }
      else
      {
        n = (g.vertices[1] - g.vertices[0]).cross(g.vertices[2] - g.vertices[0]);
      }
      n.normalize();
      // Outward from the lower-id adjacent cell.
      if (n.dot(g.centroid - cell_geometry_[face_cells_[f][0]].centroid) < 0.0)
      {
        n = -n;
      }
      g.normal = n;
    }
  }

  void BuildGammaClosure()
  {
    for (int d = 0; d < Dim; d++)
    {
      gamma_closure_[d].assign(num_simplices(d), 0);
    }
    const auto &faces = simplices_[Dim - 1];
    for (int f = 0; f < num_faces(); f++)
    {
      if (face_tag_[f] != BoundaryTag::GammaEssential)
      {
        continue;
      }
      auto s = faces[f];
      for (int d = 0; d < Dim; d++)
      {
        for (const auto &sub : Combinations(Dim, d + 1))
        {
          std::array<int, Dim> t{};
          for (int i = 0; i <= d; i++)
          {
            t[i] = s[sub[i]];
          }
          gamma_closure_[d][find_simplex(d, std::span<const int>(t.data(), d + 1))] = 1;
        }
      }
    }
    gamma_closure_[Dim].assign(num_cells(), 0);
  }

  std::vector<Point<Dim>> vertices_;
  std::vector<int> vertex_ids_;
  std::vector<Cell> ordered_cells_;
  std::vector<int> generation_, parent_;
  std::array<SimplexTable, Dim + 1> simplices_;
  std::array<std::unordered_map<std::uint64_t, int>, Dim + 1> lookup_;
  std::array<std::vector<int>, Dim + 1> cell_entities_;
  std::vector<std::array<int, 2>> face_cells_;
  std::vector<BoundaryTag> face_tag_;
  std::array<std::vector<char>, Dim + 1> gamma_closure_;
  std::vector<int> vertex_cells_offset_, vertex_cells_;
  std::vector<CellGeometry<Dim>> cell_geometry_;
  std::vector<FaceGeometry<Dim>> face_geometry_;
  double reference_volume_ = 0.0, reference_boundary_measure_ = 0.0;
};

using Mesh2 = SimplicialMesh<2>;
using Mesh3 = SimplicialMesh<3>;

}  // namespace feec

#endif  // FEEC_MESH_HPP
