// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_REFINE_HPP
#define FEEC_REFINE_HPP

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "feec/mesh.hpp"

namespace feec
{

namespace detail
{

inline std::uint64_t EdgeKey(int a, int b)
{
  if (a > b)
  {
    std::swap(a, b);
  }
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace detail

// Conforming bisection (newest vertex in 2D, Maubach in 3D). A cell
// (x0, ..., xn) of generation g has refinement edge x0 -- xd with
// d = n - (g mod n); its children are
//   (x0, ..., x_{d-1}, z, x_{d+1}, ..., xn) and (x1, ..., xd, z, x_{d+1}, ..., xn)
// of generation g + 1. Cells sharing a split edge are bisected until no
// hanging vertex remains. parent(c) of the result indexes the input mesh.
template <int Dim>
SimplicialMesh<Dim> Bisect(const SimplicialMesh<Dim> &mesh, std::span<const int> marked)
{
  using Cell = std::array<int, Dim + 1>;
  struct Work
  {
    Cell v;
    int gen;
    int origin;
  };

  std::vector<Point<Dim>> vertices = mesh.vertices();
  std::vector<Work> cells;
  cells.reserve(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    cells.push_back({mesh.ordered_cell(c), mesh.generation(c), c});
  }

  std::vector<char> flag(mesh.num_cells(), 0);
  for (int c : marked)
  {
    if (c < 0 || c >= mesh.num_cells())
    {
      throw Error("Bisect: marked cell out of range");
    }
    flag[c] = 1;
  }

  // Ancestor sets (old-mesh vertices) of vertices created by this call.
  std::vector<std::vector<int>> ancestors;
  std::unordered_map<std::uint64_t, int> midpoint;

  auto ref_edge = [](const Work &w) { return Dim - (w.gen % Dim); };

  auto bisect_one = [&](const Work &w, std::vector<Work> &out)
  {
    const int d = ref_edge(w);
    const int a = w.v[0], b = w.v[d];
    int z;
    auto key = detail::EdgeKey(a, b);
    auto it = midpoint.find(key);
    if (it == midpoint.end())
    {
      z = static_cast<int>(vertices.size());
      vertices.push_back(0.5 * (vertices[a] + vertices[b]));
      std::vector<int> anc;
      for (int p : {a, b})
      {
        if (p < mesh.num_vertices())
        {
          anc.push_back(p);
        }
        else
        {
          const auto &pa = ancestors[p - mesh.num_vertices()];
          anc.insert(anc.end(), pa.begin(), pa.end());
        }
      }
      std::ranges::sort(anc);
      anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
      ancestors.push_back(std::move(anc));
      midpoint.emplace(key, z);
    }
    else
    {
      z = it->second;
    }
    Work c1{w.v, w.gen + 1, w.origin}, c2{w.v, w.gen + 1, w.origin};
    c1.v[d] = z;
    for (int i = 0; i < d; i++)
    {
      c2.v[i] = w.v[i + 1];
    }
    c2.v[d] = z;
    out.push_back(c1);
    out.push_back(c2);
  };

  auto has_split_edge = [&](const Work &w)
  {
    for (int i = 0; i <= Dim; i++)
    {
      for (int j = i + 1; j <= Dim; j++)
      {
        if (midpoint.contains(detail::EdgeKey(w.v[i], w.v[j])))
        {
          return true;
        }
      }
    }
    return false;
  };

  std::vector<Work> next;
  next.reserve(cells.size() * 2);
  for (std::size_t i = 0; i < cells.size(); i++)
  {
    if (flag[i])
    {
      bisect_one(cells[i], next);
    }
    else
    {
      next.push_back(cells[i]);
    }
  }
  cells.swap(next);

  // Closure: keep bisecting any cell that has a hanging vertex on an edge.
  bool changed = !midpoint.empty();
  while (changed)
  {
    changed = false;
    next.clear();
    for (const auto &w : cells)
    {
      if (has_split_edge(w))
      {
        bisect_one(w, next);
        changed = true;
      }
      else
      {
        next.push_back(w);
      }
    }
    cells.swap(next);
  }

  // Order children by parent so cell numbering is stable under refinement.
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Work &x, const Work &y) { return x.origin < y.origin; });

  std::vector<Cell> ordered;
  std::vector<int> gen, parent;
  ordered.reserve(cells.size());
  for (const auto &w : cells)
  {
    ordered.push_back(w.v);
    gen.push_back(w.gen);
    parent.push_back(w.origin);
  }

  // Boundary tags: a new boundary face lies in the old face spanned by the
  // union of its vertices' ancestors.
  std::map<std::array<int, Dim>, BoundaryTag> tags;
  {
    std::map<std::array<int, Dim>, int> face_count;
    for (const auto &c : ordered)
    {
      Cell s = c;
      std::ranges::sort(s);
      for (int drop = 0; drop <= Dim; drop++)
      {
        std::array<int, Dim> f;
        for (int i = 0, j = 0; i <= Dim; i++)
        {
          if (i != drop)
          {
            f[j++] = s[i];
          }
        }
        face_count[f]++;
      }
    }
    for (const auto &[f, count] : face_count)
    {
      if (count != 1)
      {
        continue;
      }
      std::vector<int> anc;
      for (int v : f)
      {
        if (v < mesh.num_vertices())
        {
          anc.push_back(v);
        }
        else
        {
          const auto &pa = ancestors[v - mesh.num_vertices()];
          anc.insert(anc.end(), pa.begin(), pa.end());
        }
      }
      std::ranges::sort(anc);
      anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
      if (static_cast<int>(anc.size()) != Dim)
      {
        throw Error("Bisect: boundary face ancestry is inconsistent");
      }
      const int old = mesh.find_simplex(Dim - 1, anc);
      if (old < 0)
      {
        throw Error("Bisect: boundary face has no parent face");
      }
      tags[f] = mesh.boundary_tag(old);
    }
  }

  auto out = SimplicialMesh<Dim>::Build(std::move(vertices), std::move(ordered), std::move(gen),
                                        tags, std::move(parent));
  out.set_reference_measures(mesh.reference_volume(), mesh.reference_boundary_measure());
  return out;
}

// Bisect every cell once.
template <int Dim>
SimplicialMesh<Dim> BisectAll(const SimplicialMesh<Dim> &mesh)
{
  std::vector<int> all(mesh.num_cells());
  std::iota(all.begin(), all.end(), 0);
  return Bisect(mesh, all);
}

}  // namespace feec

#endif  // FEEC_REFINE_HPP
