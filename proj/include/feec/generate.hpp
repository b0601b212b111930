// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_GENERATE_HPP
#define FEEC_GENERATE_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <string_view>

#include "feec/mesh.hpp"

namespace feec
{

enum class Domain
{
  UnitSquare,
  UnitCube,
  LShape,
  Fichera
};

inline int DomainDimension(Domain d)
{
  return (d == Domain::UnitSquare || d == Domain::LShape) ? 2 : 3;
}

inline Domain ParseDomain(std::string_view name)
{
  if (name == "unit-square" || name == "square")
  {
    return Domain::UnitSquare;
  }
  if (name == "unit-cube" || name == "cube")
  {
    return Domain::UnitCube;
  }
  if (name == "L-shape" || name == "lshape" || name == "l-shape")
  {
    return Domain::LShape;
  }
  if (name == "Fichera" || name == "fichera")
  {
    return Domain::Fichera;
  }
  throw Error("unknown domain '" + std::string(name) + "'");
}

inline std::string DomainName(Domain d)
{
  switch (d)
  {
    case Domain::UnitSquare:
      return "unit-square";
    case Domain::UnitCube:
      return "unit-cube";
    case Domain::LShape:
      return "L-shape";
    case Domain::Fichera:
      return "Fichera";
  }
  return {};
}

// Translation-invariant Kuhn triangulation of a box grid. Every grid cell is
// split into n! simplices along its main diagonal; vertices are listed in path
// order x0 -> x0 + e_p0 -> ... so that the first bisection of each simplex
// cuts the diagonal and the triangulation is compatible with bisection.
template <int Dim>
SimplicialMesh<Dim> GenerateStructured(Domain domain, int m)
{
  if (m < 1)
  {
    throw Error("GenerateStructured: m must be >= 1");
  }
  if (DomainDimension(domain) != Dim)
  {
    throw Error("GenerateStructured: domain " + DomainName(domain) + " is not " +
                std::to_string(Dim) + "-dimensional");
  }
  const bool unit = domain == Domain::UnitSquare || domain == Domain::UnitCube;
  const int cells_per_axis = unit ? m : 2 * m;
  const int offset = unit ? 0 : m;
  const int np = cells_per_axis + 1;

  auto grid_index = [&](const std::array<int, Dim> &g)
  {
    int idx = 0;
    for (int a = Dim - 1; a >= 0; a--)
    {
      idx = idx * np + g[a];
    }
    return idx;
  };
  // Removed quadrant/octant: all coordinates of the cell center positive,
  // except the L-shape removes [0,1] x [-1,0].
  auto keep_cell = [&](const std::array<int, Dim> &g)
  {
    if (unit)
    {
      return true;
    }
    std::array<bool, Dim> pos;
    for (int a = 0; a < Dim; a++)
    {
      pos[a] = g[a] >= offset;
    }
    if constexpr (Dim == 2)
    {
      return !(pos[0] && !pos[1]);
    }
    else
    {
      return !(pos[0] && pos[1] && pos[2]);
    }
  };

  int total_points = 1;
  int total_cells = 1;
  for (int a = 0; a < Dim; a++)
  {
    total_points *= np;
    total_cells *= cells_per_axis;
  }

  std::vector<int> perm(Dim);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do
  {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::array<int, Dim + 1>> raw_cells;
  std::vector<char> used(total_points, 0);
  for (int c = 0; c < total_cells; c++)
  {
    std::array<int, Dim> g;
    int r = c;
    for (int a = 0; a < Dim; a++)
    {
      g[a] = r % cells_per_axis;
      r /= cells_per_axis;
    }
    if (!keep_cell(g))
    {
      continue;
    }
    for (const auto &p : perms)
    {
      std::array<int, Dim + 1> cell;
      std::array<int, Dim> cur = g;
      cell[0] = grid_index(cur);
      for (int i = 0; i < Dim; i++)
      {
        cur[p[i]]++;
        cell[i + 1] = grid_index(cur);
      }
      for (int v : cell)
      {
        used[v] = 1;
      }
      raw_cells.push_back(cell);
    }
  }

  std::vector<int> renumber(total_points, -1);
  std::vector<Point<Dim>> vertices;
  for (int idx = 0; idx < total_points; idx++)
  {
    if (!used[idx])
    {
      continue;
    }
    renumber[idx] = static_cast<int>(vertices.size());
    Point<Dim> x;
    int r = idx;
    for (int a = 0; a < Dim; a++)
    {
      const int gi = r % np;
      r /= np;
      x(a) = static_cast<double>(gi - offset) / m;
    }
    vertices.push_back(x);
  }
  for (auto &cell : raw_cells)
  {
    for (int &v : cell)
    {
      v = renumber[v];
    }
  }
  return SimplicialMesh<Dim>::Build(std::move(vertices), std::move(raw_cells));
}

}  // namespace feec

#endif  // FEEC_GENERATE_HPP
