// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_MESH_IO_HPP
#define FEEC_MESH_IO_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>

#include "feec/mesh.hpp"

namespace feec
{

// ASCII mesh format:
//   dim n
//   vertices N      followed by N coordinate lines
//   cells M         followed by M vertex tuples (refinement order)
//   boundary K      followed by K lines "v0 .. v_{n-1} tag", tag in {gamma, natural}
template <int Dim>
void WriteMesh(std::ostream &os, const SimplicialMesh<Dim> &mesh)
{
  os << "dim " << Dim << "\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  for (const auto &x : mesh.vertices())
  {
    for (int a = 0; a < Dim; a++)
    {
      os << (a ? " " : "") << FormatDouble(x(a));
    }
    os << "\n";
  }
  os << "cells " << mesh.num_cells() << "\n";
  for (int c = 0; c < mesh.num_cells(); c++)
  {
    const auto &cell = mesh.ordered_cell(c);
    for (int i = 0; i <= Dim; i++)
    {
      os << (i ? " " : "") << cell[i];
    }
    os << "\n";
  }
  int nb = 0;
  for (int f = 0; f < mesh.num_faces(); f++)
  {
    nb += mesh.is_boundary_face(f);
  }
  os << "boundary " << nb << "\n";
  for (int f = 0; f < mesh.num_faces(); f++)
  {
    if (!mesh.is_boundary_face(f))
    {
      continue;
    }
    for (int v : mesh.simplex(Dim - 1, f))
    {
      os << v << " ";
    }
    os << (mesh.boundary_tag(f) == BoundaryTag::GammaEssential ? "gamma" : "natural") << "\n";
  }
}

namespace detail
{

inline void ExpectKeyword(std::istream &is, const std::string &kw, long &value)
{
  std::string word;
  if (!(is >> word) || word != kw || !(is >> value) || value < 0)
  {
    throw Error("mesh file: expected '" + kw + " <count>'");
  }
}

template <int Dim>
SimplicialMesh<Dim> ReadMeshBody(std::istream &is)
{
  long nv = 0, nc = 0, nb = 0;
  ExpectKeyword(is, "vertices", nv);
  std::vector<Point<Dim>> vertices(nv);
  for (auto &x : vertices)
  {
    for (int a = 0; a < Dim; a++)
    {
      std::string tok;
      if (!(is >> tok))
      {
        throw Error("mesh file: truncated vertex list");
      }
      x(a) = std::stod(tok);
    }
  }
  ExpectKeyword(is, "cells", nc);
  std::vector<std::array<int, Dim + 1>> cells(nc);
  for (auto &c : cells)
  {
    for (int &v : c)
    {
      if (!(is >> v) || v < 0 || v >= nv)
      {
        throw Error("mesh file: bad cell vertex index");
      }
    }
  }
  ExpectKeyword(is, "boundary", nb);
  std::map<std::array<int, Dim>, BoundaryTag> tags;
  for (long i = 0; i < nb; i++)
  {
    std::array<int, Dim> f;
    for (int &v : f)
    {
      if (!(is >> v))
      {
        throw Error("mesh file: truncated boundary list");
      }
    }
    std::ranges::sort(f);
    std::string tag;
    if (!(is >> tag) || (tag != "gamma" && tag != "natural"))
    {
      throw Error("mesh file: boundary tag must be 'gamma' or 'natural'");
    }
    tags[f] = tag == "gamma" ? BoundaryTag::GammaEssential : BoundaryTag::GammaNatural;
  }
  return SimplicialMesh<Dim>::Build(std::move(vertices), std::move(cells), {}, tags);
}

}  // namespace detail

using AnyMesh = std::variant<Mesh2, Mesh3>;

inline AnyMesh ReadMesh(std::istream &is)
{
  std::string word;
  int dim = 0;
  if (!(is >> word) || word != "dim" || !(is >> dim))
  {
    throw Error("mesh file: expected 'dim <n>' header");
  }
  try
  {
    if (dim == 2)
    {
      return detail::ReadMeshBody<2>(is);
    }
    if (dim == 3)
    {
      return detail::ReadMeshBody<3>(is);
    }
  }
  catch (const std::invalid_argument &)
  {
    throw Error("mesh file: malformed number");
  }
  catch (const std::out_of_range &)
  {
    throw Error("mesh file: number out of range");
  }
  throw Error("mesh file: dim must be 2 or 3");
}

inline AnyMesh ReadMeshFile(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open mesh file '" + path + "'");
  }
  return ReadMesh(in);
}

}  // namespace feec

#endif  // FEEC_MESH_IO_HPP
