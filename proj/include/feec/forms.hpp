// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_FORMS_HPP
#define FEEC_FORMS_HPP

#include <functional>
#include <utility>

#include "feec/common.hpp"

namespace feec
{

// A k-form given through its proxy field. Derivative and coderivative proxies
// are optional; consumers fall back to projections when they are missing.
//
// Proxy conventions: in 3D, d is grad/curl/div and 2-forms are represented by
// the vector (v_yz, v_zx, v_xy); in 2D a 1-form (a, b) means a dx + b dy, so
// d of a 1-form is rot = d_x b - d_y a.
template <int Dim>
struct FormField
{
  using Fn = std::function<Proxy(const Point<Dim> &)>;

  int k = 0;
  Fn value;
  Fn d;      // proxy of d v, a (k+1)-form
  Fn delta;  // proxy of the coderivative, a (k-1)-form

  Proxy operator()(const Point<Dim> &x) const { return value(x); }
  bool has_d() const { return static_cast<bool>(d); }
  bool has_delta() const { return static_cast<bool>(delta); }
};

inline Proxy MakeProxy(std::initializer_list<double> v)
{
  Proxy p(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v)
  {
    p(i++) = x;
  }
  return p;
}

template <int Dim>
FormField<Dim> ConstantForm(int k, Proxy c)
{
  FormField<Dim> f;
  f.k = k;
  f.value = [c](const Point<Dim> &) { return c; };
  const int nd = ProxyComponents(k + 1, Dim);
  const int nc = ProxyComponents(k - 1, Dim);
  if (k < Dim)
  {
    f.d = [nd](const Point<Dim> &) -> Proxy { return Proxy::Zero(nd); };
  }
  if (k > 0)
  {
    f.delta = [nc](const Point<Dim> &) -> Proxy { return Proxy::Zero(nc); };
  }
  return f;
}

template <int Dim>
FormField<Dim> ZeroForm(int k)
{
  return ConstantForm<Dim>(k, Proxy::Zero(ProxyComponents(k, Dim)));
}

// a * f + b * g, keeping derivative information when both inputs have it.
template <int Dim>
FormField<Dim> Combine(double a, const FormField<Dim> &f, double b, const FormField<Dim> &g)
{
  if (f.k != g.k)
  {
    throw Error("Combine: form degree mismatch");
  }
  FormField<Dim> h;
  h.k = f.k;
  h.value = [=](const Point<Dim> &x) -> Proxy { return a * f.value(x) + b * g.value(x); };
  if (f.has_d() && g.has_d())
  {
    h.d = [=](const Point<Dim> &x) -> Proxy { return a * f.d(x) + b * g.d(x); };
  }
  if (f.has_delta() && g.has_delta())
  {
    h.delta = [=](const Point<Dim> &x) -> Proxy { return a * f.delta(x) + b * g.delta(x); };
  }
  return h;
}

}  // namespace feec

#endif  // FEEC_FORMS_HPP
