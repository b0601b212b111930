// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_COMMON_HPP
#define FEEC_COMMON_HPP

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace feec
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

// Proxy value of a k-form: scalar for k in {0, n}, vector otherwise. At most 3 entries.
using Proxy = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using IntSparseMatrix = Eigen::SparseMatrix<int, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

constexpr int Binomial(int n, int k)
{
  if (k < 0 || k > n)
  {
    return 0;
  }
  int r = 1;
  for (int i = 1; i <= k; i++)
  {
    r = r * (n - k + i) / i;
  }
  return r;
}

constexpr int Factorial(int n)
{
  return n <= 1 ? 1 : n * Factorial(n - 1);
}

// Number of proxy components of a k-form in dimension n.
constexpr int ProxyComponents(int k, int n)
{
  return Binomial(n, k);
}

// Increasing (size)-subsets of {0, ..., n-1} in lexicographic order.
inline std::vector<std::vector<int>> Combinations(int n, int size)
{
  std::vector<std::vector<int>> out;
  if (size < 0 || size > n)
  {
    return out;
  }
  std::vector<int> c(size);
  for (int i = 0; i < size; i++)
  {
    c[i] = i;
  }
  while (true)
  {
    out.push_back(c);
    int i = size - 1;
    while (i >= 0 && c[i] == n - size + i)
    {
      i--;
    }
    if (i < 0)
    {
      break;
    }
    c[i]++;
    for (int j = i + 1; j < size; j++)
    {
      c[j] = c[j - 1] + 1;
    }
  }
  return out;
}

// Shortest decimal representation that round-trips to the same double.
inline std::string FormatDouble(double x)
{
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc())
  {
    throw Error("FormatDouble: conversion failed");
  }
  return std::string(buf.data(), ptr);
}

// 2D scalar cross product / 3D vector cross product on proxies.
inline double Cross2(const Eigen::Vector2d &a, const Eigen::Vector2d &b)
{
  return a(0) * b(1) - a(1) * b(0);
}

}  // namespace feec

#endif  // FEEC_COMMON_HPP
