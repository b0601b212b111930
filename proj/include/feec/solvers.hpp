// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_SOLVERS_HPP
#define FEEC_SOLVERS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "feec/assembly.hpp"

namespace feec
{

struct SolveReport
{
  int iterations = 0;
  double relative_residual = 0.0;
  double seconds = 0.0;
  std::string preconditioner = "none";
  bool converged = true;
};

// z = B r for a symmetric positive definite preconditioner B.
using Preconditioner = std::function<void(const Vector &r, Vector &z)>;

inline Preconditioner IdentityPreconditioner()
{
  return [](const Vector &r, Vector &z) { z = r; };
}

inline Preconditioner JacobiPreconditioner(const SparseMatrix &A)
{
  Vector inv = A.diagonal();
  for (Eigen::Index i = 0; i < inv.size(); i++)
  {
    if (inv(i) == 0.0)
    {
      throw Error("Jacobi preconditioner: zero diagonal entry");
    }
    inv(i) = 1.0 / inv(i);
  }
  return [inv](const Vector &r, Vector &z) { z = inv.cwiseProduct(r); };
}

namespace detail
{

inline double Seconds(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline constexpr int kDirectSolveCap = 50000;

// Sparse LDL^T for SPD systems, LU otherwise. Throws with the offending DOF
// when a zero pivot is met.
inline Vector SolveDirect(const SparseMatrix &A, const Vector &b, SolveReport *report = nullptr,
                          int cap = kDirectSolveCap)
{
  const auto t0 = std::chrono::steady_clock::now();
  if (A.rows() != A.cols() || A.rows() != b.size())
  {
    throw Error("solve_direct: dimension mismatch");
  }
  if (A.rows() > cap)
  {
    throw Error("solve_direct: system larger than the direct-solve cap");
  }
  std::function<Vector(const Vector &)> solve;
  if (SymmetryDefect(A) <= 1e-12)
  {
    auto ldlt = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(A);
    if (ldlt->info() == Eigen::Success && ldlt->vectorD().minCoeff() > 0.0)
    {
      solve = [ldlt](const Vector &r) -> Vector { return ldlt->solve(r); };
    }
  }
  if (!solve)
  {
    Eigen::SparseMatrix<double> Ac(A);
    Ac.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->analyzePattern(Ac);
    lu->factorize(Ac);
    if (lu->info() != Eigen::Success)
    {
      // Locate the zero pivot through the symmetric factorization when possible.
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      std::string where;
      if (ldlt.info() == Eigen::Success)
      {
        const Vector d = ldlt.vectorD();
        const auto perm = ldlt.permutationPinv();
        for (Eigen::Index i = 0; i < d.size(); i++)
        {
          if (std::abs(d(i)) <= 1e-14 * d.cwiseAbs().maxCoeff())
          {
            where = " at DOF " + std::to_string(perm.indices()(i));
            break;
          }
        }
      }
      throw Error("solve_direct: singular matrix (zero pivot" + where + ")");
    }
    solve = [lu](const Vector &r) -> Vector { return lu->solve(r); };
  }
  Vector x = solve(b);
  // Iterative refinement recovers the digits large factorizations lose.
  for (int step = 0; step < 3; step++)
  {
    const Vector r = b - A * x;
    if (r.norm() <= 1e-12 * b.norm())
    {
      break;
    }
    x += solve(r);
  }
  const Vector r = b - A * x;
  const double bn = b.norm();
  const double res = bn > 0.0 ? r.norm() / bn : (A * x).norm();
  // On fine meshes rounding in A x alone can exceed 1e-10 relative residual;
  // a normwise backward error at round-off level still certifies the solve.
  double anorm = 0.0;
  for (int i = 0; i < A.outerSize(); i++)
  {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(A, i); it; ++it)
    {
      row += std::abs(it.value());
    }
    anorm = std::max(anorm, row);
  }
  const double scale = anorm * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  const double backward = scale > 0.0 ? r.lpNorm<Eigen::Infinity>() / scale : 0.0;
  const bool ok = res <= 1e-10 || backward <= 1e-14;
  if (report)
  {
    report->iterations = 1;
    report->relative_residual = res;
    report->seconds = detail::Seconds(t0);
    report->preconditioner = "direct";
    report->converged = ok;
  }
  if (!ok)
  {
    throw Error("solve_direct: residual " + FormatDouble(res) + " above 1e-10 (singular matrix?)");
  }
  return x;
}

// Preconditioned conjugate gradients; stops when sqrt(r.Br / r0.Br0) <= tol.
inline Vector SolveCG(const SparseMatrix &A, const Vector &b, const Preconditioner &B, double tol,
                      int maxit, SolveReport &report, const std::string &tag = "none")
{
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport{};
  report.preconditioner = tag;
  Vector x = Vector::Zero(b.size());
  if (b.norm() == 0.0)
  {
    return x;
  }
  Vector r = b, z(b.size()), p, Ap;
  B(r, z);
  double rz = r.dot(z);
  const double rz0 = rz;
  if (!(rz0 > 0.0))
  {
    throw Error("solve_cg: preconditioner is not positive");
  }
  p = z;
  int it = 0;
  double rel = 1.0;
  while (rel > tol)
  {
    if (it >= maxit)
    {
      report.iterations = it;
      report.relative_residual = rel;
      report.converged = false;
      report.seconds = detail::Seconds(t0);
      throw Error("solve_cg: maximum iterations exceeded (relative residual " + FormatDouble(rel) +
                  ")");
    }
    Ap = A * p;
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    B(r, z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    it++;
    rel = std::sqrt(std::max(rz, 0.0) / rz0);
  }
  report.iterations = it;
  report.relative_residual = rel;
  report.seconds = detail::Seconds(t0);
  return x;
}

// Preconditioned MINRES for symmetric (indefinite) systems with an SPD
// preconditioner; stops on the preconditioned residual norm relative to its
// initial value.
inline Vector SolveMinres(const SparseMatrix &A, const Vector &b, const Preconditioner &B,
                          double tol, int maxit, SolveReport &report, const std::string &tag = "none")
{
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport{};
  report.preconditioner = tag;
  const Eigen::Index n = b.size();
  Vector x = Vector::Zero(n);
  if (b.norm() == 0.0)
  {
    return x;
  }
  Vector r1 = b, y(n);
  B(r1, y);
  double beta1 = r1.dot(y);
  if (!(beta1 > 0.0))
  {
    throw Error("solve_minres: preconditioner is not positive");
  }
  beta1 = std::sqrt(beta1);
  Vector r2 = r1, v(n), w = Vector::Zero(n), w1 = Vector::Zero(n), w2 = Vector::Zero(n);
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  int it = 0;
  double rel = 1.0;
  while (rel > tol)
  {
    if (it >= maxit)
    {
      report.iterations = it;
      report.relative_residual = rel;
      report.converged = false;
      report.seconds = detail::Seconds(t0);
      throw Error("solve_minres: maximum iterations exceeded (relative residual " +
                  FormatDouble(rel) + ")");
    }
    it++;
    const double s = 1.0 / beta;
    v = s * y;
    y = A * v;
    if (it >= 2)
    {
      y -= (beta / oldb) * r1;
    }
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    B(r2, y);
    oldb = beta;
    beta = r2.dot(y);
    if (beta < 0.0)
    {
      throw Error("solve_minres: preconditioner is not positive");
    }
    beta = std::sqrt(beta);
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;
    rel = std::abs(phibar) / beta1;
    if (beta == 0.0)
    {
      break;
    }
  }
  report.iterations = it;
  report.relative_residual = rel;
  report.seconds = detail::Seconds(t0);
  return x;
}

// Reusable sparse SPD inverse for preconditioner blocks.
class SpdInverse
{
public:
  SpdInverse() = default;
  explicit SpdInverse(const SparseMatrix &A)
      : ldlt_(std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(A)), n_(A.rows())
  {
    if (n_ > 0 && ldlt_->info() != Eigen::Success)
    {
      throw Error("SpdInverse: factorization failed");
    }
  }
  Vector operator()(const Vector &r) const { return n_ == 0 ? Vector() : Vector(ldlt_->solve(r)); }

private:
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  Eigen::Index n_ = 0;
};

// Nodal auxiliary space (HX) preconditioner for (eps d u, d v) + (kappa u, v)
// on Whitney k-forms, k = 1 (n = 2, 3) or k = 2 (n = 3):
//   B = S + G A_G^{-1} G^T + P A_P^{-1} P^T,
// with S the smoother (symmetric Gauss-Seidel by default, or Jacobi), P the embedding of vector P1
// k-form proxies and G = D_{k-1} composed with the (k-1)-level nodal
// embedding (G = D_0 for k = 1). For k = 2 the curl part also carries an edge
// smoother D_1 diag(D_1^T A D_1)^{-1} D_1^T. All operators act on free DOFs.
enum class HxSmoother
{
  Jacobi,
  SymmetricGaussSeidel
};

template <int Dim>
class HxPreconditioner
{
public:
  HxPreconditioner(const ProblemSpec<Dim> &p, const ProblemSpaces<Dim> &s, const SparseMatrix &A,
                   HxSmoother smoother = HxSmoother::SymmetricGaussSeidel)
      : smoother_(smoother)
  {
    const int k = p.k;
    if (!(k == 1 || (k == 2 && Dim == 3)) || p.kind != ProblemKind::HdPositive)
    {
      throw Error("build_hx_preconditioner: unsupported k");
    }
    if (!p.eps.is_constant() || !p.kappa.is_constant())
    {
      throw Error("build_hx_preconditioner: constant eps and kappa required");
    }
    const double eps = p.eps.value, kappa = p.kappa.value;
    const auto &mesh = s.trial.mesh();
    const bool gamma = s.trial.gamma();

    diag_ = A.diagonal();
    lower_ = A.triangularView<Eigen::Lower>();
    upper_ = A.triangularView<Eigen::Upper>();

    FormSpace<Dim> scalar(mesh, 0, Family::LagrangeP1, gamma);
    const SparseMatrix M0 = AssembleMass(scalar);
    const SparseMatrix K0 = AssembleStiffness(scalar, FormSpace<Dim>(mesh, 1, Family::TrimmedP1, gamma));

    // Vector P1 operators are componentwise copies of scalar ones.
    auto componentwise = [&](const SparseMatrix &S, int nc)
    {
      std::vector<Eigen::Triplet<double>> t;
      for (int r = 0; r < S.outerSize(); r++)
      {
        for (SparseMatrix::InnerIterator it(S, r); it; ++it)
        {
          for (int j = 0; j < nc; j++)
          {
            t.emplace_back(r * nc + j, static_cast<int>(it.col()) * nc + j, it.value());
          }
        }
      }
      SparseMatrix V(S.rows() * nc, S.cols() * nc);
      V.setFromTriplets(t.begin(), t.end());
      return V;
    };

    // Nodal block on H^k proxies.
    FormSpace<Dim> vk(mesh, k, Family::VectorLagrangeP1, gamma);
    const int nck = vk.components();
    const SparseMatrix Ak = componentwise(SparseMatrix(eps * K0 + kappa * M0), nck);
    P_ = RestrictFree(NodalEmbedding(s.trial, vk), s.trial, vk);
    Pinv_ = SpdInverse(RestrictFree(Ak, vk, vk));

    // Gradient-type block on H^{k-1}.
    if (k == 1)
    {
      G_ = RestrictFree(ToReal(ExteriorDerivative(scalar)), s.trial, scalar);
      Ginv_ = SpdInverse(RestrictFree(SparseMatrix(kappa * (K0 + M0)), scalar, scalar));
    }
    else
    {
      FormSpace<Dim> edges(mesh, 1, Family::TrimmedP1, gamma);
      FormSpace<Dim> v1(mesh, 1, Family::VectorLagrangeP1, gamma);
      const SparseMatrix D1 = ToReal(ExteriorDerivative(edges));
      const SparseMatrix G = SparseMatrix(D1 * NodalEmbedding(edges, v1));
      G_ = RestrictFree(G, s.trial, v1);
      const SparseMatrix A1 = componentwise(SparseMatrix(kappa * (K0 + M0)), v1.components());
      Ginv_ = SpdInverse(RestrictFree(A1, v1, v1));
      // Divergence-free fields are curls of edge fields whose high-frequency
      // part the nodal space misses: add a Jacobi smoother on edges.
      C_ = RestrictFree(D1, s.trial, edges);
      const SparseMatrix Ae = SparseMatrix(C_.transpose() * A * C_);
      edge_diag_inv_ = Ae.diagonal();
      for (Eigen::Index i = 0; i < edge_diag_inv_.size(); i++)
      {
        edge_diag_inv_(i) = edge_diag_inv_(i) > 0.0 ? 1.0 / edge_diag_inv_(i) : 0.0;
      }
    }
  }

  void operator()(const Vector &r, Vector &z) const
  {
    if (smoother_ == HxSmoother::Jacobi)
    {
      z = r.cwiseQuotient(diag_);
    }
    else
    {
      // Symmetric Gauss-Seidel: (D + U)^{-1} D (D + L)^{-1}.
      Vector y = lower_.triangularView<Eigen::Lower>().solve(r);
      y = diag_.cwiseProduct(y);
      z = upper_.triangularView<Eigen::Upper>().solve(y);
    }
    z += G_ * Ginv_(G_.transpose() * r);
    z += P_ * Pinv_(P_.transpose() * r);
    if (C_.size() > 0)
    {
      z += C_ * edge_diag_inv_.cwiseProduct(C_.transpose() * r);
    }
  }

  Preconditioner as_function() const
  {
    return [self = *this](const Vector &r, Vector &z) { self(r, z); };
  }

private:
  HxSmoother smoother_;
  Vector diag_, edge_diag_inv_;
  SparseMatrix lower_, upper_, G_, P_, C_;
  SpdInverse Ginv_, Pinv_;
};

// Extreme eigenvalues of B A (B, A SPD) by dense factorization, for small systems.
struct SpectralBounds
{
  double lambda_min = 0.0, lambda_max = 0.0;
  double ratio() const { return lambda_max / lambda_min; }
};

inline SpectralBounds SpectralProbe(const SparseMatrix &A, const Preconditioner &B, int cap = 2000)
{
  const Eigen::Index n = A.rows();
  if (n > cap)
  {
    throw Error("spectral probe: system larger than the dense cap");
  }
  Eigen::MatrixXd Bm(n, n);
  Vector e = Vector::Zero(n), z;
  for (Eigen::Index j = 0; j < n; j++)
  {
    e(j) = 1.0;
    B(e, z);
    Bm.col(j) = z;
    e(j) = 0.0;
  }
  Bm = 0.5 * (Bm + Bm.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(Bm);
  if (llt.info() != Eigen::Success)
  {
    throw Error("spectral probe: preconditioner is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Ad(A);
  const Eigen::MatrixXd S = L.transpose() * Ad * L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

// Block-diagonal preconditioner diag(B1, B2) for saddle systems.
inline Preconditioner BlockDiagonal(const Preconditioner &B1, int n1, const Preconditioner &B2, int n2)
{
  return [=](const Vector &r, Vector &z)
  {
    z.resize(n1 + n2);
    Vector z1, z2;
    B1(r.head(n1), z1);
    B2(r.tail(n2), z2);
    z.head(n1) = z1;
    z.tail(n2) = z2;
  };
}

}  // namespace feec

#endif  // FEEC_SOLVERS_HPP
