// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/forms.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <numeric>
#include <optional>
#include <random>

namespace hodgefem {

/// Mass matrices and coefficient-space exterior derivatives of the discrete complex
/// V^0 -> V^1 -> V^2 on one mesh.
struct DiscreteComplex {
  MeshPtr mesh;
  std::array<SparseMatrix, 3> M;
  std::array<SparseMatrix, 2> D;

  explicit DiscreteComplex(MeshPtr m) : mesh(std::move(m)) {
    for (int k = 0; k < 3; ++k) M[k] = mass_matrix(space(k));
    for (int k = 0; k < 2; ++k) D[k] = exterior_derivative_operator(space(k));
  }

  FormSpace space(int k) const { return FormSpace(k, mesh); }
  int ndof(int k) const { return space(k).ndof(); }
  const SparseMatrix &mass(int k) const { return M.at(k); }
  const SparseMatrix &d(int k) const { return D.at(k); }
};

struct SolveStats {
  double relative_residual = 0.0;
};

/// Sparse LU with one step of iterative refinement. Throws SolverError when the
/// factorization fails or the relative residual stays above 1e-10.
inline Eigen::VectorXd solve_symmetric_indefinite(const SparseMatrix &A, const Eigen::VectorXd &b,
                                                  SolveStats *stats = nullptr) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw InputError("solve: dimension mismatch");
  if (A.rows() == 0) return Eigen::VectorXd();
  SparseMatrix Ac = A;
  Ac.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(Ac);
  lu.factorize(Ac);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(b);
  x += lu.solve(b - Ac * x);
  const double bn = b.norm();
  const double rel = bn > 0.0 ? (b - Ac * x).norm() / bn : (Ac * x).norm();
  if (stats) stats->relative_residual = rel;
  if (!x.allFinite() || !(rel <= 1e-10)) throw SolverError("linear solve residual too large: " + std::to_string(rel));
  return x;
}

/// M-orthonormal basis of the discrete harmonic k-forms, stored column-wise.
struct HarmonicBasis {
  FormSpace space;
  Eigen::MatrixXd vectors;

  int dim() const { return static_cast<int>(vectors.cols()); }
};

namespace detail {

inline std::vector<int> vertex_components(const Mesh &mesh) {
  std::vector<int> parent(mesh.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto &e : mesh.edges()) parent[find(e.v[0])] = find(e.v[1]);
  std::vector<int> label(mesh.num_vertices(), -1), root_label(mesh.num_vertices(), -1);
  int next = 0;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const int r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

/// Solves the graph-Laplacian-like system L a = rhs with one vertex per
/// connected component pinned to zero.
class GroundedSolver {
 public:
  GroundedSolver(const SparseMatrix &L, const std::vector<int> &component) : n_(L.rows()) {
    std::vector<char> pinned(n_, 0);
    std::vector<char> seen(n_ + 1, 0);
    for (int i = 0; i < n_; ++i)
      if (!seen[component[i]]) {
        seen[component[i]] = 1;
        pinned[i] = 1;
      }
    map_.assign(n_, -1);
    for (int i = 0; i < n_; ++i)
      if (!pinned[i]) map_[i] = reduced_++;
    std::vector<Triplet> trip;
    for (int col = 0; col < L.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(L, col); it; ++it)
        if (map_[it.row()] >= 0 && map_[it.col()] >= 0) trip.emplace_back(map_[it.row()], map_[it.col()], it.value());
    SparseMatrix R(reduced_, reduced_);
    R.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(R);
    if (ldlt_.info() != Eigen::Success) throw SolverError("grounded Laplacian factorization failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd &rhs) const {
    Eigen::VectorXd r(reduced_);
    for (int i = 0; i < n_; ++i)
      if (map_[i] >= 0) r[map_[i]] = rhs[i];
    const Eigen::VectorXd y = ldlt_.solve(r);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i)
      if (map_[i] >= 0) out[i] = y[map_[i]];
    return out;
  }

 private:
  int n_ = 0;
  int reduced_ = 0;
  std::vector<int> map_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

/// Columns of X made M-orthonormal by symmetric eigen-decomposition of the Gram
/// matrix; directions with relative Gram eigenvalue below `drop` are discarded.
inline Eigen::MatrixXd m_orthonormalize(const Eigen::MatrixXd &X, const SparseMatrix &M, double drop = 1e-12) {
  if (X.cols() == 0) return X;
  const Eigen::MatrixXd G = X.transpose() * (M * X);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (G + G.transpose()));
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  std::vector<int> keep;
  for (int i = static_cast<int>(G.rows()) - 1; i >= 0; --i)
    if (eig.eigenvalues()[i] > drop * top && eig.eigenvalues()[i] > 0.0) keep.push_back(i);
  Eigen::MatrixXd Q(X.rows(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j)
    Q.col(j) = X * eig.eigenvectors().col(keep[j]) / std::sqrt(eig.eigenvalues()[keep[j]]);
  return Q;
}

inline SparseMatrix integer_incidence(const DiscreteComplex &cx, int k) { return derivative_matrix(cx.space(k)); }

}  // namespace detail

/// Discrete harmonic k-forms: ker d_k intersected with the M-orthogonal
/// complement of im d_{k-1}. Seeded random vectors are projected onto ker d_k by
/// a constrained least-squares solve and then cleared of their exact part by a
/// grounded Laplacian solve. The numerical rank of the result must equal
/// expected_dim, otherwise DimensionError is thrown.
inline HarmonicBasis harmonic_basis(const DiscreteComplex &cx, int k, int expected_dim) {
  if (k < 0 || k > 2) throw InputError("harmonic_basis: k must be 0, 1 or 2");
  if (expected_dim < 0) throw InputError("harmonic_basis: expected dimension must be non-negative");
  const Mesh &mesh = *cx.mesh;
  const FormSpace space = cx.space(k);
  const int n = space.ndof();
  const SparseMatrix &M = cx.mass(k);
  const std::vector<int> comp = detail::vertex_components(mesh);
  const int components = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;

  // Euler-characteristic count, exact for a triangulated planar domain.
  int combinatorial = 0;
  if (k == 0) combinatorial = components;
  if (k == 1) combinatorial = mesh.num_edges() - mesh.num_vertices() - mesh.num_triangles() + components;
  if (k == 2) return expected_dim == 0 ? HarmonicBasis{space, Eigen::MatrixXd(n, 0)}
                                       : throw DimensionError("harmonic 2-forms are trivial under natural boundary conditions");

  if (k == 0) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, components);
    for (int i = 0; i < n; ++i) X(i, comp[i]) = 1.0;
    const Eigen::MatrixXd Q = detail::m_orthonormalize(X, M, 1e-8);
    if (Q.cols() != expected_dim)
      throw DimensionError("harmonic 0-forms have dimension " + std::to_string(Q.cols()) + ", expected " +
                           std::to_string(expected_dim));
    return {space, Q};
  }

  const int samples = combinatorial + 4;
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd Y(n, samples);
  for (int j = 0; j < samples; ++j)
    for (int i = 0; i < n; ++i) Y(i, j) = normal(rng);

  // Project onto ker C_1 in the M inner product: [M C^T; C 0][x; l] = [M y; 0].
  // C_1 maps onto V^2 for a domain with boundary, so the system is regular.
  const SparseMatrix C = detail::integer_incidence(cx, k);
  const int m = static_cast<int>(C.rows());
  std::vector<Triplet> trip;
  for (int col = 0; col < M.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(M, col); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int col = 0; col < C.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(C, col); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  SparseMatrix S(n + m, n + m);
  S.setFromTriplets(trip.begin(), trip.end());
  S.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw SolverError("harmonic projection factorization failed");
  Eigen::MatrixXd X(n, samples);
  for (int j = 0; j < samples; ++j) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    rhs.head(n) = M * Y.col(j);
    Eigen::VectorXd sol = lu.solve(rhs);
    sol += lu.solve(rhs - S * sol);
    X.col(j) = sol.head(n);
  }

  {
    const SparseMatrix &D0 = cx.d(0);
    const SparseMatrix L = SparseMatrix(D0.transpose() * M * D0);
    const detail::GroundedSolver grounded(L, comp);
    for (int j = 0; j < samples; ++j) {
      const Eigen::VectorXd a = grounded.solve(D0.transpose() * (M * X.col(j)));
      X.col(j) -= D0 * a;
    }
  }

  // Rank relative to the sampled inputs: a harmonic component carries a share
  // of order 1/n of a random vector's mass, roundoff carries far less.
  double input_scale = 0.0;
  for (int j = 0; j < samples; ++j) input_scale = std::max(input_scale, Y.col(j).dot(M * Y.col(j)));
  const Eigen::MatrixXd G = X.transpose() * (M * X);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (G + G.transpose())).eigenvalues().maxCoeff();
  const Eigen::MatrixXd Q = top > 1e-12 * input_scale ? detail::m_orthonormalize(X, M, 1e-12 * input_scale / top)
                                                      : Eigen::MatrixXd(n, 0);
  if (Q.cols() != expected_dim)
    throw DimensionError("harmonic space has dimension " + std::to_string(Q.cols()) + ", expected " +
                         std::to_string(expected_dim) + " (Euler count " + std::to_string(combinatorial) + ")");
  return {space, Q};
}

/// Discrete Hodge Laplacian solution (sigma_h, u_h, p_h) in V^{k-1} x V^k x H^k.
struct MixedSolution {
  int k = 0;
  CoefficientVector sigma;
  CoefficientVector u;
  CoefficientVector p;
  Eigen::VectorXd harmonic_coords;
  double solve_residual = 0.0;
  double residual_sigma = 0.0;  // first Galerkin equation, relative
  double residual_u = 0.0;      // second Galerkin equation, relative
  double residual_harmonic = 0.0;
};

/// Block matrix of the mixed system with unknowns (sigma, u, c), p = P c:
///   [ -M_{k-1}      D^T M_k         0   ]
///   [ M_k D     d^T M_{k+1} d    M_k P  ]
///   [ 0            P^T M_k          0   ]
inline SparseMatrix assemble_hodge_system(const DiscreteComplex &cx, int k, const HarmonicBasis &basis) {
  if (k < 0 || k > 2) throw InputError("hodge system: k must be 0, 1 or 2");
  const int ns = k > 0 ? cx.ndof(k - 1) : 0;
  const int nu = cx.ndof(k);
  const int nh = basis.dim();
  if (basis.vectors.rows() != nu) throw InputError("harmonic basis does not match the form space");
  const SparseMatrix &Mk = cx.mass(k);
  std::vector<Triplet> trip;
  auto add = [&](const SparseMatrix &B, int r0, int c0, double scale) {
    for (int col = 0; col < B.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(B, col); it; ++it)
        if (it.value() != 0.0) trip.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
  };
  if (k > 0) {
    const SparseMatrix MD = SparseMatrix(Mk * cx.d(k - 1));
    add(cx.mass(k - 1), 0, 0, -1.0);
    add(SparseMatrix(MD.transpose()), 0, ns, 1.0);
    add(MD, ns, 0, 1.0);
  }
  if (k < 2) {
    const SparseMatrix &Dk = cx.d(k);
    add(SparseMatrix(Dk.transpose() * cx.mass(k + 1) * Dk), ns, ns, 1.0);
  }
  if (nh > 0) {
    const Eigen::MatrixXd MP = Mk * basis.vectors;
    for (int j = 0; j < nh; ++j)
      for (int i = 0; i < nu; ++i)
        if (MP(i, j) != 0.0) {
          trip.emplace_back(ns + i, ns + nu + j, MP(i, j));
          trip.emplace_back(ns + nu + j, ns + i, MP(i, j));
        }
  }
  SparseMatrix A(ns + nu + nh, ns + nu + nh);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

/// Writes the nonzeros of a sparse matrix as "i j value" lines (0-based).
inline void write_block_system(std::ostream &os, const SparseMatrix &A) {
  os.imbue(std::locale::classic());
  os.precision(17);
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

namespace detail {

inline MixedSolution solve_with_load(const DiscreteComplex &cx, int k, const HarmonicBasis &basis,
                                     const Eigen::VectorXd &F) {
  const int ns = k > 0 ? cx.ndof(k - 1) : 0;
  const int nu = cx.ndof(k);
  const int nh = basis.dim();
  const SparseMatrix A = assemble_hodge_system(cx, k, basis);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ns + nu + nh);
  rhs.segment(ns, nu) = F;
  SolveStats stats;
  const Eigen::VectorXd x = solve_symmetric_indefinite(A, rhs, &stats);

  MixedSolution sol;
  sol.k = k;
  sol.sigma = k > 0 ? CoefficientVector(cx.space(k - 1), x.head(ns)) : CoefficientVector();
  sol.u = CoefficientVector(cx.space(k), x.segment(ns, nu));
  sol.harmonic_coords = x.tail(nh);
  sol.p = CoefficientVector(cx.space(k), nh > 0 ? Eigen::VectorXd(basis.vectors * sol.harmonic_coords)
                                               : Eigen::VectorXd(Eigen::VectorXd::Zero(nu)));
  sol.solve_residual = stats.relative_residual;

  const SparseMatrix &Mk = cx.mass(k);
  const double scale = std::max(F.norm(), std::numeric_limits<double>::min());
  Eigen::VectorXd r2 = Mk * sol.p.values - F;
  if (k > 0) {
    const Eigen::VectorXd r1 = -(cx.mass(k - 1) * sol.sigma.values) + cx.d(k - 1).transpose() * (Mk * sol.u.values);
    sol.residual_sigma = r1.norm() / scale;
    r2 += Mk * (cx.d(k - 1) * sol.sigma.values);
  }
  if (k < 2) r2 += cx.d(k).transpose() * (cx.mass(k + 1) * (cx.d(k) * sol.u.values));
  sol.residual_u = r2.norm() / scale;
  if (nh > 0) sol.residual_harmonic = (basis.vectors.transpose() * (Mk * sol.u.values)).norm() / scale;
  return sol;
}

}  // namespace detail

/// Mixed Hodge Laplacian with load f, integrated by the 6-point rule.
inline MixedSolution solve_hodge_laplacian(const DiscreteComplex &cx, int k, const AnalyticForm &f,
                                           const HarmonicBasis &basis) {
  if (f.k != k) throw InputError("load form degree does not match k");
  return detail::solve_with_load(cx, k, basis, load_vector(cx.space(k), f));
}

/// Mixed Hodge Laplacian with a discrete load f_h in V^k.
inline MixedSolution solve_hodge_laplacian(const DiscreteComplex &cx, int k, const CoefficientVector &f,
                                           const HarmonicBasis &basis) {
  if (f.space.k != k || f.space.mesh != cx.mesh) throw InputError("load vector does not live on this complex");
  return detail::solve_with_load(cx, k, basis, cx.mass(k) * f.values);
}

/// v = b + h + z with b exact, h harmonic and z in the orthogonal complement of ker d.
struct HodgeDecomposition {
  CoefficientVector exact;
  CoefficientVector harmonic;
  CoefficientVector coexact;
  double max_cross_inner = 0.0;  // max |<x, y>| / (|x| |y|) over distinct pairs
  double max_cross_relative = 0.0;  // max |<x, y>| / |v|^2
  double reconstruction = 0.0;   // |v - b - h - z| / |v| in the M norm
};

inline HodgeDecomposition hodge_decompose(const DiscreteComplex &cx, const CoefficientVector &v,
                                          const HarmonicBasis &basis) {
  const int k = v.space.k;
  const MixedSolution sol = solve_hodge_laplacian(cx, k, v, basis);
  const SparseMatrix &M = cx.mass(k);
  const FormSpace space = cx.space(k);
  const int n = space.ndof();
  HodgeDecomposition out;
  out.exact = CoefficientVector(space, k > 0 ? Eigen::VectorXd(cx.d(k - 1) * sol.sigma.values) : Eigen::VectorXd::Zero(n));
  out.harmonic = sol.p;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  if (k < 2) {
    Eigen::SimplicialLDLT<SparseMatrix> mass_solver(M);
    if (mass_solver.info() != Eigen::Success) throw SolverError("mass matrix factorization failed");
    z = mass_solver.solve(cx.d(k).transpose() * (cx.mass(k + 1) * (cx.d(k) * sol.u.values)));
  }
  out.coexact = CoefficientVector(space, z);

  const std::array<const Eigen::VectorXd *, 3> parts = {&out.exact.values, &out.harmonic.values, &out.coexact.values};
  const double vn = mass_norm(M, v.values);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double ni = mass_norm(M, *parts[i]), nj = mass_norm(M, *parts[j]);
      const double ip = std::abs(parts[i]->dot(M * *parts[j]));
      if (ni > 0.0 && nj > 0.0) out.max_cross_inner = std::max(out.max_cross_inner, ip / (ni * nj));
      if (vn > 0.0) out.max_cross_relative = std::max(out.max_cross_relative, ip / (vn * vn));
    }
  const Eigen::VectorXd rest = v.values - out.exact.values - out.harmonic.values - out.coexact.values;
  out.reconstruction = vn > 0.0 ? mass_norm(M, rest) / vn : mass_norm(M, rest);
  return out;
}

struct GapPair {
  double ab = 0.0;  // delta(A, B)
  double ba = 0.0;  // delta(B, A)
};

namespace detail {

inline double directional_gap(const Eigen::MatrixXd &QA, const Eigen::MatrixXd &QB, const SparseMatrix &M) {
  if (QA.cols() == 0) return QB.cols() == 0 ? 0.0 : 1.0;
  if (QB.cols() == 0 || QA.cols() > QB.cols()) return 1.0;
  const Eigen::MatrixXd G = QA.transpose() * (M * QB);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

}  // namespace detail

/// Directional gaps between span(A) and span(B) in the M inner product:
/// delta(A, B) is the largest M-distance of a unit vector of span(A) to span(B).
inline GapPair gap(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B, const SparseMatrix &M) {
  if (A.rows() != M.rows() || B.rows() != M.rows()) throw InputError("gap: basis size mismatch");
  const Eigen::MatrixXd QA = detail::m_orthonormalize(A, M);
  const Eigen::MatrixXd QB = detail::m_orthonormalize(B, M);
  return {detail::directional_gap(QA, QB, M), detail::directional_gap(QB, QA, M)};
}

}  // namespace hodgefem
