// SPDX-License-Identifier: Apache-2.0
#include "hodgefem/forms.hpp"
#include "hodgefem/problems.hpp"

#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <numbers>
#include <random>
#include <sstream>

using namespace hodgefem;

namespace {

MeshPtr shared(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

MeshPtr reference_triangle() { return shared(Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}})); }

MeshPtr two_triangle_square() {
  return shared(Mesh::with_longest_edge_marking({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}));
}

MeshPtr refined(Mesh m, int levels) {
  for (int i = 0; i < levels; ++i) m = uniform_refine(m).first;
  return shared(std::move(m));
}

Eigen::MatrixXd dense(const SparseMatrix &A) { return Eigen::MatrixXd(A); }

}  // namespace

TEST(DerivativeMatrix, ReferenceTriangleIncidence) {
  const auto mesh = reference_triangle();
  const Eigen::MatrixXd D0 = dense(derivative_matrix(FormSpace(0, mesh)));
  ASSERT_EQ(D0.rows(), 3);
  ASSERT_EQ(D0.cols(), 3);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(D0(e, mesh->edge(e).v[0]), -1.0);
    EXPECT_EQ(D0(e, mesh->edge(e).v[1]), 1.0);
    EXPECT_EQ(D0.row(e).cwiseAbs().sum(), 2.0);
    EXPECT_EQ(D0.row(e).sum(), 0.0);
  }
}

TEST(DerivativeMatrix, ComplexIsExactOnBenchmarkMeshes) {
  for (const auto &name : problem_names()) {
    const auto mesh = refined(*make_problem(name).initial_mesh, 2);
    for (auto op : {derivative_matrix, exterior_derivative_operator}) {
      const Eigen::MatrixXd P = dense(op(FormSpace(1, mesh))) * dense(op(FormSpace(0, mesh)));
      EXPECT_EQ(P.cwiseAbs().maxCoeff(), 0.0) << name;
    }
    const Eigen::MatrixXd D1 = dense(derivative_matrix(FormSpace(1, mesh)));
    for (int i = 0; i < D1.rows(); ++i) EXPECT_EQ(D1.row(i).cwiseAbs().sum(), 3.0);
  }
}

TEST(DerivativeMatrix, RejectsTopDegree) { EXPECT_THROW(derivative_matrix(FormSpace(2, reference_triangle())), InputError); }

TEST(MassMatrix, ReferenceTriangleP1) {
  Eigen::Matrix3d expected;
  expected << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  expected /= 24.0;
  EXPECT_LE((dense(mass_matrix(FormSpace(0, reference_triangle()))) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MassMatrix, PiecewiseConstantsUseArea) {
  const auto mesh = shared(Mesh({{0, 0}, {3, 0}, {0, 2}}, {{0, 1, 2}}));
  const Eigen::MatrixXd M = dense(mass_matrix(FormSpace(2, mesh)));
  ASSERT_EQ(M.rows(), 1);
  EXPECT_NEAR(M(0, 0), 3.0, 1e-15);
}

TEST(MassMatrix, SymmetricPositiveDefiniteOnBenchmarkMeshes) {
  for (const auto &name : problem_names()) {
    const auto mesh = refined(*make_problem(name).initial_mesh, 1);
    for (int k = 0; k < 3; ++k) {
      const SparseMatrix M = mass_matrix(FormSpace(k, mesh));
      EXPECT_LE((dense(M) - dense(M).transpose()).cwiseAbs().maxCoeff(), 1e-15);
      Eigen::SimplicialLLT<SparseMatrix> llt(M);
      EXPECT_EQ(llt.info(), Eigen::Success) << name << " k=" << k;
    }
  }
}

TEST(MassMatrix, MatchesQuadratureNorm) {
  const auto mesh = refined(union_jack_square(), 1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 3; ++k) {
    const FormSpace s(k, mesh);
    Eigen::VectorXd v(s.ndof());
    for (auto &x : v) x = g(rng);
    const double quad = norms(CoefficientVector(s, v), AnalyticForm::zero(k)).l2;
    EXPECT_NEAR(mass_norm(mass_matrix(s), v), quad, 1e-12 * quad);
  }
}

TEST(Interpolate, ConstantsAndGradients) {
  const auto mesh = refined(lshape_mesh(), 1);
  const CoefficientVector c = interpolate(FormSpace(0, mesh), AnalyticForm::scalar(0, [](const Vec2 &) { return 2.5; }));
  for (double v : c.values) EXPECT_DOUBLE_EQ(v, 2.5);

  auto phi = [](const Vec2 &x) { return x.x() * x.x() - 3.0 * x.x() * x.y() + 0.5 * x.y() * x.y() + x.x(); };
  const AnalyticForm grad = AnalyticForm::vector(
      [](const Vec2 &x) { return Vec2(2.0 * x.x() - 3.0 * x.y() + 1.0, -3.0 * x.x() + x.y()); });
  const CoefficientVector g = interpolate(FormSpace(1, mesh), grad);
  for (int e = 0; e < mesh->num_edges(); ++e) {
    const double expected = phi(mesh->vertex(mesh->edge(e).v[1])) - phi(mesh->vertex(mesh->edge(e).v[0]));
    EXPECT_NEAR(g.values[e], expected, 1e-12);
  }

  const CoefficientVector one = interpolate(FormSpace(2, mesh), AnalyticForm::scalar(2, [](const Vec2 &) { return 1.0; }));
  for (double v : one.values) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Interpolate, CommutesWithExteriorDerivative) {
  const auto mesh = refined(annulus_mesh(), 1);
  // Cubic potential with analytic gradient: two-point Gauss integrates the circulations exactly.
  const AnalyticForm w = AnalyticForm::scalar(0, [](const Vec2 &x) { return x.x() * x.x() * x.x() - 2.0 * x.x() * x.y() * x.y() + x.y(); })
                             .with_d(AnalyticForm::vector([](const Vec2 &x) {
                               return Vec2(3.0 * x.x() * x.x() - 2.0 * x.y() * x.y(), 1.0 - 4.0 * x.x() * x.y());
                             }));
  const Eigen::VectorXd lhs = exterior_derivative_operator(FormSpace(0, mesh)) * interpolate(FormSpace(0, mesh), w).values;
  const Eigen::VectorXd rhs = interpolate(FormSpace(1, mesh), w.exterior_derivative()).values;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Coderivative, ConstantVectorFieldHasZeroDivergence) {
  const auto mesh = refined(union_jack_square(), 1);
  const CoefficientVector v = interpolate(FormSpace(1, mesh), AnalyticForm::vector([](const Vec2 &) { return Vec2(0.3, -1.2); }));
  for (const Proxy &d : elementwise_coderivative(v)) EXPECT_NEAR(d[0], 0.0, 1e-13);
}

TEST(Coderivative, WhitneyFormsAreElementwiseDivergenceFree) {
  // The Whitney interpolant of (x, y) is the gradient of the P1 interpolant of
  // (x^2 + y^2) / 2, hence -div vanishes inside every element. The analytic
  // field itself has coderivative -2.
  const auto mesh = refined(union_jack_square(), 1);
  const AnalyticForm xy = AnalyticForm::vector([](const Vec2 &x) { return x; });
  const CoefficientVector v = interpolate(FormSpace(1, mesh), xy);
  for (const Proxy &d : elementwise_coderivative(v)) EXPECT_NEAR(d[0], 0.0, 1e-12);
  EXPECT_NEAR(xy.coderivative()(Vec2(0.3, 0.4))[0], -2.0, 1e-8);
}

TEST(Coderivative, PiecewiseConstantTwoFormsVanish) {
  const auto mesh = refined(lshape_mesh(), 1);
  const FormSpace s(2, mesh);
  const CoefficientVector v(s, Eigen::VectorXd::LinSpaced(s.ndof(), -1.0, 4.0));
  for (const Proxy &d : elementwise_coderivative(v)) EXPECT_EQ(d.norm(), 0.0);
}

TEST(TraceJump, ContinuousFieldHasNoInteriorJumps) {
  const auto mesh = refined(lshape_mesh(), 2);
  const PiecewiseForm w = piecewise(AnalyticForm::vector([](const Vec2 &x) { return Vec2(std::cos(x.y()), x.x() * x.y()); }));
  const PiecewiseForm s = piecewise(AnalyticForm::scalar(2, [](const Vec2 &x) { return x.x() - x.y(); }));
  for (int e = 0; e < mesh->num_edges(); ++e) {
    if (mesh->edge(e).boundary()) continue;
    for (double j : trace_star_jump(w, *mesh, e)) EXPECT_NEAR(j, 0.0, 1e-14);
    for (double j : trace_star_jump(s, *mesh, e)) EXPECT_NEAR(j, 0.0, 1e-14);
  }
}

TEST(TraceJump, ZeroFieldOnBoundaryEdge) {
  const auto mesh = two_triangle_square();
  const CoefficientVector zero = CoefficientVector::zero(FormSpace(1, mesh));
  for (int e = 0; e < mesh->num_edges(); ++e)
    for (double j : trace_star_jump(piecewise(zero), *mesh, e)) EXPECT_EQ(j, 0.0);
}

TEST(TraceJump, WhitneyDiagonalBasisFunction) {
  // Whitney function of the diagonal (0,0)-(1,1): (y, 1 - x) below it and
  // (1 - y, x) above it. Normal jump across the diagonal: sqrt(2) (2 s - 1) at
  // parameter s, up to the orientation sign.
  const auto mesh = two_triangle_square();
  const int diag = mesh->edge_between(0, 2);
  const FormSpace s(1, mesh);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s.ndof());
  v[diag] = 1.0;
  const CoefficientVector w(s, v);
  const auto jump = trace_star_jump(piecewise(w), *mesh, diag);
  for (int i = 0; i < 3; ++i) {
    const double param = quadrature::edge_rule()[i].s;
    EXPECT_NEAR(std::abs(jump[i]), std::sqrt(2.0) * std::abs(2.0 * param - 1.0), 1e-14);
  }
  // Elementwise closed forms.
  const Vec2 x(0.7, 0.2), y(0.2, 0.7);
  const auto &t0 = mesh->triangle(0).v;
  const int lower = std::count(t0.begin(), t0.end(), 1) ? 0 : 1;  // the triangle holding (1, 0)
  EXPECT_LE((evaluate_at(w, lower, x) - Vec2(x.y(), 1.0 - x.x())).norm(), 1e-14);
  EXPECT_LE((evaluate_at(w, 1 - lower, y) - Vec2(1.0 - y.y(), y.x())).norm(), 1e-14);
  EXPECT_THROW(trace_star_jump(piecewise(w), *mesh, 99), InputError);
}

TEST(Norms, ReproductionOfDiscreteFields) {
  const auto mesh = refined(annulus_mesh(), 1);
  const AnalyticForm lin = AnalyticForm::scalar(0, [](const Vec2 &x) { return 1.0 + 2.0 * x.x() - x.y(); })
                               .with_d(AnalyticForm::vector([](const Vec2 &) { return Vec2(2.0, -1.0); }));
  const FormNorms n0 = norms(interpolate(FormSpace(0, mesh), lin), lin);
  EXPECT_LE(n0.l2, 1e-12);
  EXPECT_LE(n0.d_l2, 1e-12);
  const AnalyticForm cst = AnalyticForm::vector([](const Vec2 &) { return Vec2(1.5, -0.5); });
  const FormNorms n1 = norms(interpolate(FormSpace(1, mesh), cst), cst);
  EXPECT_LE(n1.l2, 1e-12);
  EXPECT_LE(n1.d_l2, 1e-12);
}

TEST(Norms, SineProductHasNormOneHalf) {
  const auto mesh = refined(union_jack_square(), 6);
  const AnalyticForm u = AnalyticForm::scalar(2, [](const Vec2 &x) {
    return std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
  });
  const FormNorms n = norms(CoefficientVector::zero(FormSpace(2, mesh)), u);
  EXPECT_NEAR(n.l2, 0.5, 1e-10);
}

TEST(Norms, TriangleInequality) {
  const auto mesh = refined(lshape_mesh(), 1);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const FormSpace s(1, mesh);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd a(s.ndof()), b(s.ndof());
    for (auto &x : a) x = g(rng);
    for (auto &x : b) x = g(rng);
    const auto z = AnalyticForm::zero(1);
    const FormNorms na = norms(CoefficientVector(s, a), z), nb = norms(CoefficientVector(s, b), z),
                    nab = norms(CoefficientVector(s, a + b), z);
    EXPECT_LE(nab.l2, na.l2 + nb.l2 + 1e-14);
    EXPECT_LE(nab.d_l2, na.d_l2 + nb.d_l2 + 1e-14);
  }
}

TEST(Prolong, ExactForNestedMeshes) {
  const Mesh coarse = lshape_mesh();
  const auto cmesh = shared(coarse);
  const auto [fine, rec] = bisect_marked(coarse, std::vector<int>{0, 3});
  const auto fmesh = shared(fine);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int k = 0; k < 3; ++k) {
    const FormSpace cs(k, cmesh);
    Eigen::VectorXd v(cs.ndof());
    for (auto &x : v) x = g(rng);
    const CoefficientVector cv(cs, v);
    const CoefficientVector fv = prolong(cv, fmesh, rec.parent);
    // Same function: equal values at fine-element centroids and equal mass norm.
    for (int t = 0; t < fine.num_triangles(); ++t) {
      const auto &tv = fine.triangle(t).v;
      const Vec2 c = (fine.vertex(tv[0]) + fine.vertex(tv[1]) + fine.vertex(tv[2])) / 3.0;
      EXPECT_LE((evaluate_at(fv, t, c) - evaluate_at(cv, rec.parent[t], c)).norm(), 1e-12);
    }
    EXPECT_NEAR(mass_norm(mass_matrix(FormSpace(k, fmesh)), fv.values), mass_norm(mass_matrix(cs), v), 1e-12);
  }
  std::vector<int> wrong(fine.num_triangles(), 0);
  EXPECT_THROW(prolong(CoefficientVector::zero(FormSpace(0, cmesh)), fmesh, wrong), GeometryError);
}

TEST(Coefficients, CsvRoundTrip) {
  const auto mesh = refined(union_jack_square(), 1);
  const FormSpace s(1, mesh);
  const CoefficientVector v(s, Eigen::VectorXd::LinSpaced(s.ndof(), -1.0 / 3.0, 7.0 / 3.0));
  std::stringstream ss;
  write_coefficients_csv(ss, v);
  const CoefficientVector back = read_coefficients_csv(ss, s);
  EXPECT_EQ(back.values, v.values);
  std::stringstream bad("0,1\n1;2\n");
  EXPECT_THROW(read_coefficients_csv(bad, s), InputError);
}

TEST(Coefficients, LengthMustMatchSpace) {
  EXPECT_THROW(CoefficientVector(FormSpace(0, reference_triangle()), Eigen::VectorXd::Zero(5)), InputError);
}
