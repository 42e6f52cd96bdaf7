#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "histreg/mathutil.hpp"

namespace histreg {

enum class BasisKind { pspline, thinplate, cubic_rs, tensor };

struct BasisSpec {
  BasisKind kind = BasisKind::pspline;
  int num_basis = 20;
  int degree = 3;        // B-spline degree (pspline)
  int penalty_order = 2; // difference order (pspline)
  int adaptive_dim = 0;  // number of adaptive penalty weight functions; 0 = plain penalty
};

// Order-d forward difference operator, (K-d) x K.
inline Eigen::MatrixXd difference_matrix(int K, int d) {
  if (K <= d) fail_config("difference_matrix: need K > d");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - d, K);
  std::vector<double> coef(static_cast<size_t>(d) + 1);
  for (int k = 0; k <= d; ++k) {
    double c = 1.0;
    for (int j = 0; j < k; ++j) c = c * (d - j) / (j + 1);
    coef[static_cast<size_t>(k)] = ((d - k) % 2 == 0 ? c : -c);
  }
  for (int i = 0; i < K - d; ++i)
    for (int k = 0; k <= d; ++k) D(i, i + k) = coef[static_cast<size_t>(k)];
  return D;
}

// S = D'D with null space the degree-(d-1) polynomials in coefficient index.
inline Eigen::MatrixXd difference_penalty(int K, int d) {
  Eigen::MatrixXd D = difference_matrix(K, d);
  return D.transpose() * D;
}

// B-spline evaluation matrix: K functions of the given degree on equally
// spaced knots over [lo, hi]. Rows are a partition of unity. Points outside
// the domain are an error; there is no extrapolation.
inline Eigen::MatrixXd bspline_matrix(const Eigen::VectorXd& points, int K, int degree, double lo, double hi) {
  if (K < degree + 1) fail_config("bspline_matrix: need K >= degree + 1");
  if (!(hi > lo)) fail_config("bspline_matrix: empty domain");
  const int nspans = K - degree;
  const double h = (hi - lo) / nspans;
  // uniform knot vector with degree extra knots on each side
  Eigen::VectorXd knots(K + degree + 1);
  for (int i = 0; i < knots.size(); ++i) knots[i] = lo + (i - degree) * h;
  const double slack = 1e-9 * (hi - lo);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(points.size(), K);
  std::vector<double> N(static_cast<size_t>(degree) + 1), left(static_cast<size_t>(degree) + 1),
      right(static_cast<size_t>(degree) + 1);
  for (int r = 0; r < points.size(); ++r) {
    double x = points[r];
    if (x < lo - slack || x > hi + slack)
      fail_input("bspline_matrix: point " + format_double(x) + " outside domain [" + format_double(lo) + "," +
                 format_double(hi) + "]");
    x = std::clamp(x, lo, hi);
    int span = degree + std::min(nspans - 1, static_cast<int>((x - lo) / h));
    // Cox-de Boor triangular recurrence for the degree+1 nonzero functions
    N[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      left[static_cast<size_t>(j)] = x - knots[span + 1 - j];
      right[static_cast<size_t>(j)] = knots[span + j] - x;
      double saved = 0.0;
      for (int q = 0; q < j; ++q) {
        double temp = N[static_cast<size_t>(q)] /
                      (right[static_cast<size_t>(q) + 1] + left[static_cast<size_t>(j - q)]);
        N[static_cast<size_t>(q)] = saved + right[static_cast<size_t>(q) + 1] * temp;
        saved = left[static_cast<size_t>(j - q)] * temp;
      }
      N[static_cast<size_t>(j)] = saved;
    }
    for (int q = 0; q <= degree; ++q) B(r, span - degree + q) = N[static_cast<size_t>(q)];
  }
  return B;
}

// Adaptive P-spline penalties: S_a = D' diag(C_a) D where the columns of C are
// a low-degree B-spline partition of unity over the difference index. With
// A = 1 this is the plain difference penalty.
inline std::vector<Eigen::MatrixXd> adaptive_penalties(int K, int d, int A) {
  if (A < 1) fail_config("adaptive_penalties: need A >= 1");
  if (A > K - d) fail_config("adaptive_penalties: A exceeds number of difference terms");
  Eigen::MatrixXd D = difference_matrix(K, d);
  const int m = K - d;
  Eigen::VectorXd idx(m);
  for (int i = 0; i < m; ++i) idx[i] = m == 1 ? 0.5 : static_cast<double>(i) / (m - 1);
  int wdeg = std::min(2, A - 1);
  Eigen::MatrixXd C = bspline_matrix(idx, A, wdeg, 0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<size_t>(A));
  for (int a = 0; a < A; ++a) out.push_back(D.transpose() * C.col(a).asDiagonal() * D);
  return out;
}

namespace detail {

inline std::vector<double> distinct_sorted(const Eigen::VectorXd& points) {
  std::vector<double> v(points.data(), points.data() + points.size());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline Eigen::VectorXd quantile_knots(const Eigen::VectorXd& points, int K) {
  auto v = detail::distinct_sorted(points);
  if (static_cast<int>(v.size()) < K)
    fail_input("need at least " + std::to_string(K) + " distinct points, got " + std::to_string(v.size()));
  Eigen::VectorXd knots(K);
  for (int i = 0; i < K; ++i) knots[i] = quantile_sorted(v, static_cast<double>(i) / (K - 1));
  for (int i = 1; i < K; ++i)
    if (!(knots[i] > knots[i - 1])) fail_input("quantile knots are not strictly increasing");
  return knots;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// int_a^b |x-u| |x-v| dx, exact
inline double abs_product_integral(double u, double v, double a, double b) {
  if (u > v) std::swap(u, v);
  auto G = [&](double x) { return x * x * x / 3.0 - (u + v) * x * x / 2.0 + u * v * x; };
  double p1 = std::clamp(u, a, b), p2 = std::clamp(v, a, b);
  return (G(p1) - G(a)) - (G(p2) - G(p1)) + (G(b) - G(p2));
}

}  // namespace detail

// A realized basis: evaluation matrix at the construction points, penalties on
// the coefficients, and enough state to evaluate at new points.
struct BasisRealization {
  BasisKind kind = BasisKind::pspline;
  int K = 0;
  Eigen::MatrixXd B;                // construction points x K
  std::vector<Eigen::MatrixXd> S;   // K x K penalties, symmetric PSD
  int null_dim = 0;                 // dimension of the joint penalty null space
  int affine_cols = 0;              // thinplate: leading {1, x} columns, unpenalized

  // evaluation state
  double lo = 0.0, hi = 1.0;
  int degree = 3;
  Eigen::VectorXd knots;            // cubic_rs knots / thinplate radial centers
  Eigen::MatrixXd second_deriv_map; // cubic_rs: K x K, beta -> f'' at knots
  Eigen::MatrixXd affine_proj;      // thinplate: 2 x (K-2)
  std::vector<BasisRealization> margins;  // tensor: {margin_t, margin_p}

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& points) const {
    switch (kind) {
      case BasisKind::pspline:
        return bspline_matrix(points, K, degree, lo, hi);
      case BasisKind::cubic_rs:
        return evaluate_cubic(points);
      case BasisKind::thinplate:
        return evaluate_thinplate(points);
      case BasisKind::tensor:
        fail_config("tensor basis requires evaluate_pairs");
    }
    fail_config("unreachable");
  }

  // Tensor evaluation at matched (t_i, p_i) pairs: row-wise Kronecker of the
  // margin evaluations, column index = i_t * K_p + i_p.
  Eigen::MatrixXd evaluate_pairs(const Eigen::VectorXd& t, const Eigen::VectorXd& p) const {
    if (kind != BasisKind::tensor) fail_config("evaluate_pairs: not a tensor basis");
    Eigen::MatrixXd Bt = margins[0].evaluate(t);
    Eigen::MatrixXd Bp = margins[1].evaluate(p);
    Eigen::MatrixXd out(t.size(), Bt.cols() * Bp.cols());
    for (int r = 0; r < t.size(); ++r)
      for (int i = 0; i < Bt.cols(); ++i)
        for (int j = 0; j < Bp.cols(); ++j) out(r, i * Bp.cols() + j) = Bt(r, i) * Bp(r, j);
    return out;
  }

 private:
  Eigen::MatrixXd evaluate_cubic(const Eigen::VectorXd& points) const {
    const int Kn = static_cast<int>(knots.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(points.size(), Kn);
    for (int r = 0; r < points.size(); ++r) {
      double x = points[r];
      if (x <= knots[0]) {
        // natural spline: linear extrapolation with slope f'(x_0)
        double h = knots[1] - knots[0];
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(Kn);
        row[0] = 1.0 - (x - knots[0]) / h;
        row[1] = (x - knots[0]) / h;
        row -= (x - knots[0]) * h / 6.0 * second_deriv_map.row(1);
        out.row(r) = row;
        continue;
      }
      if (x >= knots[Kn - 1]) {
        double h = knots[Kn - 1] - knots[Kn - 2];
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(Kn);
        row[Kn - 1] = 1.0 + (x - knots[Kn - 1]) / h;
        row[Kn - 2] = -(x - knots[Kn - 1]) / h;
        row += (x - knots[Kn - 1]) * h / 6.0 * second_deriv_map.row(Kn - 2);
        out.row(r) = row;
        continue;
      }
      int i = static_cast<int>(std::upper_bound(knots.data(), knots.data() + Kn, x) - knots.data()) - 1;
      i = std::clamp(i, 0, Kn - 2);
      double h = knots[i + 1] - knots[i];
      double am = (knots[i + 1] - x) / h;
      double ap = (x - knots[i]) / h;
      double cm = ((knots[i + 1] - x) * (knots[i + 1] - x) * (knots[i + 1] - x) / h - h * (knots[i + 1] - x)) / 6.0;
      double cp = ((x - knots[i]) * (x - knots[i]) * (x - knots[i]) / h - h * (x - knots[i])) / 6.0;
      Eigen::RowVectorXd row = cm * second_deriv_map.row(i) + cp * second_deriv_map.row(i + 1);
      row[i] += am;
      row[i + 1] += ap;
      out.row(r) = row;
    }
    return out;
  }

  Eigen::MatrixXd evaluate_thinplate(const Eigen::VectorXd& points) const {
    const int nr = static_cast<int>(knots.size());
    Eigen::MatrixXd T(points.size(), 2);
    T.col(0).setOnes();
    T.col(1) = points;
    Eigen::MatrixXd R(points.size(), nr);
    for (int r = 0; r < points.size(); ++r)
      for (int j = 0; j < nr; ++j) {
        double d = std::abs(points[r] - knots[j]);
        R(r, j) = d * d * d;
      }
    Eigen::MatrixXd out(points.size(), 2 + nr);
    out.leftCols(2) = T;
    out.rightCols(nr) = R - T * affine_proj;
    return out;
  }
};

// Cardinal cubic regression spline on K quantile knots with the exact
// integrated squared second derivative penalty. Coefficient k is the function
// value at knot k; the penalty null space is the affine functions.
inline BasisRealization cubic_rs_basis(const Eigen::VectorXd& points, int K) {
  if (K < 3) fail_config("cubic_rs_basis: need K >= 3");
  BasisRealization out;
  out.kind = BasisKind::cubic_rs;
  out.K = K;
  out.knots = detail::quantile_knots(points, K);
  out.lo = out.knots[0];
  out.hi = out.knots[K - 1];
  // natural-spline second derivative system: Bm Dm beta = m at interior knots
  Eigen::VectorXd h = out.knots.tail(K - 1) - out.knots.head(K - 1);
  Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(K - 2, K);
  Eigen::MatrixXd Bm = Eigen::MatrixXd::Zero(K - 2, K - 2);
  for (int i = 0; i < K - 2; ++i) {
    Dm(i, i) = 1.0 / h[i];
    Dm(i, i + 1) = -1.0 / h[i] - 1.0 / h[i + 1];
    Dm(i, i + 2) = 1.0 / h[i + 1];
    Bm(i, i) = (h[i] + h[i + 1]) / 3.0;
    if (i + 1 < K - 2) {
      Bm(i, i + 1) = h[i + 1] / 6.0;
      Bm(i + 1, i) = h[i + 1] / 6.0;
    }
  }
  Eigen::MatrixXd BinvD = Bm.ldlt().solve(Dm);
  out.second_deriv_map = Eigen::MatrixXd::Zero(K, K);
  out.second_deriv_map.middleRows(1, K - 2) = BinvD;
  Eigen::MatrixXd S = Dm.transpose() * BinvD;
  out.S.push_back(0.5 * (S + S.transpose()));  // symmetrize roundoff
  out.null_dim = 2;
  out.B = out.evaluate(points);
  return out;
}

// One-dimensional thin-plate style regression spline: affine columns {1, x}
// plus |x - u_j|^3 radial functions at K-2 quantile centers, with the radial
// columns orthogonalized against the affine ones at the construction points.
// The penalty is the Gram matrix of the radial second derivatives over the
// data range, so affine fits are exactly unpenalized and the fit collapses to
// a straight line as lambda grows.
inline BasisRealization thinplate_basis(const Eigen::VectorXd& points, int K) {
  if (K < 4) fail_config("thinplate_basis: need K >= 4");
  BasisRealization out;
  out.kind = BasisKind::thinplate;
  out.K = K;
  auto v = detail::distinct_sorted(points);
  if (static_cast<int>(v.size()) < K)
    fail_input("thinplate_basis: need at least " + std::to_string(K) + " distinct points");
  const int nr = K - 2;
  out.knots.resize(nr);
  for (int i = 0; i < nr; ++i) out.knots[i] = quantile_sorted(v, static_cast<double>(i + 1) / (nr + 1));
  for (int i = 1; i < nr; ++i)
    if (!(out.knots[i] > out.knots[i - 1])) fail_input("thinplate_basis: duplicate radial centers");
  out.lo = v.front();
  out.hi = v.back();

  Eigen::MatrixXd T(points.size(), 2);
  T.col(0).setOnes();
  T.col(1) = points;
  Eigen::MatrixXd R(points.size(), nr);
  for (int r = 0; r < points.size(); ++r)
    for (int j = 0; j < nr; ++j) {
      double d = std::abs(points[r] - out.knots[j]);
      R(r, j) = d * d * d;
    }
  out.affine_proj = (T.transpose() * T).ldlt().solve(T.transpose() * R);

  // phi_j'' = 6|x - u_j|; S_rad(i,j) = int phi_i'' phi_j''
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < nr; ++i)
    for (int j = i; j < nr; ++j) {
      double val = 36.0 * detail::abs_product_integral(out.knots[i], out.knots[j], out.lo, out.hi);
      S(2 + i, 2 + j) = val;
      S(2 + j, 2 + i) = val;
    }
  out.S.push_back(S);
  out.null_dim = 2;
  out.affine_cols = 2;
  out.B = out.evaluate(points);
  return out;
}

// P-spline over [lo, hi]: uniform B-spline basis with difference (or adaptive)
// penalties on the coefficients.
inline BasisRealization pspline_basis(const Eigen::VectorXd& points, const BasisSpec& spec, double lo, double hi) {
  BasisRealization out;
  out.kind = BasisKind::pspline;
  out.K = spec.num_basis;
  out.degree = spec.degree;
  out.lo = lo;
  out.hi = hi;
  if (spec.num_basis < spec.penalty_order + 1) fail_config("pspline_basis: K must exceed penalty order");
  if (spec.adaptive_dim > 0)
    out.S = adaptive_penalties(spec.num_basis, spec.penalty_order, spec.adaptive_dim);
  else
    out.S.push_back(difference_penalty(spec.num_basis, spec.penalty_order));
  out.null_dim = spec.penalty_order;
  out.B = out.evaluate(points);
  return out;
}

// Anisotropic tensor product of two 1D realizations with marginal penalties
// S_t (x) I and I (x) S_p, one smoothing parameter each.
inline BasisRealization tensor_product(const BasisRealization& margin_t, const BasisRealization& margin_p) {
  if (margin_t.kind == BasisKind::tensor || margin_p.kind == BasisKind::tensor)
    fail_config("tensor_product: margins must be one-dimensional");
  BasisRealization out;
  out.kind = BasisKind::tensor;
  const int Kt = margin_t.K, Kp = margin_p.K;
  out.K = Kt * Kp;
  out.margins = {margin_t, margin_p};
  if (margin_t.S.size() != 1 || margin_p.S.size() != 1)
    fail_config("tensor_product: margins must carry a single penalty");
  Eigen::MatrixXd It = Eigen::MatrixXd::Identity(Kt, Kt);
  Eigen::MatrixXd Ip = Eigen::MatrixXd::Identity(Kp, Kp);
  out.S.push_back(detail::kron(margin_t.S[0], Ip));
  out.S.push_back(detail::kron(It, margin_p.S[0]));
  out.null_dim = margin_t.null_dim * margin_p.null_dim;
  return out;
}

}  // namespace histreg
