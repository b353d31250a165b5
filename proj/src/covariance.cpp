#include "locent/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace locent::covariance {

namespace {

double det2(const Eigen::Matrix2d& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

Eigen::Matrix4d CovMatrix4::full() const {
  Eigen::Matrix4d m;
  m.topLeftCorner<2, 2>() = A;
  m.topRightCorner<2, 2>() = C;
  m.bottomLeftCorner<2, 2>() = C.transpose();
  m.bottomRightCorner<2, 2>() = B;
  return m;
}

CovMatrix4 CovMatrix4::from_full(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<2, 2>(), m.bottomRightCorner<2, 2>(), m.topRightCorner<2, 2>()};
}

Eigen::Matrix2d symplectic_J() {
  Eigen::Matrix2d J;
  J << 0.0, 1.0, -1.0, 0.0;
  return J;
}

Eigen::Matrix4d symplectic_Omega() {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega.topLeftCorner<2, 2>() = symplectic_J();
  omega.bottomRightCorner<2, 2>() = symplectic_J();
  return omega;
}

CovMatrix4 build_cm(const PairParams& params) {
  const double a2 = params.a() * params.a();
  const double hbar2 = params.hbar() * params.hbar();
  const double f1 = factor_f(1, params);
  const double f2 = factor_f(2, params);
  const double inv_b2 = params.b().inverse_square();

  CovMatrix4 cm;
  cm.A = Eigen::Vector2d(a2 * f1 / (2.0 * f2), 2.0 * hbar2 * f1 / a2).asDiagonal();
  cm.B = cm.A;
  cm.C = Eigen::Vector2d(a2 * a2 * inv_b2 / (2.0 * f2), -2.0 * hbar2 * inv_b2).asDiagonal();
  return cm;
}

double min_uncertainty_eigenvalue(const CovMatrix4& cm, double hbar) {
  const Eigen::Matrix4cd h = cm.full().cast<std::complex<double>>() +
                             std::complex<double>(0.0, hbar) * symplectic_Omega().cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_physical(const CovMatrix4& cm, double hbar, double tolerance) {
  const Eigen::Matrix4d m = cm.full();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tolerance * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    return false;
  }
  if (!(cm.A(0, 0) > 0.0 && det2(cm.A) > 0.0 && cm.B(0, 0) > 0.0 && det2(cm.B) > 0.0)) return false;
  return min_uncertainty_eigenvalue(cm, hbar) >= -tolerance * std::max(1.0, m.norm());
}

SimonResult simon_invariant_general(const CovMatrix4& cm, double hbar) {
  // Same polynomial as detA detB + (hbar^2 - |detC|)^2 - Tr(AJCJBJC^TJ) - hbar^2 (detA + detB),
  // regrouped as (detA - hbar^2)(detB - hbar^2) + |detC| (|detC| - 2 hbar^2) - Tr(...).
  // Near a product state every term of the textbook ordering is O(1) while I is tiny,
  // so the naive sum loses all significant digits.
  const Eigen::Matrix2d J = symplectic_J();
  const double hbar2 = hbar * hbar;
  auto excess_det = [hbar2](const Eigen::Matrix2d& m) {
    return std::fma(m(0, 0), m(1, 1), -hbar2) - m(0, 1) * m(1, 0);
  };
  const double abs_det_c = std::abs(det2(cm.C));
  const double trace_term = (cm.A * J * cm.C * J * cm.B * J * cm.C.transpose() * J).trace();
  const double I = excess_det(cm.A) * excess_det(cm.B) + abs_det_c * (abs_det_c - 2.0 * hbar2) - trace_term;
  return {I, I >= 0.0};
}

double simon_invariant_closed(const PairParams& params) {
  if (params.is_separable()) return 0.0;
  const double ratio = params.a() / params.b().value();
  const double h2 = params.hbar() * params.hbar();
  return -4.0 * h2 * h2 * std::pow(ratio, 4) / factor_f(2, params);
}

double standard_form_scale(const PairParams& params) {
  const double a2 = params.a() * params.a();
  return std::pow(4.0 * params.hbar() * params.hbar() * factor_f(2, params) / (a2 * a2), 0.25);
}

CovMatrix4 apply_local_scaling(const CovMatrix4& cm, double s1, double s2) {
  const Eigen::Vector4d diag(s1, 1.0 / s1, s2, 1.0 / s2);
  const Eigen::Matrix4d scaled = diag.asDiagonal() * cm.full() * diag.asDiagonal();
  return CovMatrix4::from_full(scaled);
}

StandardForm read_standard_form(const CovMatrix4& cm) {
  return {cm.A(0, 0), cm.C(0, 0), -cm.C(1, 1)};
}

StandardForm standard_form(const PairParams& params) {
  const double f1 = factor_f(1, params);
  const double f2 = factor_f(2, params);
  const double hbar = params.hbar();
  const double root_f2 = std::sqrt(f2);
  const double a2 = params.a() * params.a();
  const StandardForm closed{hbar * f1 / root_f2, hbar * a2 * params.b().inverse_square() / root_f2,
                            hbar * a2 * params.b().inverse_square() / root_f2};

  const double s = standard_form_scale(params);
  const CovMatrix4 scaled = apply_local_scaling(build_cm(params), s, s);
  Eigen::Matrix4d pattern;
  // clang-format off
  pattern << closed.n,   0.0,         closed.k_x, 0.0,
             0.0,        closed.n,    0.0,        -closed.k_p,
             closed.k_x, 0.0,         closed.n,   0.0,
             0.0,        -closed.k_p, 0.0,        closed.n;
  // clang-format on
  const double mismatch = (scaled.full() - pattern).cwiseAbs().maxCoeff();
  if (mismatch > 1e-12 * std::max(hbar, closed.n)) {
    throw std::logic_error("local symplectic scaling did not reach standard form");
  }
  return closed;
}

double eof_of_delta(double delta) {
  if (!(delta > 0.0)) throw DomainError("EoF requires delta > 0");
  const double r = std::sqrt(delta);
  const double plus = (1.0 / r + r) * (1.0 / r + r) / 4.0;
  const double minus = (1.0 / r - r) * (1.0 / r - r) / 4.0;
  return xlog2x(plus) - xlog2x(minus);
}

double eof(const StandardForm& sf, double hbar) {
  const double gap_x = sf.n - sf.k_x;
  const double gap_p = sf.n - sf.k_p;
  if (!(gap_x > 0.0) || !(gap_p > 0.0)) {
    throw DomainError("EoF requires n - k_x > 0 and n - k_p > 0");
  }
  return eof_of_delta(std::sqrt(gap_x * gap_p) / hbar);
}

double reduced_symplectic_eigenvalue(const CovMatrix4& cm, double hbar) {
  return std::sqrt(det2(cm.A)) / hbar;
}

double entropy_from_nu(double nu) {
  if (!(nu >= 1.0)) throw DomainError("symplectic eigenvalue below 1 violates the uncertainty relation");
  return xlog2x((nu + 1.0) / 2.0) - xlog2x((nu - 1.0) / 2.0);
}

}  // namespace locent::covariance
