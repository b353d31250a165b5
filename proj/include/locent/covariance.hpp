#pragma once

// Correlation-matrix analysis of the two-mode state.
//
// Convention: gamma_ij = <R_i R_j + R_j R_i> - 2 <R_i><R_j> with
// R = (X1, P1, X2, P2). In this convention the vacuum carries hbar on the
// diagonal after standard-form scaling and the uncertainty relation reads
// gamma + i*hbar*Omega >= 0.

#include <Eigen/Dense>

#include "locent/gaussian_core.hpp"

namespace locent::covariance {

struct CovMatrix4 {
  Eigen::Matrix2d A;  // particle 1 (X1, P1)
  Eigen::Matrix2d B;  // particle 2 (X2, P2)
  Eigen::Matrix2d C;  // cross block <{R1, R2}>

  Eigen::Matrix4d full() const;
  static CovMatrix4 from_full(const Eigen::Matrix4d& m);
};

struct StandardForm {
  double n;
  double k_x;
  double k_p;
};

struct SimonResult {
  double invariant_I;
  bool separable;
};

/// 2x2 symplectic form J = [[0, 1], [-1, 0]].
Eigen::Matrix2d symplectic_J();
/// 4x4 form Omega = diag(J, J).
Eigen::Matrix4d symplectic_Omega();

CovMatrix4 build_cm(const PairParams& params);

/// Smallest eigenvalue of the Hermitian matrix gamma + i*hbar*Omega.
double min_uncertainty_eigenvalue(const CovMatrix4& cm, double hbar);

/// Symmetric blocks and gamma + i*hbar*Omega >= 0 up to `tolerance`.
bool is_physical(const CovMatrix4& cm, double hbar, double tolerance = 1e-12);

/// Simon invariant evaluated from arbitrary blocks. Zero counts as separable.
SimonResult simon_invariant_general(const CovMatrix4& cm, double hbar);

/// I = -4 hbar^4 a^4 / (b^4 f2), and exactly 0 for the product state.
double simon_invariant_closed(const PairParams& params);

/// Local scaling factor s of S = diag(s, 1/s, s, 1/s) that equalizes the
/// diagonal of each block.
double standard_form_scale(const PairParams& params);

/// Applies the congruence S gamma S^T with S = diag(s1, 1/s1, s2, 1/s2).
CovMatrix4 apply_local_scaling(const CovMatrix4& cm, double s1, double s2);

/// (n, k_x, k_p) in units of hbar-carrying entries. The congruence is checked
/// against the closed-form pattern; a mismatch above 1e-12 (relative) throws.
StandardForm standard_form(const PairParams& params);

/// Reads (n, k_x, k_p) off any congruent matrix already in standard form.
StandardForm read_standard_form(const CovMatrix4& cm);

/// Entanglement of formation in bits for a symmetric state in standard form.
/// Entries are divided by hbar before evaluation.
double eof(const StandardForm& sf, double hbar = 1.0);

/// The EoF auxiliary f(delta) = c+ log2 c+ - c- log2 c-.
double eof_of_delta(double delta);

/// nu = sqrt(det A) / hbar of the reduced one-mode state.
double reduced_symplectic_eigenvalue(const CovMatrix4& cm, double hbar);

/// Von Neumann entropy (bits) of a one-mode Gaussian state with symplectic
/// eigenvalue nu >= 1.
double entropy_from_nu(double nu);

}  // namespace locent::covariance
