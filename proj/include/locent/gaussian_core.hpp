#pragma once

// Closed-form description of the two-particle Gaussian family: a product
// state (b infinite) or a state correlated through the x1*x2 cross term
// (finite b). Everything here is a pure function of an immutable PairParams.

#include <complex>
#include <stdexcept>
#include <string>

namespace locent {

/// Raised when an argument leaves the physical domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;
};

/// Entanglement width b. The separable state is the exact infinite value,
/// never a large sentinel.
class EntanglementWidth {
 public:
  static EntanglementWidth infinite() { return EntanglementWidth(); }
  static EntanglementWidth finite(double b);
  /// Accepts a positive number or "inf" / "infinity" (case-insensitive).
  static EntanglementWidth parse(const std::string& text);

  bool is_infinite() const { return infinite_; }
  /// Throws DomainError when infinite.
  double value() const;
  /// 1/b^2, exactly zero for the infinite width.
  double inverse_square() const { return infinite_ ? 0.0 : 1.0 / (value_ * value_); }
  std::string to_string() const;

  friend bool operator==(const EntanglementWidth&, const EntanglementWidth&) = default;

 private:
  EntanglementWidth() = default;
  bool infinite_ = true;
  double value_ = 0.0;
};

class PairParams {
 public:
  PairParams(double a, EntanglementWidth b, double k_c = 0.0, PhysicalConstants constants = {});

  double a() const { return a_; }
  const EntanglementWidth& b() const { return b_; }
  double k_c() const { return k_c_; }
  const PhysicalConstants& constants() const { return constants_; }
  double hbar() const { return constants_.hbar; }
  double mass() const { return constants_.mass; }

  bool is_separable() const { return b_.is_infinite(); }

  PairParams with_a(double a) const { return PairParams(a, b_, k_c_, constants_); }
  PairParams with_b(EntanglementWidth b) const { return PairParams(a_, b, k_c_, constants_); }
  PairParams with_k_c(double k_c) const { return PairParams(a_, b_, k_c, constants_); }

 private:
  double a_;
  EntanglementWidth b_;
  double k_c_;
  PhysicalConstants constants_;
};

/// Normal density N(mean, sigma^2).
struct GaussianDensity {
  double mean;
  double sigma;

  double operator()(double x) const;
};

/// f_n = 1 + n a^2 / b^2 for n in {1, 2}.
double factor_f(int n, const PairParams& params);

/// F(t) = 4 hbar^2 t^2 / (m^2 a^4), the free-spreading factor of a width-a packet.
double spreading_F(double t, const PairParams& params);

double drift_velocity(const PairParams& params);

/// Position dispersion of particle 1 at time t after production.
double dx1(double t, const PairParams& params);

/// Momentum dispersion of particle 1 (constant under free evolution).
double dp1(const PairParams& params);

/// Reduced position density of particle 1 at time t.
GaussianDensity marginal_position(double t, const PairParams& params);

/// Reduced momentum density of particle 1, in momentum units (mean hbar*k_c).
GaussianDensity marginal_momentum(const PairParams& params);

/// Normalized two-particle amplitude at production time.
std::complex<double> amplitude_t0(double x1, double x2, const PairParams& params);

}  // namespace locent
