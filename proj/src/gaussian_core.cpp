#include "locent/gaussian_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace locent {

EntanglementWidth EntanglementWidth::finite(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw DomainError("entanglement width b must be positive and finite (use infinite() for the product state)");
  }
  EntanglementWidth w;
  w.infinite_ = false;
  w.value_ = b;
  return w;
}

EntanglementWidth EntanglementWidth::parse(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "inf" || lower == "infinity" || lower == "+inf") return infinite();
  std::size_t used = 0;
  double b = 0.0;
  try {
    b = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError("cannot parse entanglement width '" + text + "'");
  }
  if (used != text.size()) throw DomainError("cannot parse entanglement width '" + text + "'");
  if (std::isinf(b) && b > 0) return infinite();
  return finite(b);
}

double EntanglementWidth::value() const {
  if (infinite_) throw DomainError("entanglement width is infinite");
  return value_;
}

std::string EntanglementWidth::to_string() const {
  if (infinite_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

PairParams::PairParams(double a, EntanglementWidth b, double k_c, PhysicalConstants constants)
    : a_(a), b_(b), k_c_(k_c), constants_(constants) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("width a must be positive and finite");
  if (!(constants.hbar > 0.0)) throw DomainError("hbar must be positive");
  if (!(constants.mass > 0.0)) throw DomainError("mass must be positive");
  if (!std::isfinite(k_c)) throw DomainError("k_c must be finite");
}

double GaussianDensity::operator()(double x) const {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double factor_f(int n, const PairParams& params) {
  if (n != 1 && n != 2) throw DomainError("factor_f is defined for n = 1 or 2");
  return 1.0 + n * params.a() * params.a() * params.b().inverse_square();
}

double spreading_F(double t, const PairParams& params) {
  const double a2 = params.a() * params.a();
  const double ratio = params.hbar() * t / (params.mass() * a2);
  return 4.0 * ratio * ratio;
}

double drift_velocity(const PairParams& params) {
  return params.hbar() * params.k_c() / params.mass();
}

double dx1(double t, const PairParams& params) {
  if (t < 0.0) throw DomainError("dx1 requires t >= 0");
  const double F = spreading_F(t, params);
  if (params.is_separable()) return 0.5 * params.a() * std::sqrt(1.0 + F);
  const double f1 = factor_f(1, params);
  const double f2 = factor_f(2, params);
  return 0.5 * params.a() * std::sqrt(f1 / f2 * (1.0 + f2 * F));
}

double dp1(const PairParams& params) {
  const double base = params.hbar() / params.a();
  if (params.is_separable()) return base;
  return base * std::sqrt(factor_f(1, params));
}

GaussianDensity marginal_position(double t, const PairParams& params) {
  return {drift_velocity(params) * t, dx1(t, params)};
}

GaussianDensity marginal_momentum(const PairParams& params) {
  return {params.hbar() * params.k_c(), dp1(params)};
}

std::complex<double> amplitude_t0(double x1, double x2, const PairParams& params) {
  const double a2 = params.a() * params.a();
  const double f1 = factor_f(1, params);
  const double f2 = factor_f(2, params);
  const double norm = std::sqrt(2.0 / (std::numbers::pi * a2)) * std::pow(f2, 0.25);
  const double envelope =
      std::exp(-(f1 / a2) * (x1 * x1 + x2 * x2) + 2.0 * params.b().inverse_square() * x1 * x2);
  return norm * envelope * std::polar(1.0, params.k_c() * (x1 - x2));
}

}  // namespace locent
