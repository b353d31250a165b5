#pragma once

// Brute-force reference: the two-particle amplitude on an n x n grid,
// evolved exactly with the free spectral propagator, with every moment
// obtained by quadrature. Nothing here reuses the closed-form dispersion or
// covariance formulas; only the t = 0 amplitude is shared.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "locent/covariance.hpp"
#include "locent/gaussian_core.hpp"

namespace locent::oracle {

/// Grid too coarse or too small for the state it should hold.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probability reached the periodic boundary.
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kLeakageLimit = 1e-8;
inline constexpr double kRenormTolerance = 1e-4;

class WaveGrid {
 public:
  std::size_t n() const { return n_; }
  double extent() const { return extent_; }
  double spacing() const { return extent_ / static_cast<double>(n_); }
  double time() const { return time_; }
  const PairParams& params() const { return params_; }

  /// Row-major: index (i, j) holds Psi(x_i, x_j) with x_i = -L/2 + i * spacing.
  std::span<const std::complex<double>> amplitudes() const { return psi_; }
  std::complex<double> at(std::size_t i, std::size_t j) const { return psi_[i * n_ + j]; }

  double coordinate(std::size_t i) const;
  /// FFT-ordered angular wavenumber of bin i.
  double wavenumber(std::size_t i) const;

  double norm() const;
  /// Quadrature norm of the raw samples, before init_grid renormalized them.
  double sampling_norm() const { return sampling_norm_; }
  /// Probability in the outermost two cells along every edge.
  double boundary_leakage() const;
  /// Spectral probability in the two bins nearest the Nyquist frequency on each axis.
  double spectral_leakage() const;

 private:
  friend WaveGrid init_grid(const PairParams&, std::size_t, double);
  friend WaveGrid evolve_free(const WaveGrid&, double);
  friend std::vector<std::complex<double>> spectrum(const WaveGrid&);

  WaveGrid(PairParams params, std::size_t n, double extent)
      : params_(std::move(params)), n_(n), extent_(extent), psi_(n * n) {}

  PairParams params_;
  std::size_t n_;
  double extent_;
  double time_ = 0.0;
  double sampling_norm_ = 1.0;
  std::vector<std::complex<double>> psi_;
};

/// First and second moments in position and wavenumber. Cross (x, k) terms
/// are symmetrized covariances <{x_i, k_j}>/2 - <x_i><k_j>.
struct MomentSet {
  double norm;
  double mean_x1, mean_x2, mean_k1, mean_k2;
  double var_x1, var_x2, cov_x1x2;
  double var_k1, var_k2, cov_k1k2;
  double cov_x1k1, cov_x1k2, cov_x2k1, cov_x2k2;
};

/// A density sampled on a uniform grid of abscissae.
struct SampledDensity {
  std::vector<double> coords;
  std::vector<double> values;
  double step;

  double integral() const;
  double mean() const;
  double sigma() const;
  double excess_kurtosis() const;
};

/// Extent that holds the packet from t = 0 through t_max with margin:
/// max(16 dx1(0), 14 dx1(t_max) + 2 |v_c| t_max).
double default_extent(const PairParams& params, double t_max);

/// Samples the t = 0 amplitude and renormalizes by quadrature. Requires n a
/// power of two >= 64 and L >= 16 dx1(0).
WaveGrid init_grid(const PairParams& params, std::size_t n, double L);

/// Exact free evolution by an additional time t.
WaveGrid evolve_free(const WaveGrid& grid, double t);

/// Normalized discrete spectrum, FFT-ordered on both axes.
std::vector<std::complex<double>> spectrum(const WaveGrid& grid);

MomentSet moments(const WaveGrid& grid);

/// Correlation matrix by quadrature, in the factor-2 convention of build_cm.
covariance::CovMatrix4 numeric_cm(const WaveGrid& grid);

SampledDensity marginal_x1(const WaveGrid& grid);
/// Wavenumber marginal of particle 1, sorted by wavenumber.
SampledDensity marginal_k1(const WaveGrid& grid);

}  // namespace locent::oracle
