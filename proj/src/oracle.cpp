#include "locent/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace locent::oracle {

namespace {

using cplx = std::complex<double>;

enum class Direction { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

// Unnormalized in-place 2-D DFT.
void transform(std::vector<cplx>& data, std::size_t n, Direction dir) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, static_cast<int>(dir),
                                    FFTW_ESTIMATE);
  if (plan == nullptr) throw std::runtime_error("FFTW plan creation failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double sum_probability(std::span<const cplx> psi) {
  double total = 0.0;
  for (const cplx& z : psi) total += std::norm(z);
  return total;
}

void check_leakage(const WaveGrid& grid) {
  const double leak = grid.boundary_leakage();
  if (leak >= kLeakageLimit) {
    throw LeakageError("probability " + std::to_string(leak) + " reached the grid boundary at t=" +
                       std::to_string(grid.time()) + "; increase the extent L");
  }
}

// Edge mass of a row-major n x n probability array.
double edge_mass(std::span<const double> prob, std::size_t n, std::size_t width) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool edge_i = i < width || i >= n - width;
      const bool edge_j = j < width || j >= n - width;
      if (edge_i || edge_j) total += prob[i * n + j];
    }
  }
  return total;
}

}  // namespace

double WaveGrid::coordinate(std::size_t i) const {
  return -0.5 * extent_ + static_cast<double>(i) * spacing();
}

double WaveGrid::wavenumber(std::size_t i) const {
  const auto signed_index = static_cast<double>(i < n_ / 2 ? static_cast<long>(i)
                                                           : static_cast<long>(i) - static_cast<long>(n_));
  return 2.0 * std::numbers::pi * signed_index / extent_;
}

double WaveGrid::norm() const { return sum_probability(psi_) * spacing() * spacing(); }

double WaveGrid::boundary_leakage() const {
  std::vector<double> prob(psi_.size());
  const double cell = spacing() * spacing();
  std::transform(psi_.begin(), psi_.end(), prob.begin(), [cell](const cplx& z) { return std::norm(z) * cell; });
  return edge_mass(prob, n_, 2);
}

double WaveGrid::spectral_leakage() const {
  const auto phi = spectrum(*this);
  std::vector<double> prob(phi.size());
  std::transform(phi.begin(), phi.end(), prob.begin(), [](const cplx& z) { return std::norm(z); });
  // Nyquist sits at index n/2 in FFT ordering; shift so it lands on the edge.
  std::vector<double> shifted(prob.size());
  const std::size_t half = n_ / 2;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      shifted[((i + half) % n_) * n_ + (j + half) % n_] = prob[i * n_ + j];
    }
  }
  return edge_mass(shifted, n_, 2);
}

double SampledDensity::integral() const {
  double total = 0.0;
  for (double v : values) total += v;
  return total * step;
}

double SampledDensity::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) m += coords[i] * values[i];
  return m * step / integral();
}

double SampledDensity::sigma() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) v += (coords[i] - mu) * (coords[i] - mu) * values[i];
  return std::sqrt(v * step / integral());
}

double SampledDensity::excess_kurtosis() const {
  const double mu = mean();
  double m2 = 0.0;
  double m4 = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double d2 = (coords[i] - mu) * (coords[i] - mu);
    m2 += d2 * values[i];
    m4 += d2 * d2 * values[i];
  }
  const double z = integral() / step;
  m2 /= z;
  m4 /= z;
  return m4 / (m2 * m2) - 3.0;
}

double default_extent(const PairParams& params, double t_max) {
  return std::max(16.0 * dx1(0.0, params),
                  14.0 * dx1(t_max, params) + 2.0 * std::abs(drift_velocity(params)) * t_max);
}

WaveGrid init_grid(const PairParams& params, std::size_t n, double L) {
  if (!is_power_of_two(n) || n < 64) throw ResolutionError("grid size must be a power of two >= 64");
  const double min_extent = 16.0 * dx1(0.0, params);
  if (!(L >= min_extent)) {
    throw ResolutionError("extent L=" + std::to_string(L) + " is below 16*dx1(0)=" + std::to_string(min_extent));
  }

  WaveGrid grid(params, n, L);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = grid.coordinate(i);
    for (std::size_t j = 0; j < n; ++j) grid.psi_[i * n + j] = amplitude_t0(x1, grid.coordinate(j), params);
  }
  const double sampled = grid.norm();
  grid.sampling_norm_ = sampled;
  const double factor = 1.0 / std::sqrt(sampled);
  if (std::abs(factor - 1.0) > kRenormTolerance) {
    throw ResolutionError("sampled norm " + std::to_string(sampled) + " deviates from 1; grid under-resolved");
  }
  for (cplx& z : grid.psi_) z *= factor;

  check_leakage(grid);
  if (grid.spectral_leakage() >= kLeakageLimit) {
    throw ResolutionError("spectrum reaches the Nyquist band; increase n or reduce L");
  }
  return grid;
}

WaveGrid evolve_free(const WaveGrid& grid, double t) {
  if (!(t >= 0.0)) throw DomainError("evolution time must be >= 0");
  WaveGrid out = grid;
  out.time_ = grid.time_ + t;
  if (t == 0.0) return out;

  const std::size_t n = grid.n_;
  const double omega_scale = grid.params_.hbar() / (2.0 * grid.params_.mass());
  transform(out.psi_, n, Direction::forward);
  const double inv_total = 1.0 / static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k1 = grid.wavenumber(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double k2 = grid.wavenumber(j);
      const double phase = -omega_scale * (k1 * k1 + k2 * k2) * t;
      out.psi_[i * n + j] *= std::polar(inv_total, phase);
    }
  }
  transform(out.psi_, n, Direction::backward);

  if (std::abs(out.norm() - grid.norm()) > 1e-6) throw std::logic_error("free evolution lost unitarity");
  check_leakage(out);
  return out;
}

std::vector<cplx> spectrum(const WaveGrid& grid) {
  std::vector<cplx> phi(grid.psi_);
  transform(phi, grid.n_, Direction::forward);
  const double total = sum_probability(phi);
  const double scale = 1.0 / std::sqrt(total);
  for (cplx& z : phi) z *= scale;
  return phi;
}

MomentSet moments(const WaveGrid& grid) {
  const std::size_t n = grid.n();
  const auto psi = grid.amplitudes();
  const double cell = grid.spacing() * grid.spacing();

  MomentSet m{};
  m.norm = grid.norm();

  // Position moments by midpoint quadrature.
  double sx1 = 0, sx2 = 0, sx1x1 = 0, sx2x2 = 0, sx1x2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = grid.coordinate(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double x2 = grid.coordinate(j);
      const double p = std::norm(psi[i * n + j]) * cell;
      sx1 += p * x1;
      sx2 += p * x2;
      sx1x1 += p * x1 * x1;
      sx2x2 += p * x2 * x2;
      sx1x2 += p * x1 * x2;
    }
  }
  sx1 /= m.norm;
  sx2 /= m.norm;
  m.mean_x1 = sx1;
  m.mean_x2 = sx2;
  m.var_x1 = sx1x1 / m.norm - sx1 * sx1;
  m.var_x2 = sx2x2 / m.norm - sx2 * sx2;
  m.cov_x1x2 = sx1x2 / m.norm - sx1 * sx2;

  // Wavenumber moments in spectral space.
  const auto phi = spectrum(grid);
  double sk1 = 0, sk2 = 0, sk1k1 = 0, sk2k2 = 0, sk1k2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k1 = grid.wavenumber(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double k2 = grid.wavenumber(j);
      const double p = std::norm(phi[i * n + j]);
      sk1 += p * k1;
      sk2 += p * k2;
      sk1k1 += p * k1 * k1;
      sk2k2 += p * k2 * k2;
      sk1k2 += p * k1 * k2;
    }
  }
  m.mean_k1 = sk1;
  m.mean_k2 = sk2;
  m.var_k1 = sk1k1 - sk1 * sk1;
  m.var_k2 = sk2k2 - sk2 * sk2;
  m.cov_k1k2 = sk1k2 - sk1 * sk2;

  // k_j Psi back in position space; Re <Psi| x_i k_j |Psi> is the symmetrized moment.
  std::vector<cplx> k1psi(phi.size()), k2psi(phi.size());
  const double unscale = std::sqrt(static_cast<double>(n * n) / cell) * std::sqrt(m.norm);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const cplx value = phi[i * n + j] * unscale / static_cast<double>(n * n);
      k1psi[i * n + j] = grid.wavenumber(i) * value;
      k2psi[i * n + j] = grid.wavenumber(j) * value;
    }
  }
  transform(k1psi, n, Direction::backward);
  transform(k2psi, n, Direction::backward);

  double x1k1 = 0, x1k2 = 0, x2k1 = 0, x2k2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = grid.coordinate(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double x2 = grid.coordinate(j);
      const cplx c = std::conj(psi[i * n + j]) * cell;
      const double r1 = (c * k1psi[i * n + j]).real();
      const double r2 = (c * k2psi[i * n + j]).real();
      x1k1 += x1 * r1;
      x1k2 += x1 * r2;
      x2k1 += x2 * r1;
      x2k2 += x2 * r2;
    }
  }
  m.cov_x1k1 = x1k1 / m.norm - m.mean_x1 * m.mean_k1;
  m.cov_x1k2 = x1k2 / m.norm - m.mean_x1 * m.mean_k2;
  m.cov_x2k1 = x2k1 / m.norm - m.mean_x2 * m.mean_k1;
  m.cov_x2k2 = x2k2 / m.norm - m.mean_x2 * m.mean_k2;
  return m;
}

covariance::CovMatrix4 numeric_cm(const WaveGrid& grid) {
  const MomentSet m = moments(grid);
  const double h = grid.params().hbar();
  covariance::CovMatrix4 cm;
  cm.A << 2.0 * m.var_x1, 2.0 * h * m.cov_x1k1, 2.0 * h * m.cov_x1k1, 2.0 * h * h * m.var_k1;
  cm.B << 2.0 * m.var_x2, 2.0 * h * m.cov_x2k2, 2.0 * h * m.cov_x2k2, 2.0 * h * h * m.var_k2;
  cm.C << 2.0 * m.cov_x1x2, 2.0 * h * m.cov_x1k2, 2.0 * h * m.cov_x2k1, 2.0 * h * h * m.cov_k1k2;
  return cm;
}

SampledDensity marginal_x1(const WaveGrid& grid) {
  const std::size_t n = grid.n();
  const auto psi = grid.amplitudes();
  SampledDensity d{std::vector<double>(n), std::vector<double>(n, 0.0), grid.spacing()};
  for (std::size_t i = 0; i < n; ++i) {
    d.coords[i] = grid.coordinate(i);
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::norm(psi[i * n + j]);
    d.values[i] = row * grid.spacing();
  }
  return d;
}

SampledDensity marginal_k1(const WaveGrid& grid) {
  const std::size_t n = grid.n();
  const auto phi = spectrum(grid);
  const double dk = 2.0 * std::numbers::pi / grid.extent();
  SampledDensity d{std::vector<double>(n), std::vector<double>(n, 0.0), dk};
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t sorted = (i + half) % n;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::norm(phi[i * n + j]);
    d.coords[sorted] = grid.wavenumber(i);
    d.values[sorted] = row / dk;
  }
  return d;
}

}  // namespace locent::oracle
