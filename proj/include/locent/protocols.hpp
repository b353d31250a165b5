#pragma once

// Local measurement campaigns on particle 1 and the two classification
// protocols built on them. Units: hbar = m = 1 throughout this header; the
// momentum dispersion u doubles as the inverse packet width.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "locent/gaussian_core.hpp"

namespace locent::protocols {

/// Every sample in a sub-ensemble was identical.
class DegenerateSampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The (alpha, beta) least-squares system cannot be solved reliably.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Alice's true state plus the production-to-first-measurement offset t0.
struct HiddenScenario {
  HiddenScenario(PairParams params, double t0);

  PairParams params;
  double t0;
};

/// Deterministic substreams keyed by a path of indices under one root seed,
/// so results never depend on the order in which sub-ensembles are drawn.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t seed() const { return seed_; }
  std::mt19937_64 stream(std::initializer_list<std::uint64_t> path) const;

 private:
  std::uint64_t seed_;
};

struct DispersionEstimate {
  double dx_hat;
  double std_error;
};

/// One measured dispersion. std_error == 0 marks an exact (noiseless) value.
struct DispersionPoint {
  double t;
  double dx_hat;
  double std_error;
  std::size_t n_samples;
};

struct DispersionSeries {
  std::vector<DispersionPoint> entries;

  /// Strictly increasing times, positive dispersions, and n_samples >= 2 for
  /// every noisy entry. Throws DomainError otherwise.
  void validate() const;
  bool noiseless() const;
};

struct FitOutcome {
  double u_hat;
  double u_std_error;  // folded into param_cov to first order
  double alpha;
  double beta;
  Eigen::Matrix2d param_cov;  // (alpha, beta)
  double residual_rms;

  double sigma_alpha() const { return std::sqrt(std::max(param_cov(0, 0), 0.0)); }
  double sigma_beta() const { return std::sqrt(std::max(param_cov(1, 1), 0.0)); }
  /// alpha below 1 by more than `sigmas` standard errors: fit noise, not physics.
  bool alpha_below_floor(double sigmas = 3.0) const;
};

enum class Classification { separable, entangled, inconclusive };
std::string to_string(Classification c);

struct Verdict {
  Classification classification;
  EntanglementWidth b_hat;  // finite iff entangled
  double confidence;        // in [0, 1]
};

// -- sampling ---------------------------------------------------------------

std::vector<double> sample_momentum(const HiddenScenario& scenario, std::size_t n, std::mt19937_64& rng);

/// Draws positions at lab time t_meas, i.e. t_meas + t0 after production.
std::vector<double> sample_position(const HiddenScenario& scenario, double t_meas, std::size_t n,
                                    std::mt19937_64& rng);

/// Unbiased sample standard deviation and its Gaussian-theory standard error.
DispersionEstimate estimate_dispersion(std::span<const double> samples);

// -- closed-form dispersion laws ----------------------------------------------

double predicted_dx_separable(double u, double t);

/// kappa = u^4 b^4 / (u^4 b^4 - 1), the constant term of the entangled law.
double entanglement_kappa(double u, double b);

/// kappa - 1 = 1 / (u^4 b^4 - 1), without the cancellation of forming kappa first.
double entanglement_excess(double u, double b);

double predicted_dx_entangled(double u, double b, double t);

/// Time scale past which both laws are dominated by the common t^2 term.
double critical_time(double u, double b);

/// Width of the product state whose momentum marginal matches u.
double mimic_aprime(double u);

/// Unique production-clock time at which the mimicking product state
/// reproduces the entangled state's t = 0 marginals.
double ambiguity_time(double u, double b);

struct Crossing {
  double lab_clock;        // measured from the product state's production
  double entangled_clock;  // measured from the entangled state's production
};

/// Crossing of the product-state curve with an entangled curve produced
/// `offset` later.
Crossing intersection_time(double u, double b, double offset);

/// Pair width a whose entangled momentum dispersion equals u for width b.
double width_for_momentum(double u, double b);

/// Uniform grid of `count` times on [0, critical_time(u, b)].
std::vector<double> default_time_grid(double u, double b, std::size_t count);

// -- protocols ----------------------------------------------------------------

/// b from alpha = u^4 b^4 / (u^4 b^4 - 1); alpha == 1 gives the infinite width.
/// Resolution is limited by alpha - 1 in double precision: for u*b beyond a
/// few tens prefer invert_excess_to_b.
EntanglementWidth invert_alpha_to_b(double alpha, double u);

/// Same inversion parametrized by alpha - 1 >= 0.
EntanglementWidth invert_excess_to_b(double excess, double u);

/// Single-measurement test with a known production time.
Verdict protocol1(double measured_u, const DispersionPoint& measured, double tolerance_sigmas = 3.0);

/// Weighted linear fit of y = (2 u dx)^2 = alpha + 4 u^4 (t + beta)^2 in the
/// variance domain. Exact (std_error == 0) series are fit with unit weights.
/// A nonzero u_std_error adds the first-order effect of the momentum estimate
/// to param_cov; u_hat itself stays fixed in the t^2 coefficient.
FitOutcome fit_alpha_beta(double u_hat, const DispersionSeries& series, double u_std_error = 0.0);

/// Levenberg-Marquardt on the dispersion curve itself, started from `start`.
FitOutcome refine_alpha_beta(double u_hat, const DispersionSeries& series, const FitOutcome& start);

struct Protocol2Result {
  Verdict verdict;
  FitOutcome fit;
  double t0_hat;  // = beta
};

/// Origin-blind test: z-test on alpha - 1 at `threshold_sigmas`.
Protocol2Result protocol2(double u_hat, const DispersionSeries& series, double threshold_sigmas = 3.0,
                          double u_std_error = 0.0);

// -- simulated campaigns --------------------------------------------------------

struct Campaign {
  double u_hat;
  double u_std_error;
  DispersionSeries series;
};

/// Momentum sub-ensemble on stream {trial, 0}, position sub-ensemble i on
/// stream {trial, i + 1}.
Campaign simulate_campaign(const HiddenScenario& scenario, std::span<const double> times, std::size_t n_samples,
                           const RngStreams& streams, std::uint64_t trial = 0);

/// Exact dispersions with zero standard error.
Campaign noiseless_campaign(const HiddenScenario& scenario, std::span<const double> times);

}  // namespace locent::protocols
