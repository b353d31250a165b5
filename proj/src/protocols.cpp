#include "locent/protocols.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace locent::protocols {

namespace {

void require_product_above_one(double u, double b) {
  if (!(u > 0.0) || !(b > 0.0)) throw DomainError("u and b must be positive");
  if (!(u * b > 1.0)) throw DomainError("the entangled dispersion law requires u*b > 1");
}

void require_positive_u(double u) {
  if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("momentum dispersion u must be positive");
}

double u4(double u) { return u * u * u * u; }

// Probability mass of a standard normal inside [-z, z].
double two_sided_mass(double z) { return std::erf(std::abs(z) / std::numbers::sqrt2); }

// Numerical resolution used when a comparison has zero statistical error.
constexpr double kExactRelTol = 1e-9;

}  // namespace

HiddenScenario::HiddenScenario(PairParams params_, double t0_) : params(std::move(params_)), t0(t0_) {
  if (!(t0 >= 0.0)) throw DomainError("t0 must be >= 0");
  if (params.hbar() != 1.0 || params.mass() != 1.0) {
    throw DomainError("measurement protocols assume hbar = m = 1");
  }
}

std::mt19937_64 RngStreams::stream(std::initializer_list<std::uint64_t> path) const {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed_);
  for (std::uint64_t index : path) push(index);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

void DispersionSeries::validate() const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (i > 0 && !(e.t > entries[i - 1].t)) throw DomainError("series times must be strictly increasing");
    if (!(e.dx_hat > 0.0)) throw DomainError("series dispersions must be positive");
    if (e.std_error < 0.0) throw DomainError("series standard errors must be non-negative");
    if (e.std_error > 0.0 && e.n_samples < 2) throw DomainError("noisy entries need n_samples >= 2");
  }
}

bool DispersionSeries::noiseless() const {
  return std::any_of(entries.begin(), entries.end(), [](const auto& e) { return e.std_error == 0.0; });
}

bool FitOutcome::alpha_below_floor(double sigmas) const { return alpha < 1.0 - sigmas * sigma_alpha(); }

std::string to_string(Classification c) {
  switch (c) {
    case Classification::separable: return "separable";
    case Classification::entangled: return "entangled";
    case Classification::inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::vector<double> sample_momentum(const HiddenScenario& scenario, std::size_t n, std::mt19937_64& rng) {
  if (n < 2) throw DomainError("a sub-ensemble needs at least 2 samples");
  const GaussianDensity density = marginal_momentum(scenario.params);
  std::normal_distribution<double> dist(density.mean, density.sigma);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

std::vector<double> sample_position(const HiddenScenario& scenario, double t_meas, std::size_t n,
                                    std::mt19937_64& rng) {
  if (n < 2) throw DomainError("a sub-ensemble needs at least 2 samples");
  if (!(t_meas >= 0.0)) throw DomainError("measurement time must be >= 0");
  const GaussianDensity density = marginal_position(t_meas + scenario.t0, scenario.params);
  std::normal_distribution<double> dist(density.mean, density.sigma);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

DispersionEstimate estimate_dispersion(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw DomainError("dispersion estimate needs at least 2 samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  if (ss == 0.0) throw DegenerateSampleError("all samples are identical; dispersion is zero");
  const double dx = std::sqrt(ss / static_cast<double>(n - 1));
  return {dx, dx / std::sqrt(2.0 * static_cast<double>(n - 1))};
}

double predicted_dx_separable(double u, double t) {
  require_positive_u(u);
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");
  return std::sqrt(1.0 + 4.0 * u4(u) * t * t) / (2.0 * u);
}

double entanglement_kappa(double u, double b) {
  require_product_above_one(u, b);
  const double ub4 = u4(u * b);
  return ub4 / (ub4 - 1.0);
}

double entanglement_excess(double u, double b) {
  require_product_above_one(u, b);
  return 1.0 / (u4(u * b) - 1.0);
}

double predicted_dx_entangled(double u, double b, double t) {
  const double kappa = entanglement_kappa(u, b);
  if (!(t >= 0.0)) throw DomainError("t must be >= 0");
  return std::sqrt(kappa + 4.0 * u4(u) * t * t) / (2.0 * u);
}

double critical_time(double u, double b) {
  require_product_above_one(u, b);
  return b * b / (2.0 * std::sqrt(u4(u * b) - 1.0));
}

double mimic_aprime(double u) {
  require_positive_u(u);
  return 1.0 / u;
}

double ambiguity_time(double u, double b) {
  require_product_above_one(u, b);
  return 1.0 / (2.0 * u * u * std::sqrt(u4(u * b) - 1.0));
}

Crossing intersection_time(double u, double b, double offset) {
  const double kappa = entanglement_kappa(u, b);
  if (!(offset > 0.0)) throw DomainError("production offset must be positive");
  const double lab = (kappa + 4.0 * u4(u) * offset * offset - 1.0) / (8.0 * u4(u) * offset);
  return {lab, lab - offset};
}

double width_for_momentum(double u, double b) {
  require_product_above_one(u, b);
  return 1.0 / std::sqrt(u * u - 1.0 / (b * b));
}

std::vector<double> default_time_grid(double u, double b, std::size_t count) {
  if (count < 2) throw DomainError("time grid needs at least 2 points");
  const double tc = critical_time(u, b);
  std::vector<double> times(count);
  for (std::size_t i = 0; i < count; ++i) times[i] = tc * static_cast<double>(i) / static_cast<double>(count - 1);
  return times;
}

EntanglementWidth invert_alpha_to_b(double alpha, double u) {
  require_positive_u(u);
  if (!(alpha >= 1.0)) throw DomainError("alpha below 1 has no entanglement width");
  if (alpha == 1.0) return EntanglementWidth::infinite();
  return EntanglementWidth::finite(std::pow(alpha / (u4(u) * (alpha - 1.0)), 0.25));
}

EntanglementWidth invert_excess_to_b(double excess, double u) {
  require_positive_u(u);
  if (!(excess >= 0.0)) throw DomainError("alpha below 1 has no entanglement width");
  if (excess == 0.0) return EntanglementWidth::infinite();
  return EntanglementWidth::finite(std::pow(1.0 + 1.0 / excess, 0.25) / u);
}

Verdict protocol1(double measured_u, const DispersionPoint& measured, double tolerance_sigmas) {
  const double predicted = predicted_dx_separable(measured_u, measured.t);
  const double deviation = measured.dx_hat - predicted;
  const double band = tolerance_sigmas * measured.std_error + kExactRelTol * predicted;
  const bool exact = measured.std_error == 0.0;
  const double z = exact ? 0.0 : deviation / measured.std_error;

  if (std::abs(deviation) <= band) {
    return {Classification::separable, EntanglementWidth::infinite(), exact ? 1.0 : 1.0 - two_sided_mass(z)};
  }
  const double two_u_dx = 2.0 * measured_u * measured.dx_hat;
  const double alpha = two_u_dx * two_u_dx - 4.0 * u4(measured_u) * measured.t * measured.t;
  if (alpha <= 1.0) return {Classification::inconclusive, EntanglementWidth::infinite(), 0.0};
  return {Classification::entangled, invert_alpha_to_b(alpha, measured_u), exact ? 1.0 : two_sided_mass(z)};
}

namespace {

FitOutcome linear_fit(double u_hat, const DispersionSeries& series) {
  const auto& pts = series.entries;
  if (pts.size() < 3) throw IllConditionedError("fit needs at least 3 measurement times");

  const auto [tmin_it, tmax_it] =
      std::minmax_element(pts.begin(), pts.end(), [](const auto& l, const auto& r) { return l.t < r.t; });
  const double span = tmax_it->t - tmin_it->t;
  const double scale = std::max({1.0, std::abs(tmin_it->t), std::abs(tmax_it->t)});
  if (span <= 1e-9 * scale) throw IllConditionedError("measurement times are (nearly) identical");
  series.validate();

  const double q = 4.0 * u4(u_hat);
  const bool unit_weights = series.noiseless();
  const auto n = static_cast<Eigen::Index>(pts.size());

  // z_i = y_i - q t_i^2 = c0 + c1 t_i
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd z(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    const double y = std::pow(2.0 * u_hat * p.dx_hat, 2);
    X(i, 0) = 1.0;
    X(i, 1) = p.t;
    z(i) = y - q * p.t * p.t;
    const double sigma_y = 8.0 * u_hat * u_hat * p.dx_hat * p.std_error;
    w(i) = unit_weights ? 1.0 : 1.0 / (sigma_y * sigma_y);
  }

  const Eigen::Matrix2d normal = X.transpose() * w.asDiagonal() * X;
  const double cond_det = normal.determinant();
  if (!(std::abs(cond_det) > 1e-12 * normal.cwiseAbs().maxCoeff() * normal.cwiseAbs().maxCoeff())) {
    throw IllConditionedError("normal equations are singular");
  }
  const Eigen::Matrix2d normal_inv = normal.inverse();
  const Eigen::Vector2d c = normal_inv * (X.transpose() * w.asDiagonal() * z);

  Eigen::Matrix2d cov_c = normal_inv;
  if (unit_weights) {
    const Eigen::VectorXd r = z - X * c;
    const double dof = static_cast<double>(n - 2);
    cov_c *= dof > 0 ? r.squaredNorm() / dof : 0.0;
  }

  FitOutcome out;
  out.u_hat = u_hat;
  out.u_std_error = 0.0;
  out.beta = c(1) / (2.0 * q);
  out.alpha = c(0) - q * out.beta * out.beta;
  Eigen::Matrix2d jac;
  jac << 1.0, -out.beta, 0.0, 1.0 / (2.0 * q);
  out.param_cov = jac * cov_c * jac.transpose();

  double ss = 0.0;
  for (const auto& p : pts) {
    const double arg = out.alpha + q * (p.t + out.beta) * (p.t + out.beta);
    const double model = arg > 0.0 ? std::sqrt(arg) / (2.0 * u_hat) : 0.0;
    ss += (p.dx_hat - model) * (p.dx_hat - model);
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(pts.size()));
  return out;
}

}  // namespace

FitOutcome fit_alpha_beta(double u_hat, const DispersionSeries& series, double u_std_error) {
  require_positive_u(u_hat);
  if (!(u_std_error >= 0.0)) throw DomainError("u standard error must be non-negative");
  FitOutcome out = linear_fit(u_hat, series);
  out.u_std_error = u_std_error;
  if (u_std_error > 0.0) {
    // First-order propagation of the momentum estimate through the fixed t^2 coefficient.
    const double h = 1e-6 * u_hat;
    const FitOutcome up = linear_fit(u_hat + h, series);
    const FitOutcome down = linear_fit(u_hat - h, series);
    const Eigen::Vector2d grad((up.alpha - down.alpha) / (2.0 * h), (up.beta - down.beta) / (2.0 * h));
    out.param_cov += grad * grad.transpose() * (u_std_error * u_std_error);
  }
  return out;
}

FitOutcome refine_alpha_beta(double u_hat, const DispersionSeries& series, const FitOutcome& start) {
  require_positive_u(u_hat);
  series.validate();
  const auto& pts = series.entries;
  const double q = 4.0 * u4(u_hat);
  const bool unit_weights = series.noiseless();
  const auto n = static_cast<Eigen::Index>(pts.size());

  auto evaluate = [&](const Eigen::Vector2d& theta, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = pts[static_cast<std::size_t>(i)];
      const double shift = p.t + theta(1);
      const double arg = theta(0) + q * shift * shift;
      if (!(arg > 0.0)) return false;
      const double root = std::sqrt(arg);
      const double inv_sigma = unit_weights ? 1.0 : 1.0 / p.std_error;
      r(i) = (p.dx_hat - root / (2.0 * u_hat)) * inv_sigma;
      if (jac) {
        (*jac)(i, 0) = -inv_sigma / (4.0 * u_hat * root);
        (*jac)(i, 1) = -inv_sigma * q * shift / (2.0 * u_hat * root);
      }
    }
    return true;
  };

  Eigen::Vector2d theta(start.alpha, start.beta);
  Eigen::VectorXd r(n), r_trial(n);
  Eigen::MatrixXd jac(n, 2);
  if (!evaluate(theta, r, &jac)) throw IllConditionedError("starting point outside the model domain");
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d grad = jac.transpose() * r;
    Eigen::Matrix2d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
    const Eigen::Vector2d step = damped.ldlt().solve(-grad);
    const Eigen::Vector2d candidate = theta + step;

    double trial_cost = std::numeric_limits<double>::infinity();
    if (evaluate(candidate, r_trial, nullptr)) trial_cost = r_trial.squaredNorm();

    if (trial_cost <= cost) {
      theta = candidate;
      evaluate(theta, r, &jac);
      const double improvement = cost - trial_cost;
      cost = trial_cost;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (step.norm() <= 1e-14 * (1.0 + theta.norm()) || improvement <= 1e-30) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  FitOutcome out;
  out.u_hat = u_hat;
  out.u_std_error = 0.0;
  out.alpha = theta(0);
  out.beta = theta(1);
  const Eigen::Matrix2d jtj = jac.transpose() * jac;
  const double dof = static_cast<double>(n - 2);
  out.param_cov = jtj.inverse();
  if (unit_weights) out.param_cov *= dof > 0 ? cost / dof : 0.0;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    const double resid = unit_weights ? r(i) : r(i) * p.std_error;
    ss += resid * resid;
  }
  out.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return out;
}

Protocol2Result protocol2(double u_hat, const DispersionSeries& series, double threshold_sigmas,
                          double u_std_error) {
  const FitOutcome fit = fit_alpha_beta(u_hat, series, u_std_error);
  const double resolution = kExactRelTol * std::max(1.0, std::abs(fit.alpha));
  const double sigma = std::max(fit.sigma_alpha(), resolution);
  const double excess = fit.alpha - 1.0;
  const double z = excess / sigma;
  const bool exact = fit.sigma_alpha() <= resolution;

  Verdict verdict{Classification::inconclusive, EntanglementWidth::infinite(), 0.0};
  if (excess < -threshold_sigmas * sigma) {
    verdict = {Classification::inconclusive, EntanglementWidth::infinite(), 0.0};
  } else if (excess <= threshold_sigmas * sigma) {
    verdict = {Classification::separable, EntanglementWidth::infinite(), exact ? 1.0 : 1.0 - two_sided_mass(z)};
  } else {
    verdict = {Classification::entangled, invert_alpha_to_b(fit.alpha, u_hat), exact ? 1.0 : two_sided_mass(z)};
  }
  return {verdict, fit, fit.beta};
}

Campaign simulate_campaign(const HiddenScenario& scenario, std::span<const double> times, std::size_t n_samples,
                           const RngStreams& streams, std::uint64_t trial) {
  Campaign campaign;
  {
    auto rng = streams.stream({trial, 0});
    const auto momenta = sample_momentum(scenario, n_samples, rng);
    const DispersionEstimate u = estimate_dispersion(momenta);
    campaign.u_hat = u.dx_hat;
    campaign.u_std_error = u.std_error;
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto rng = streams.stream({trial, i + 1});
    const auto positions = sample_position(scenario, times[i], n_samples, rng);
    const DispersionEstimate est = estimate_dispersion(positions);
    campaign.series.entries.push_back({times[i], est.dx_hat, est.std_error, n_samples});
  }
  return campaign;
}

Campaign noiseless_campaign(const HiddenScenario& scenario, std::span<const double> times) {
  Campaign campaign;
  campaign.u_hat = dp1(scenario.params);
  campaign.u_std_error = 0.0;
  for (double t : times) {
    if (!(t >= 0.0)) throw DomainError("measurement time must be >= 0");
    campaign.series.entries.push_back({t, dx1(t + scenario.t0, scenario.params), 0.0, 0});
  }
  return campaign;
}

}  // namespace locent::protocols
