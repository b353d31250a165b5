#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "locent/covariance.hpp"
#include "locent/oracle.hpp"

using namespace locent;
using namespace locent::covariance;

namespace {

const EntanglementWidth kInf = EntanglementWidth::infinite();
EntanglementWidth B(double b) { return EntanglementWidth::finite(b); }

const std::vector<double> kSweepA{0.5, 1.0, 2.0, 5.0};
const std::vector<double> kSweepB{0.5, 1.0, 2.0, 10.0, 100.0};

// Two-mode squeezed vacuum in the factor-2 convention with hbar = 1.
CovMatrix4 two_mode_squeezed(double r) {
  const double c = std::cosh(2.0 * r);
  const double s = std::sinh(2.0 * r);
  return {Eigen::Matrix2d::Identity() * c, Eigen::Matrix2d::Identity() * c, Eigen::Vector2d(s, -s).asDiagonal()};
}

// Local symplectic rotation by theta on one mode.
Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return r;
}

CovMatrix4 apply_local(const CovMatrix4& cm, const Eigen::Matrix2d& s1, const Eigen::Matrix2d& s2) {
  return {s1 * cm.A * s1.transpose(), s2 * cm.B * s2.transpose(), s1 * cm.C * s2.transpose()};
}

}  // namespace

TEST_CASE("build_cm blocks") {
  auto cm = build_cm(PairParams(1.0, B(2.0)));
  CHECK(cm.A(0, 0) == doctest::Approx(0.416667).epsilon(1e-6));
  CHECK(cm.A(1, 1) == doctest::Approx(2.5));
  CHECK(cm.C(0, 0) == doctest::Approx(0.083333).epsilon(1e-5));
  CHECK(cm.C(1, 1) == doctest::Approx(-0.5));
  CHECK(cm.A(0, 1) == 0.0);
  CHECK((cm.B - cm.A).norm() == 0.0);

  cm = build_cm(PairParams(1.0, kInf));
  CHECK(cm.C.norm() == 0.0);
  CHECK(cm.A(0, 0) == 0.5);
  CHECK(cm.A(1, 1) == 2.0);

  cm = build_cm(PairParams(2.0, B(2.0)));
  CHECK(cm.A(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(cm.A(1, 1) == doctest::Approx(1.0));
  CHECK(cm.C(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(cm.C(1, 1) == doctest::Approx(-0.5));
}

TEST_CASE("build_cm matches quadrature moments of the amplitude") {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{1.0, 2.0}, {2.0, 2.0}}) {
    const PairParams p(a, B(b));
    const auto grid = oracle::init_grid(p, 256, oracle::default_extent(p, 0.0));
    const auto numeric = oracle::numeric_cm(grid).full();
    CHECK((numeric - build_cm(p).full()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("physicality of the family and rejection of unphysical blocks") {
  for (double a : kSweepA) {
    for (double b : kSweepB) {
      for (double hbar : {1.0, 0.3}) {
        const PairParams p(a, B(b), 0.0, {hbar, 1.0});
        CHECK(is_physical(build_cm(p), hbar, 1e-10));
        // Pure state: the uncertainty bound is saturated.
        CHECK(std::abs(min_uncertainty_eigenvalue(build_cm(p), hbar)) < 1e-9 * build_cm(p).full().norm());
      }
    }
  }
  CovMatrix4 squeezed_too_far{Eigen::Matrix2d::Identity() * 0.5, Eigen::Matrix2d::Identity(),
                              Eigen::Matrix2d::Zero()};
  CHECK_FALSE(is_physical(squeezed_too_far, 1.0));
  CHECK(min_uncertainty_eigenvalue(squeezed_too_far, 1.0) < 0.0);
}

TEST_CASE("Simon invariant, general form") {
  const auto r = simon_invariant_general(build_cm(PairParams(1.0, B(2.0))), 1.0);
  CHECK(r.invariant_I == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));
  CHECK_FALSE(r.separable);

  const auto product = simon_invariant_general(build_cm(PairParams(1.0, kInf)), 1.0);
  CHECK(std::abs(product.invariant_I) < 1e-15);
  CHECK(product.separable);

  // Arbitrary blocks: I = 2 - 2 cosh(4 r) for the two-mode squeezed vacuum.
  for (double sq : {0.1, 0.5, 1.2}) {
    const auto tmsv = simon_invariant_general(two_mode_squeezed(sq), 1.0);
    CHECK(tmsv.invariant_I == doctest::Approx(2.0 - 2.0 * std::cosh(4.0 * sq)).epsilon(1e-12));
    CHECK_FALSE(tmsv.separable);
  }
  CHECK(simon_invariant_general(two_mode_squeezed(0.5), 1.0).invariant_I ==
        doctest::Approx(-5.524391).epsilon(1e-6));

  // Thermal product states are separable with I > 0.
  const CovMatrix4 thermal{Eigen::Matrix2d::Identity() * 3.0, Eigen::Matrix2d::Identity() * 2.0,
                           Eigen::Matrix2d::Zero()};
  const auto th = simon_invariant_general(thermal, 1.0);
  CHECK(th.invariant_I == doctest::Approx((9.0 - 1.0) * (4.0 - 1.0)));
  CHECK(th.separable);
}

TEST_CASE("Simon invariant, closed form") {
  CHECK(simon_invariant_closed(PairParams(1.0, B(2.0))) == doctest::Approx(-0.1666667).epsilon(1e-7));
  CHECK(simon_invariant_closed(PairParams(1.0, kInf)) == 0.0);
  CHECK(simon_invariant_closed(PairParams(2.0, B(2.0))) == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("criterion equivalence, negativity, and monotone approach to zero") {
  for (double hbar : {1.0, 0.7}) {
    for (double a : kSweepA) {
      double prev = -std::numeric_limits<double>::infinity();
      for (double b : kSweepB) {
        const PairParams p(a, B(b), 0.0, {hbar, 1.0});
        const double general = simon_invariant_general(build_cm(p), hbar).invariant_I;
        const double closed = simon_invariant_closed(p);
        CHECK(std::abs(general - closed) <= 1e-10 * std::abs(closed));
        CHECK(closed < 0.0);
        CHECK(closed > prev);
        prev = closed;
      }
    }
  }
}

TEST_CASE("verdict invariance under local symplectic maps (property)") {
  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> log_scale(-1.5, 1.5);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::uniform_real_distribution<double> width(0.3, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const PairParams p(width(rng), B(width(rng)));
    const CovMatrix4 cm = build_cm(p);
    const double reference = simon_invariant_general(cm, 1.0).invariant_I;

    const double s1 = std::exp(log_scale(rng));
    const double s2 = std::exp(log_scale(rng));
    const Eigen::Matrix2d m1 = rotation(angle(rng)) * Eigen::Vector2d(s1, 1.0 / s1).asDiagonal();
    const Eigen::Matrix2d m2 = rotation(angle(rng)) * Eigen::Vector2d(s2, 1.0 / s2).asDiagonal();
    const CovMatrix4 moved = apply_local(cm, m1, m2);
    const double moved_I = simon_invariant_general(moved, 1.0).invariant_I;
    CHECK(std::abs(moved_I - reference) <= 1e-10 * std::max(1.0, std::abs(reference)) * moved.full().norm());
    CHECK(moved_I < 0.0);

    // Undo a diagonal scaling, then reduce: the standard form is recovered.
    const CovMatrix4 scaled = apply_local_scaling(cm, s1, s2);
    const double s = standard_form_scale(p);
    const StandardForm recovered = read_standard_form(apply_local_scaling(scaled, s / s1, s / s2));
    const StandardForm direct = standard_form(p);
    CHECK(recovered.n == doctest::Approx(direct.n).epsilon(1e-10));
    CHECK(recovered.k_x == doctest::Approx(direct.k_x).epsilon(1e-10));
    CHECK(recovered.k_p == doctest::Approx(direct.k_p).epsilon(1e-10));
  }
}

TEST_CASE("standard form") {
  auto sf = standard_form(PairParams(1.0, B(2.0)));
  CHECK(sf.n == doctest::Approx(1.020621).epsilon(1e-6));
  CHECK(sf.k_x == doctest::Approx(0.204124).epsilon(1e-6));
  CHECK(sf.k_p == sf.k_x);
  CHECK(standard_form_scale(PairParams(1.0, B(2.0))) == doctest::Approx(1.565085).epsilon(1e-6));
  CHECK(standard_form_scale(PairParams(1.0, B(2.0))) == doctest::Approx(std::pow(6.0, 0.25)));

  sf = standard_form(PairParams(1.0, kInf));
  CHECK(sf.n == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sf.k_x == 0.0);
  CHECK(sf.k_p == 0.0);

  for (double a : kSweepA) {
    for (double b : kSweepB) {
      const StandardForm s = standard_form(PairParams(a, B(b)));
      CHECK(s.n > 0.0);
      CHECK(s.n - s.k_x > 0.0);
    }
  }
}

TEST_CASE("entanglement of formation") {
  CHECK(eof_of_delta(1.0) == 0.0);
  CHECK(eof(StandardForm{1.0, 0.0, 0.0}) == 0.0);

  const StandardForm sf = standard_form(PairParams(1.0, B(2.0)));
  CHECK(std::sqrt((sf.n - sf.k_x) * (sf.n - sf.k_p)) == doctest::Approx(0.816497).epsilon(1e-6));
  // 30-digit reference; rounding nu to 1.020621 first would give 0.0829980 instead.
  CHECK(eof(sf) == doctest::Approx(0.0829970620071387).epsilon(1e-12));

  // c+ - c- = 1 for every delta.
  for (double delta : {0.01, 0.3, 0.816497, 1.0, 2.5}) {
    const double r = std::sqrt(delta);
    const double plus = std::pow(1.0 / r + r, 2) / 4.0;
    const double minus = std::pow(1.0 / r - r, 2) / 4.0;
    CHECK(plus - minus == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eof_of_delta(delta) >= 0.0);
  }
  CHECK(eof_of_delta(0.5) > 0.0);

  CHECK_THROWS_AS(eof(StandardForm{1.0, 1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(eof(StandardForm{1.0, 0.0, 1.5}), DomainError);

  // hbar-carrying standard form gives the same EoF once divided by hbar.
  const PairParams scaled(1.0, B(2.0), 0.0, {2.5, 1.0});
  CHECK(eof(standard_form(scaled), 2.5) == doctest::Approx(eof(sf)).epsilon(1e-13));
}

TEST_CASE("reduced symplectic eigenvalue and entropy") {
  CHECK(reduced_symplectic_eigenvalue(build_cm(PairParams(1.0, kInf)), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(reduced_symplectic_eigenvalue(build_cm(PairParams(1.0, B(2.0))), 1.0) ==
        doctest::Approx(1.020621).epsilon(1e-6));
  CHECK(reduced_symplectic_eigenvalue(build_cm(PairParams(2.0, B(2.0))), 1.0) ==
        doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));

  CHECK(entropy_from_nu(1.0) == 0.0);
  CHECK(entropy_from_nu(1.020621) == doctest::Approx(0.0829979676724739).epsilon(1e-12));
  CHECK(entropy_from_nu(1.25 / std::sqrt(1.5)) == doctest::Approx(0.0829970620071387).epsilon(1e-12));
  CHECK(entropy_from_nu(3.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(entropy_from_nu(0.99), DomainError);
}

TEST_CASE("EoF equals reduced entropy for the pure family") {
  for (double a : kSweepA) {
    for (double b : kSweepB) {
      const PairParams p(a, B(b));
      const StandardForm sf = standard_form(p);
      const double nu = reduced_symplectic_eigenvalue(build_cm(p), 1.0);
      CHECK(std::abs(eof(sf) - entropy_from_nu(nu)) < 1e-9);
      const double delta = std::sqrt((sf.n - sf.k_x) * (sf.n - sf.k_p));
      CHECK(std::abs(delta + 1.0 / delta - 2.0 * nu) < 1e-12);
    }
  }
}

TEST_CASE("EoF orderings in a and b") {
  for (double a : {1.0, 2.0, 5.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double b : {0.2, 0.5, 1.0, 3.0, 10.0, 100.0}) {
      const double e = eof(standard_form(PairParams(a, B(b))));
      CHECK(e < prev);
      prev = e;
    }
  }
  for (double b : {0.5, 2.0, 10.0}) {
    double prev = -1.0;
    for (double a = 1.0; a <= 10.0; a += 1.0) {
      const double e = eof(standard_form(PairParams(a, B(b))));
      CHECK(e > prev);
      prev = e;
    }
  }
}
