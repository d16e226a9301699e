#include <gtest/gtest.h>

#include "besov/classes.hpp"
#include "besov/weights.hpp"
#include "oracles.hpp"

using namespace besov;

namespace {

SamplerConfig cfg(std::uint64_t samples, std::uint64_t seed = 1) { return {seed, samples, 0.0}; }

double gamma_ratio(double beta) { return std::tgamma(1.0 + beta) / std::pow(std::tgamma(1.0 + beta / 2.0), 2); }

}  // namespace

TEST(EvalWeight, PowerAndConstant) {
  const Point z{cplx(0.5, 0.0), cplx(0.0, 0.0)};
  EXPECT_DOUBLE_EQ(eval_weight(Weight::power(1.0), z), 0.5);
  EXPECT_DOUBLE_EQ(eval_weight(Weight::power(-0.5), z), std::pow(0.5, -0.5));
  EXPECT_EQ(eval_weight(Weight::constant(3.0), z), 3.0);
  EXPECT_THROW(Weight::constant(0.0), InputError);
}

TEST(EvalWeight, BoundaryIsDomainError) {
  EXPECT_THROW(eval_weight(Weight::power(0.5), Point::axis(2, 1.0)), DomainError);
  EXPECT_THROW(eval_weight(Weight::constant(), Point::axis(1, 1.0)), DomainError);
}

TEST(EvalWeight, PowerNearBoundaryUsesDefect) {
  // 1 - |z| is recovered from the defect without cancellation.
  const double h = 1e-13;
  const double defect = h * (2.0 - h);
  EXPECT_NEAR(Weight::power(1.0)(Point::axis(1, 1.0 - h), defect) / h, 1.0, 1e-9);
}

TEST(PhiWeight, ContinuousAndMonotone) {
  PhiSpec spec;
  spec.breaks = {0.0, 0.1, 0.5};
  spec.alphas = {0.5, 1.0, 2.0};
  const Weight w = Weight::phi(spec);
  for (double b : {0.1, 0.5}) EXPECT_NEAR(spec(std::nextafter(b, 0.0)), spec(b), 1e-12);
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    const double v = w(Point::axis(1, 1.0 - t));
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_NEAR(spec(0.05), std::sqrt(0.05), 1e-15);
}

TEST(PhiWeight, Validation) {
  PhiSpec bad;
  bad.breaks = {0.0, 0.3};
  bad.alphas = {0.5, -1.0};
  EXPECT_THROW(Weight::phi(bad), InputError);
  bad.alphas = {0.5};
  EXPECT_THROW(Weight::phi(bad), InputError);
  bad.breaks = {0.1};
  EXPECT_THROW(Weight::phi(bad), InputError);
  PhiSpec dec;
  dec.breaks = {0.0, 0.2};
  dec.alphas = {-0.5, 0.0};
  dec.increasing = false;
  EXPECT_NO_THROW(Weight::phi(dec));
}

TEST(InducedWeight, OriginConvention) {
  BoundaryWeight one;
  EXPECT_EQ(eval_weight(Weight::induced(one, 1.0), Point(2)), 1.0);
}

TEST(InducedWeight, ConstantBoundaryMatchesArcLength) {
  // n = 1: w̃(z) = σ{|1 - η| ≤ c d} / d with d = 1 - |z|^2.
  BoundaryWeight one;
  const Weight w = Weight::induced(one, 1.0, 8);
  for (double r : {0.3, 0.9, 0.999}) {
    const double d = 1.0 - r * r;
    EXPECT_NEAR(w(Point::axis(1, r)), 2.0 * std::asin(d / 2.0) / oracle::kPi / d, 1e-12);
  }
}

TEST(InducedWeight, PowerDistanceAtOrigin) {
  // ∫_T |1 - η|^β dσ = Γ(1+β) / Γ(1+β/2)^2.
  BoundaryWeight b;
  b.kind = BoundaryWeight::Kind::PowerDistance;
  b.center = {cplx(1.0, 0.0)};
  b.beta = 0.5;
  const double v = Weight::induced(b, 1.0, 200000)(Point(1));
  EXPECT_NEAR(v, gamma_ratio(0.5), 0.01);
}

TEST(InducedWeight, DeterministicAcrossCalls) {
  BoundaryWeight b;
  b.kind = BoundaryWeight::Kind::PowerDistance;
  b.center = {cplx(1.0, 0.0), cplx(0.0, 0.0)};
  b.beta = -0.5;
  const Weight w = Weight::induced(b, 2.0, 256, 9);
  const Point z{cplx(0.6, 0.1), cplx(-0.2, 0.3)};
  EXPECT_EQ(w(z), w(z));
  EXPECT_GT(w(z), 0.0);
}

TEST(LiftedWeight, ConstantAlongFibers) {
  const Weight base = Weight::power(0.5);
  const Weight wl = Weight::lifted(base);
  for (double th : {0.0, 1.0, 2.5, 4.0}) {
    const Point z{cplx(0.3, 0.4), cplx(0.1, -0.2)};
    const SpherePoint s = lift(z, th);
    EXPECT_NEAR(wl(s.point(), 0.0), base(z), 1e-12);
  }
  EXPECT_THROW(wl(Point::axis(1, 0.5)), InputError);
}

TEST(Composition, ProductAndPow) {
  const Weight a = Weight::power(0.5), b = Weight::power(1.5);
  const Point z = Point::axis(2, 0.7);
  EXPECT_NEAR(Weight::product(a, b)(z), std::pow(0.3, 2.0), 1e-14);
  EXPECT_NEAR(Weight::pow(a, -2.0)(z), 1.0 / 0.3, 1e-13);
  EXPECT_DOUBLE_EQ(Weight::product(a, b).radial_exponent_hint(), 2.0);
  EXPECT_DOUBLE_EQ(Weight::pow(a, -2.0).radial_exponent_hint(), -1.0);
}

TEST(Regularize, ConstantStaysConstant) {
  const Weight w = regularize(Weight::constant(1.0), 0.1, 256);
  for (double r : {0.0, 0.5, 0.99, 0.9999}) EXPECT_NEAR(w(Point::axis(2, r)), 1.0, 1e-12);
  EXPECT_THROW(regularize(Weight::constant(), 1.0), InputError);
  EXPECT_THROW(regularize(Weight::constant(), 0.0), InputError);
}

TEST(Regularize, EquivalentAcrossEpsilon) {
  for (double alpha : {-0.5, 0.5, 1.0}) {
    const Weight w = Weight::power(alpha);
    const Weight r1 = regularize(w, 0.1, 512), r2 = regularize(w, 0.2, 512);
    const Weight rr = regularize(r1, 0.1, 64);
    double worst = 1.0, worst_iter = 1.0;
    for (double r : {0.0, 0.5, 0.9, 0.99, 0.999, 0.9999}) {
      const Point z = Point::axis(1, r);
      const double q = r1(z) / r2(z);
      const double qi = rr(z) / r1(z);
      worst = std::max({worst, q, 1.0 / q});
      worst_iter = std::max({worst_iter, qi, 1.0 / qi});
      // The regularization is comparable to the weight itself.
      EXPECT_NEAR(std::log(r1(z) / w(z)), 0.0, std::log(2.0));
    }
    EXPECT_LE(worst, 8.0);
    EXPECT_LE(worst_iter, 8.0);
  }
}

TEST(ApBracket, ConstantWeightIsOne) {
  const Weight one = Weight::constant(2.0);
  for (double p : {1.5, 2.0, 4.0}) {
    const Region U = PseudoBall::make(Point::axis(2, 0.9), 0.05);
    EXPECT_NEAR(ap_bracket(one, U, p, cfg(2000)).value, 1.0, 0.01);
  }
  EXPECT_NEAR(ap_bracket(one, Tent::make(Point::axis(1, 1.0), 0.25), 2.0, cfg(2000)).value, 1.0, 0.01);
  EXPECT_THROW(ap_bracket(one, Tent::make(Point::axis(1, 1.0), 0.25), 1.0, cfg(10)), InputError);
}

TEST(ApBracket, Duality) {
  const double p = 3.0, pp = 1.5;
  const Weight w = Weight::power(0.7);
  const Weight dual = Weight::pow(w, -1.0 / (p - 1.0));
  const Region U = PseudoBall::make(Point::axis(2, 0.8), 0.3);
  const Estimate a = ap_bracket(w, U, p, cfg(100000, 3));
  const Estimate b = ap_bracket(dual, U, pp, cfg(100000, 4));
  const double rhs = std::pow(b.value, p - 1.0);
  const double rhs_err = (p - 1.0) * rhs * b.std_error / b.value;
  EXPECT_LE(std::abs(a.value - rhs), 3.0 * std::hypot(a.std_error, rhs_err));
}

TEST(ApBracket, PowerTentMatchesRadialOracle) {
  const Weight w = Weight::power(0.5);
  for (int k = 2; k <= 8; ++k) {
    const double R = std::ldexp(1.0, -k);
    auto avg = [&](double e) {
      return oracle::disk_tent_radial(R, [&](double h) { return std::pow(h, e); }) /
             oracle::disk_tent_radial(R, [](double) { return 1.0; });
    };
    const double truth = avg(0.5) * avg(-0.5);
    const Estimate b = ap_bracket(w, Tent::make(Point::axis(1, 1.0), R), 2.0, cfg(100000, k));
    EXPECT_NEAR(b.value / truth, 1.0, 0.1) << "R = " << R;
  }
}

TEST(ApBracket, JensenFloor) {
  CounterRng rng(21, 0, 0);
  const std::vector<Weight> ws{Weight::power(0.5), Weight::power(-0.5), Weight::power(1.5)};
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 1 + i % 2;
    const Point z = (std::sqrt(rng.uniform())) * sample_sphere(n, rng);
    const double R = std::ldexp(1.0, -1 - static_cast<int>(6 * rng.uniform()));
    for (const Weight& w : ws) {
      const Estimate b = ap_bracket(w, PseudoBall::make(z, R), 1.5 + rng.uniform(), cfg(5000, i));
      EXPECT_GE(b.value, 1.0 - 3.0 * b.std_error);
    }
  }
}

TEST(ApBracket, LiftedCapsMatchProjectedBalls) {
  // Caps about lift(z) project onto U(z, R); both brackets stay within a band.
  const Weight w = Weight::power(0.5);
  const Weight wl = Weight::lifted(w);
  double worst = 1.0;
  for (double r : {0.0, 0.5, 0.9, 1.0}) {
    for (double th : {0.0, 2.0}) {
      for (int k = 2; k <= 8; k += 2) {
        const double R = std::ldexp(1.0, -k);
        const Point z = Point::axis(1, r);
        const Point zeta = r < 1.0 ? lift(z, th).point() : Point{cplx(1.0, 0.0), cplx(0.0, 0.0)};
        const double cap = ap_bracket(wl, BoundaryCap::make(zeta, R), 2.0, cfg(20000, k)).value;
        const double ball = ap_bracket(w, PseudoBall::make(z, R), 2.0, cfg(20000, k)).value;
        worst = std::max({worst, cap / ball, ball / cap});
      }
    }
  }
  EXPECT_LE(worst, 16.0);
}

TEST(TentMass, SlopesFollowRadialExponent) {
  for (std::size_t n : {1u, 2u}) {
    for (double alpha : {-0.5, 0.0, 1.0}) {
      const Weight w = Weight::power(alpha);
      std::vector<double> xs, ys;
      for (int k = 4; k <= 10; ++k) {
        const double R = std::ldexp(1.0, -k);
        xs.push_back(std::log(R));
        ys.push_back(std::log(tent_mass(w, Tent::make(Point::axis(n, 1.0), R), cfg(40000, k)).value));
      }
      EXPECT_NEAR(fit_slope(xs, ys), n + 1.0 + alpha, 0.05) << "n = " << n << " alpha = " << alpha;
    }
  }
}

TEST(TentMass, MatchesDiskOracleAndIsMonotone) {
  const Weight w = Weight::power(1.0);
  Estimate prev;
  prev.value = 0.0;
  for (int k = 8; k >= 1; --k) {
    const double R = std::ldexp(1.0, -k);
    const Estimate m = tent_mass(w, Tent::make(Point::axis(1, 1.0), R), cfg(50000, k));
    const double truth = oracle::disk_tent(R, [](cplx z) { return 1.0 - std::abs(z); });
    EXPECT_NEAR(m.value / truth, 1.0, 0.1);
    EXPECT_LE(prev.value, m.value + 3.0 * m.std_error);
    prev = m;
  }
}
