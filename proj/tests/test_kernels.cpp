#include <gtest/gtest.h>

#include "besov/classes.hpp"
#include "besov/kernels.hpp"
#include "oracles.hpp"

using namespace besov;

namespace {

SamplerConfig cfg(std::uint64_t samples, std::uint64_t seed = 1, double gamma = 0.0) { return {seed, samples, gamma}; }

Point random_point(std::size_t n, CounterRng& rng, double max_r) {
  return (max_r * std::pow(rng.uniform(), 1.0 / (2.0 * n))) * sample_sphere(n, rng);
}

template <class E>
void expect_within(const E& e, cplx truth, double k = 3.0) {
  EXPECT_LE(std::abs(cplx(e.value) - truth), k * e.std_error + 1e-12)
      << cplx(e.value) << " +- " << e.std_error << " vs " << truth;
}

}  // namespace

TEST(HoloPolynomial, HornerMatchesDirectSum) {
  HoloPolynomial f(3);
  CounterRng rng(1, 0, 0);
  for (int i = 0; i < 12; ++i) {
    MultiIndex m{static_cast<int>(rng.uniform() * 4), static_cast<int>(rng.uniform() * 4),
                 static_cast<int>(rng.uniform() * 4)};
    f.add_term(m, cplx(rng.uniform() - 0.5, rng.uniform() - 0.5));
  }
  for (int i = 0; i < 100; ++i) {
    const Point z = random_point(3, rng, 1.0);
    EXPECT_LT(std::abs(f(z) - f.horner(z)), 1e-12);
  }
  EXPECT_THROW(f.add_term({1, 2}, 1.0), InputError);
  EXPECT_THROW(f.add_term({1, -1, 0}, 1.0), InputError);
}

TEST(RadialPower, Examples) {
  const HoloPolynomial f = HoloPolynomial::monomial(2, {1, 1}, 2.0) + HoloPolynomial::monomial(2, {0, 0}, 1.0);
  EXPECT_EQ(radial_power(f, 0), f);
  EXPECT_EQ(radial_power(f, 2).terms().at({1, 1}), cplx(18.0));
  EXPECT_EQ(radial_power(f, 2).terms().at({0, 0}), cplx(1.0));
  EXPECT_EQ(radial_power(radial_power(f, 3), -3), f);
}

TEST(KernelExpansion, MatchesFiniteDifferences) {
  // (I+R)g(z) = g(z) + d/dt g(tz) at t = 1.
  const Point pole{cplx(0.4, 0.2), cplx(-0.1, 0.3)};
  const Point z{cplx(0.3, -0.2), cplx(0.5, 0.1)};
  const TestFunction f = KernelFn::make(pole, 2.5, 0.5);
  auto g0 = radial_derivative(f, 0);
  auto ir = [](const std::function<cplx(const Point&)>& g, double h) {
    return [g, h](const Point& x) {
      return g(x) + (g((1.0 + h) * x) - g((1.0 - h) * x)) / (2.0 * h);
    };
  };
  const auto g1 = ir(g0, 1e-5);
  const auto g2 = ir(ir(g0, 1e-3), 1e-3);
  EXPECT_LT(std::abs(radial_derivative(f, 1)(z) - g1(z)), 1e-7 * std::abs(g1(z)));
  EXPECT_LT(std::abs(radial_derivative(f, 2)(z) - g2(z)), 1e-4 * std::abs(g2(z)));
}

TEST(KernelExpansion, PolynomialKernelIsExact) {
  // b = 1 at pole y: (1 - z ȳ)^{-1} = Σ (z ȳ)^j, so (I+R) multiplies term j by j + 1.
  const Point y = Point::axis(1, 0.5);
  const Point z = Point::axis(1, 0.6);
  cplx direct = 0.0;
  for (int j = 0; j < 200; ++j) direct += (j + 1.0) * std::pow(0.3, j);
  EXPECT_NEAR(std::abs(radial_derivative(KernelFn::make(y, 1.0), 1)(z) - direct), 0.0, 1e-12);
}

TEST(KernelFn, Validation) {
  EXPECT_THROW(KernelFn::make(Point::axis(1, 1.0), 2.0), DomainError);
  EXPECT_THROW(KernelFn::make(Point(1), 0.0), InputError);
  EXPECT_THROW(KernelFn::make(Point(1), 1.0, -1.0), InputError);
}

TEST(InvRadial, Examples) {
  const Point z = Point::axis(1, 0.7);
  for (int k = 0; k <= 8; ++k) {
    const HoloPolynomial p = HoloPolynomial::monomial(1, {k});
    EXPECT_LT(std::abs(inv_radial([&](const Point& x) { return p(x); }, 1.0, z) - p(z) / (k + 1.0)), 1e-8);
  }
  for (double m : {0.5, 1.0, 2.5})
    EXPECT_LT(std::abs(inv_radial([](const Point&) { return cplx(3.0, -1.0); }, m, z) - cplx(3.0, -1.0)), 1e-8);
  EXPECT_THROW(inv_radial([](const Point&) { return cplx(1.0); }, 0.0, z), DomainError);
}

TEST(InvRadial, InvertsRadialPowerOnMonomials) {
  CounterRng rng(4, 0, 0);
  for (std::size_t n : {1u, 2u}) {
    for (int deg = 0; deg <= 8; ++deg) {
      MultiIndex mi(n, 0);
      mi[0] = deg - deg / 2 * (n == 2);
      if (n == 2) mi[1] = deg / 2;
      const HoloPolynomial p = HoloPolynomial::monomial(n, mi, cplx(0.3, 0.7));
      const Point z = random_point(n, rng, 0.95);
      for (int m : {1, 2, 3}) {
        const HoloPolynomial q = radial_power(p, m);
        const cplx back = inv_radial([&](const Point& x) { return q(x); }, m, z);
        EXPECT_LT(std::abs(back - p(z)), 1e-8) << "deg " << deg << " m " << m;
      }
    }
  }
}

TEST(BallPotential, ConstantAtOrigin) {
  for (auto mode : {PotentialMode::Modulus, PotentialMode::Holomorphic}) {
    const ComplexEstimate e = ball_potential(ConstantFn{}, 0.5, Point(2), mode, cfg(1000));
    EXPECT_NEAR(std::abs(e.value - cplx(1.0)), 0.0, 1e-12);
  }
  EXPECT_THROW(ball_potential(ConstantFn{}, 0.0, Point(1), PotentialMode::Modulus, cfg(10)), InputError);
  const ComplexEstimate big = ball_potential(ConstantFn{}, 2.5, Point(1), PotentialMode::Modulus, cfg(10));
  EXPECT_FALSE(big.flags.empty());
}

TEST(BallPotential, ModulusMatchesSeriesOracle) {
  // n = 1, t = 0.5: ∫ |1 - r ȳ|^{-1.5} dv = Σ ((0.75)_k / k!)^2 r^{2k} / (k + 1).
  std::vector<double> xs, ys, ys_oracle;
  for (double r : {0.9, 0.99, 0.999}) {
    const double truth = oracle::disk_modulus_potential(r, 0.75);
    const ComplexEstimate e =
        ball_potential(ConstantFn{}, 0.5, Point::axis(1, r), PotentialMode::Modulus, cfg(400000, 3));
    EXPECT_NEAR(e.value.real() / truth, 1.0, 0.03) << "r = " << r;
    xs.push_back(std::log(1.0 - r * r));
    ys.push_back(std::log(e.value.real()));
    ys_oracle.push_back(std::log(truth));
  }
  EXPECT_NEAR(fit_slope(xs, ys), fit_slope(xs, ys_oracle), 0.1);
}

TEST(BallPotential, HolomorphicMatchesDiskQuadrature) {
  const Point z = Point::axis(1, 0.9);
  const double truth = oracle::disk([](cplx y) { return (1.0 / (1.0 - 0.9 * std::conj(y))).real(); });
  EXPECT_NEAR(truth, 1.0, 1e-8);
  expect_within(ball_potential(ConstantFn{}, 1.0, z, PotentialMode::Holomorphic, cfg(200000, 2)), truth);
}

TEST(BallPotential, HolomorphicDominatedByModulus) {
  const TestFunction f = KernelFn::make(Point{cplx(0.5, 0.3)}, 1.5);
  for (double r : {0.0, 0.7, 0.95}) {
    const Point z{cplx(0.0, r)};
    const ComplexEstimate h = ball_potential(f, 0.7, z, PotentialMode::Holomorphic, cfg(50000, 1));
    const ComplexEstimate m = ball_potential(f, 0.7, z, PotentialMode::Modulus, cfg(50000, 2));
    EXPECT_LE(std::abs(h.value), m.value.real() + 3.0 * std::hypot(h.std_error, m.std_error));
  }
}

TEST(SpherePotential, ConstantBoundedAndLinear) {
  auto one = [](const Point&) { return 1.0; };
  EXPECT_NEAR(sphere_potential(one, 0.5, Point(2), cfg(1000)).value, 1.0, 1e-12);
  double sup = 0.0;
  for (double r : {0.9, 0.99, 0.999})
    sup = std::max(sup, sphere_potential(one, 0.5, Point::axis(2, r), cfg(100000)).value);
  EXPECT_LT(sup, 10.0);
  auto f = [](const Point& x) { return 1.0 + x[0].real(); };
  auto f2 = [&](const Point& x) { return 2.0 * f(x); };
  const Point z = Point::axis(2, 0.9);
  EXPECT_NEAR(sphere_potential(f2, 0.5, z, cfg(20000)).value, 2.0 * sphere_potential(f, 0.5, z, cfg(20000)).value,
              1e-9);
  EXPECT_THROW(sphere_potential(one, 2.0, z, cfg(10)), InputError);
}

TEST(Bergman, ReproducesMonomials) {
  for (std::size_t n : {1u, 2u}) {
    for (double r : {0.0, 0.5, 0.9}) {
      Point z(n);
      z[0] = r * cplx(0.6, 0.8);
      for (int m = 0; m <= 3; ++m) {
        auto f = [m](const Point& y) { return std::pow(y[0], m); };
        expect_within(bergman_project(f, z, cfg(200000, 10 * n + m)), std::pow(z[0], m));
      }
    }
  }
}

TEST(Bergman, AnnihilatesConjugate) {
  for (double r : {0.0, 0.5, 0.9})
    expect_within(bergman_project([](const Point& y) { return std::conj(y[0]); }, Point::axis(2, r), cfg(200000)),
                  0.0);
  EXPECT_THROW(bergman_project([](const Point&) { return cplx(1.0); }, Point::axis(1, 1.0), cfg(10)), DomainError);
}

TEST(BesovNorm, ZeroIsExact) {
  const Estimate e = besov_norm(HoloPolynomial(1), 0.5, 2.0, Weight::constant(), cfg(10));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_TRUE(e.exact);
}

TEST(BesovNorm, ConstantAndLinearOracles) {
  const Weight one = Weight::constant();
  expect_within(besov_norm(ConstantFn{}, 0.25, 2.0, 1, one, cfg(100000), 1), std::sqrt(2.0 / 3.0));
  const double z1 = 4.0 * oracle::radial_ball(1, [](double s) { return (1.0 - s) * std::sqrt(s); });
  expect_within(besov_norm(HoloPolynomial::monomial(1, {1}), 0.25, 2.0, 1, one, cfg(100000)), std::sqrt(z1));
}

TEST(BesovNorm, RequiresKAboveS) {
  try {
    besov_norm(ConstantFn{}, 1.5, 2.0, 1, Weight::constant(), cfg(10), 1);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("k > s required"), std::string::npos);
  }
  EXPECT_THROW(besov_norm(ConstantFn{}, 0.5, 1.0, 1, Weight::constant(), cfg(10), 1), InputError);
}

TEST(BesovNorm, IndependentOfKWithinBand) {
  const Weight w = Weight::power(0.5);
  double worst = 1.0;
  for (double r : {0.5, 0.9, 0.99}) {
    for (double s : {0.3, 0.7}) {
      const TestFunction f = KernelFn::make(Point::axis(1, r), 2.0);
      const double a = besov_norm(f, s, 2.0, 1, w, cfg(50000)).value;
      const double b = besov_norm(f, s, 2.0, 2, w, cfg(50000)).value;
      worst = std::max({worst, a / b, b / a});
    }
  }
  EXPECT_LE(worst, 50.0);
}

TEST(BesovNorm, RegularizedWeightGivesEquivalentNorm) {
  const Weight w = Weight::power(0.5);
  const Weight rw = regularize(w, 0.1, 32);
  double worst = 1.0;
  for (double r : {0.5, 0.9, 0.99}) {
    const TestFunction f = KernelFn::make(Point::axis(1, r), 2.0);
    const double a = besov_norm(f, 0.3, 2.0, 1, w, cfg(4000)).value;
    const double b = besov_norm(f, 0.3, 2.0, 1, rw, cfg(4000)).value;
    worst = std::max({worst, a / b, b / a});
  }
  EXPECT_LE(worst, 50.0);
}
