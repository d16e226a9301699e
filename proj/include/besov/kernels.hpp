#pragma once

// Radial-derivative calculus, fractional potentials on the ball and the
// sphere, the Bergman projector and the weighted Besov norm.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "besov/classes.hpp"
#include "besov/core.hpp"
#include "besov/geometry.hpp"
#include "besov/sampling.hpp"
#include "besov/weights.hpp"

namespace besov {

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& m) {
  int d = 0;
  for (int e : m) d += e;
  return d;
}

/// Sparse holomorphic polynomial sum_m c_m z^m on C^n.
class HoloPolynomial {
 public:
  explicit HoloPolynomial(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxDim) throw InputError("HoloPolynomial: dimension out of range");
  }

  static HoloPolynomial monomial(std::size_t n, const MultiIndex& m, cplx coef = 1.0) {
    HoloPolynomial p(n);
    p.add_term(m, coef);
    return p;
  }

  void add_term(const MultiIndex& m, cplx coef) {
    if (m.size() != n_) throw InputError("HoloPolynomial: multi-index length must equal n");
    for (int e : m)
      if (e < 0) throw InputError("HoloPolynomial: exponents must be nonnegative");
    cplx& c = terms_[m];
    c += coef;
    if (c == cplx(0.0)) terms_.erase(m);
  }

  std::size_t dim() const { return n_; }
  const std::map<MultiIndex, cplx>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
    return d;
  }

  /// Direct monomial sum.
  cplx operator()(const Point& z) const {
    if (z.dim() != n_) throw InputError("HoloPolynomial: evaluation dimension mismatch");
    cplx s = 0.0;
    for (const auto& [m, c] : terms_) {
      cplx t = c;
      for (std::size_t i = 0; i < n_; ++i)
        for (int e = 0; e < m[i]; ++e) t *= z[i];
      s += t;
    }
    return s;
  }

  /// Nested Horner evaluation, one variable at a time.
  cplx horner(const Point& z) const {
    if (z.dim() != n_) throw InputError("HoloPolynomial: evaluation dimension mismatch");
    std::vector<std::pair<MultiIndex, cplx>> items(terms_.begin(), terms_.end());
    return horner_rec(items, z, 0);
  }

  HoloPolynomial operator+(const HoloPolynomial& o) const {
    HoloPolynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
  }

  friend bool operator==(const HoloPolynomial& a, const HoloPolynomial& b) {
    return a.n_ == b.n_ && a.terms_ == b.terms_;
  }

 private:
  static cplx horner_rec(const std::vector<std::pair<MultiIndex, cplx>>& items, const Point& z, std::size_t var) {
    if (items.empty()) return 0.0;
    if (var == z.dim()) {
      cplx s = 0.0;
      for (const auto& it : items) s += it.second;
      return s;
    }
    std::map<int, std::vector<std::pair<MultiIndex, cplx>>> by_power;
    for (const auto& it : items) by_power[it.first[var]].push_back(it);
    const int top = by_power.rbegin()->first;
    cplx acc = 0.0;
    for (int e = top; e >= 0; --e) {
      acc *= z[var];
      auto f = by_power.find(e);
      if (f != by_power.end()) acc += horner_rec(f->second, z, var + 1);
    }
    return acc;
  }

  std::size_t n_;
  std::map<MultiIndex, cplx> terms_;
};

/// (I+R)^k on a polynomial: the coefficient of z^m is multiplied by (1+|m|)^k.
inline HoloPolynomial radial_power(const HoloPolynomial& f, int k) {
  HoloPolynomial out(f.dim());
  for (const auto& [m, c] : f.terms()) out.add_term(m, c * std::pow(1.0 + total_degree(m), k));
  return out;
}

/// z ↦ (1 - |y|^2)^a (1 - z ȳ)^{-b}.
struct KernelFn {
  Point pole;
  double b;
  double a = 0.0;

  static KernelFn make(const Point& pole, double b, double a = 0.0) {
    if (!(pole.norm_sq() < 1.0)) throw DomainError("KernelFn: pole must lie in the open ball");
    if (!(b > 0.0)) throw InputError("KernelFn: exponent b > 0 required");
    if (!(a >= 0.0)) throw InputError("KernelFn: normalization a >= 0 required");
    return {pole, b, a};
  }

  double scale() const { return std::pow(defect(pole), a); }
};

struct IndicatorFn {
  Region region;
};

struct ConstantFn {
  cplx c = 1.0;
};

using TestFunction = std::variant<HoloPolynomial, KernelFn, IndicatorFn, ConstantFn>;

inline bool is_holomorphic(const TestFunction& f) { return !std::holds_alternative<IndicatorFn>(f); }

inline std::size_t test_function_dim(const TestFunction& f, std::size_t fallback) {
  if (const auto* p = std::get_if<HoloPolynomial>(&f)) return p->dim();
  if (const auto* k = std::get_if<KernelFn>(&f)) return k->pole.dim();
  if (const auto* i = std::get_if<IndicatorFn>(&f)) return region_anchor(i->region).dim();
  return fallback;
}

/// Principal-branch power (1 - w)^{-c}; Re(1 - w) > 0 on the ball.
inline cplx kernel_power(cplx one_minus_w, double c) { return std::exp(-c * std::log(one_minus_w)); }

inline cplx one_minus_inner(const Point& z, const Point& y) {
  const cplx w = inner(z, y);
  return {1.0 - w.real(), -w.imag()};
}

inline cplx eval_test(const TestFunction& f, const Point& z) {
  return std::visit(
      [&](const auto& g) -> cplx {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, HoloPolynomial>) return g(z);
        else if constexpr (std::is_same_v<T, KernelFn>) return g.scale() * kernel_power(one_minus_inner(z, g.pole), g.b);
        else if constexpr (std::is_same_v<T, IndicatorFn>) return region_contains(g.region, z) ? 1.0 : 0.0;
        else return g.c;
      },
      f);
}

/// (I+R)^k of (1 - z ȳ)^{-b} as sum_j coef[j] (1 - z ȳ)^{-(b+j)}.
///
/// With w = z ȳ the operator acts as D = 1 + w d/dw, and
/// D (1-w)^{-c} = (1-c)(1-w)^{-c} + c (1-w)^{-c-1}.
struct KernelExpansion {
  double b;
  std::vector<double> coef;

  static KernelExpansion of(double b, int k) {
    if (k < 0) throw InputError("KernelExpansion: k >= 0 required");
    KernelExpansion e{b, {1.0}};
    for (int step = 0; step < k; ++step) {
      std::vector<double> next(e.coef.size() + 1, 0.0);
      for (std::size_t j = 0; j < e.coef.size(); ++j) {
        const double c = b + static_cast<double>(j);
        next[j] += (1.0 - c) * e.coef[j];
        next[j + 1] += c * e.coef[j];
      }
      e.coef = std::move(next);
    }
    return e;
  }

  cplx operator()(cplx one_minus_w) const {
    cplx s = 0.0;
    const cplx lg = std::log(one_minus_w);
    for (std::size_t j = 0; j < coef.size(); ++j)
      if (coef[j] != 0.0) s += coef[j] * std::exp(-(b + static_cast<double>(j)) * lg);
    return s;
  }
};

/// Evaluator for (I+R)^k f with k >= 0, exact for polynomials, kernels and constants.
inline std::function<cplx(const Point&)> radial_derivative(const TestFunction& f, int k) {
  if (k < 0) throw InputError("radial_derivative: k >= 0 required");
  if (const auto* p = std::get_if<HoloPolynomial>(&f)) {
    auto q = radial_power(*p, k);
    return [q](const Point& z) { return q(z); };
  }
  if (const auto* g = std::get_if<KernelFn>(&f)) {
    const auto e = KernelExpansion::of(g->b, k);
    const double sc = g->scale();
    const Point pole = g->pole;
    return [e, sc, pole](const Point& z) { return sc * e(one_minus_inner(z, pole)); };
  }
  if (const auto* c = std::get_if<ConstantFn>(&f)) {
    const cplx v = c->c;
    return [v](const Point&) { return v; };
  }
  throw InputError("radial_derivative: indicator functions are not holomorphic");
}

/// (I+R)^{-m} f(z) = (1/Γ(m)) ∫_0^1 (log 1/r)^{m-1} f(rz) dr.
inline cplx inv_radial(const std::function<cplx(const Point&)>& f, double m, const Point& z) {
  if (!(m > 0.0)) throw DomainError("inv_radial: m > 0 required");
  const double g = std::tgamma(m);
  const double re = radial_integrate([&](double r) { return f(r * z).real(); }, m - 1.0);
  const double im = radial_integrate([&](double r) { return f(r * z).imag(); }, m - 1.0);
  return cplx(re, im) / g;
}

enum class PotentialMode { Modulus, Holomorphic };

inline std::string to_string(PotentialMode m) { return m == PotentialMode::Modulus ? "modulus" : "holomorphic"; }

inline void check_potential_order(double t, std::size_t n) {
  if (!(t > 0.0)) throw InputError("ball_potential: t > 0 required");
  (void)n;
}

/// A sampled density: E[fw * g(point)] = ∫ f g dv for the test function f.
struct DensitySample {
  Point point;
  double defect;
  cplx fw;
  /// Sampling weight and |f(point)|.
  double weight;
  double fabs;
};

/// Sampler matched to a test function: region draws for indicators, Möbius
/// focus at the pole for kernels, tilted ball draws otherwise.
class DensitySampler {
 public:
  DensitySampler(const TestFunction& f, std::size_t n, double gamma, bool modulus)
      : f_(f), modulus_(modulus), n_(test_function_dim(f, n)) {
    if (const auto* ind = std::get_if<IndicatorFn>(&f)) {
      region_.emplace(ind->region, gamma);
    } else if (const auto* k = std::get_if<KernelFn>(&f)) {
      ball_.emplace(n_, gamma, k->pole);
    } else {
      ball_.emplace(n_, gamma);
    }
  }

  std::size_t dim() const { return n_; }

  DensitySample draw(CounterRng& rng) const {
    BallSample s = region_ ? region_->draw(rng) : ball_->draw(rng);
    if (s.weight == 0.0) return {s.point, s.defect, 0.0, 0.0, 0.0};
    cplx v = region_ ? cplx(1.0) : eval_test(f_, s.point);
    const double a = std::abs(v);
    if (modulus_) v = a;
    return {s.point, s.defect, s.weight * v, s.weight, a};
  }

 private:
  TestFunction f_;
  bool modulus_;
  std::size_t n_;
  std::optional<RegionSampler> region_;
  std::optional<BallSampler> ball_;
};

/// Kernel |1 - z ȳ|^{-β} or (1 - z ȳ)^{-β} with β = n + 1 - t.
inline cplx potential_kernel(const Point& z, const Point& y, double beta, PotentialMode mode) {
  const cplx d = one_minus_inner(z, y);
  if (mode == PotentialMode::Modulus) return std::pow(std::abs(d), -beta);
  return kernel_power(d, beta);
}

/// ∫ f(y) K(z, y) dv(y) with K = |1 - z ȳ|^{-(n+1-t)} (modulus) or
/// (1 - z ȳ)^{-(n+1-t)} (holomorphic). In modulus mode f is replaced by |f|.
inline ComplexEstimate ball_potential(const TestFunction& f, double t, const Point& z, PotentialMode mode,
                                      const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t n = z.dim();
  check_potential_order(t, n);
  if (z.norm_sq() > 1.0 + kSphereTolerance) throw DomainError("ball_potential: |z| <= 1 required");
  if (test_function_dim(f, n) != n) throw InputError("ball_potential: dimension mismatch");
  const double beta = static_cast<double>(n + 1) - t;
  const DensitySampler sampler(f, n, cfg.gamma, mode == PotentialMode::Modulus);
  const auto m = accumulate<3>(cfg.seed, hash_name("ball_potential"), cfg.samples, [&](CounterRng& rng, auto& o) {
    const DensitySample s = sampler.draw(rng);
    if (s.fw == cplx(0.0)) return;
    const cplx v = s.fw * potential_kernel(z, s.point, beta, mode);
    o = {v.real(), v.imag(), 1.0};
  });
  ComplexEstimate e;
  e.value = {m.mean[0], m.mean[1]};
  e.std_error = std::sqrt((m.cov(0, 0) + m.cov(1, 1)) / m.count);
  e.samples = cfg.samples;
  e.seed = cfg.seed;
  e.acceptance = m.mean[2];
  if (t >= static_cast<double>(n + 1)) e.flags.push_back("bounded-kernel regime: t >= n + 1");
  return e;
}

/// ∫ f(η) |1 - z η̄|^{-(m-s)} dσ(η) on the unit sphere of C^m (m = z.dim()).
inline Estimate sphere_potential(const std::function<double(const Point&)>& f, double s, const Point& z,
                                 const SamplerConfig& cfg) {
  cfg.validate();
  const std::size_t m = z.dim();
  if (!(s > 0.0 && s < static_cast<double>(m))) throw InputError("sphere_potential: s in (0, m) required");
  if (z.norm_sq() > 1.0 + kSphereTolerance) throw DomainError("sphere_potential: |z| <= 1 required");
  const double beta = static_cast<double>(m) - s;
  const auto mom = accumulate<1>(cfg.seed, hash_name("sphere_potential"), cfg.samples, [&](CounterRng& rng, auto& o) {
    const Point eta = sample_sphere(m, rng);
    o[0] = f(eta) * std::pow(std::abs(one_minus_inner(z, eta)), -beta);
  });
  return mom.estimate(0, cfg.seed);
}

/// Bf(z) = ∫ f(y) (1 - z ȳ)^{-(n+1)} dv(y) for |z| < 1.
inline ComplexEstimate bergman_project(const std::function<cplx(const Point&)>& f, const Point& z,
                                       const SamplerConfig& cfg) {
  cfg.validate();
  if (!(z.norm_sq() < 1.0)) throw DomainError("bergman_project: |z| < 1 required");
  const std::size_t n = z.dim();
  const BallSampler sampler(n, cfg.gamma);
  const int e = static_cast<int>(n + 1);
  const auto m = accumulate<2>(cfg.seed, hash_name("bergman"), cfg.samples, [&](CounterRng& rng, auto& o) {
    const BallSample s = sampler.draw(rng);
    cplx k = 1.0 / one_minus_inner(z, s.point);
    cplx kp = 1.0;
    for (int i = 0; i < e; ++i) kp *= k;
    const cplx v = s.weight * f(s.point) * kp;
    o = {v.real(), v.imag()};
  });
  ComplexEstimate out;
  out.value = {m.mean[0], m.mean[1]};
  out.std_error = std::sqrt((m.cov(0, 0) + m.cov(1, 1)) / m.count);
  out.samples = cfg.samples;
  out.seed = cfg.seed;
  return out;
}

inline bool is_zero_function(const TestFunction& f) {
  if (const auto* p = std::get_if<HoloPolynomial>(&f)) return p->is_zero();
  if (const auto* c = std::get_if<ConstantFn>(&f)) return c->c == cplx(0.0);
  return false;
}

inline int default_besov_k(double s) { return static_cast<int>(std::floor(s)) + 1; }

/// (∫ |(I+R)^k f|^p (1-|y|^2)^{(k-s)p-1} w dv)^{1/p}.
///
/// The radial tilt is (k-s)p - 1 plus the weight's boundary exponent; for
/// kernels the samples are also pushed toward the pole by a Möbius map.
inline Estimate besov_norm(const TestFunction& f, double s, double p, int k, const Weight& w,
                           const SamplerConfig& cfg, std::size_t n = 0) {
  require_p(p);
  if (!(static_cast<double>(k) > s)) throw InputError("k > s required");
  cfg.validate();
  if (!is_holomorphic(f)) throw InputError("besov_norm: test function must be holomorphic");
  if (is_zero_function(f)) {
    Estimate e = Estimate::exact_value(0.0);
    e.seed = cfg.seed;
    return e;
  }
  const std::size_t dim = test_function_dim(f, n);
  if (dim == 0) throw InputError("besov_norm: dimension required for constant test functions");
  const double e_rad = (static_cast<double>(k) - s) * p - 1.0;
  const double gamma = std::clamp(e_rad + w.radial_exponent_hint(), -0.9, 50.0);
  const auto dk = radial_derivative(f, k);
  std::optional<Point> focus;
  if (const auto* g = std::get_if<KernelFn>(&f)) focus = g->pole;
  const BallSampler sampler(dim, gamma, focus);
  const auto m = accumulate<1>(cfg.seed, hash_name("besov_norm"), cfg.samples, [&](CounterRng& rng, auto& o) {
    const BallSample b = sampler.draw(rng);
    const double v = std::pow(std::abs(dk(b.point)), p) * std::pow(b.defect, e_rad) * w(b.point, b.defect);
    o[0] = b.weight * v;
  });
  Estimate e;
  const double I = m.mean[0];
  e.value = std::pow(I, 1.0 / p);
  // d(I^{1/p}) = (1/p) I^{1/p - 1} dI.
  e.std_error = I > 0.0 ? e.value / (p * I) * m.std_error(0) : 0.0;
  e.samples = cfg.samples;
  e.seed = cfg.seed;
  return e;
}

inline Estimate besov_norm(const TestFunction& f, double s, double p, const Weight& w, const SamplerConfig& cfg,
                           std::size_t n = 0) {
  return besov_norm(f, s, p, default_besov_k(s), w, cfg, n);
}

}  // namespace besov
