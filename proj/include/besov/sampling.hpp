#pragma once

// Seeded Monte Carlo over the ball, the sphere and sub-regions, plus 1-D
// radial quadrature with a logarithmic endpoint weight.
//
// Every sample draws from its own counter-based generator keyed by
// (seed, stream, index). Samples are grouped into fixed-size chunks whose
// moments are merged in chunk order, so results do not depend on how many
// worker threads ran.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "besov/core.hpp"
#include "besov/geometry.hpp"

namespace besov {

inline constexpr std::uint64_t kDefaultSamples = 100000;
inline constexpr std::uint64_t kChunkSize = 1024;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes several integers into one seed; order-sensitive.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(a ^ splitmix64(b ^ splitmix64(c + 0x632be59bd9b4e019ULL)));
}

/// FNV-1a, used to turn a stream name into a stream id.
inline std::uint64_t hash_name(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic hash of a point's coordinates (bit patterns).
inline std::uint64_t hash_point(const Point& p) {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ p.dim();
  for (std::size_t i = 0; i < p.dim(); ++i) {
    std::uint64_t re, im;
    const double a = p[i].real() + 0.0, b = p[i].imag() + 0.0;  // folds -0 into +0
    std::memcpy(&re, &a, sizeof re);
    std::memcpy(&im, &b, sizeof im);
    h = splitmix64(h ^ re);
    h = splitmix64(h ^ im);
  }
  return h;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : state_(derive_seed(seed, stream, index)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  cplx complex_normal() { return {normal(), normal()}; }

 private:
  std::uint64_t state_;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::uint64_t samples = kDefaultSamples;
  /// Radial tilt: 1 - |y|^2 is drawn with density proportional to its gamma-th power.
  double gamma = 0.0;

  void validate() const {
    if (samples < 1) throw ConfigError("samples >= 1 required");
    if (!(gamma > -1.0)) throw ConfigError("importance exponent gamma > -1 required");
  }

  SamplerConfig with_seed(std::uint64_t s) const {
    SamplerConfig c = *this;
    c.seed = s;
    return c;
  }
  SamplerConfig with_samples(std::uint64_t n) const {
    SamplerConfig c = *this;
    c.samples = n;
    return c;
  }
  SamplerConfig with_gamma(double g) const {
    SamplerConfig c = *this;
    c.gamma = g;
    return c;
  }
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  /// Exact values carry no sampling error (std_error is 0 and meaningful).
  bool exact = false;
  /// Fraction of proposals that landed in the integration region.
  double acceptance = 1.0;
  std::vector<std::string> flags;

  static Estimate exact_value(double v) {
    Estimate e;
    e.value = v;
    e.exact = true;
    return e;
  }
};

struct ComplexEstimate {
  cplx value{};
  /// sqrt(var Re + var Im) / sqrt(samples).
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double acceptance = 1.0;
  std::vector<std::string> flags;
};

/// Running means and co-moments of K channels (Welford within a chunk,
/// Chan's pairwise formula across chunks).
template <std::size_t K>
struct Moments {
  double count = 0.0;
  std::array<double, K> mean{};
  std::array<double, K * K> m2{};

  void add(const std::array<double, K>& x) {
    count += 1.0;
    std::array<double, K> delta;
    for (std::size_t i = 0; i < K; ++i) {
      delta[i] = x[i] - mean[i];
      mean[i] += delta[i] / count;
    }
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) m2[i * K + j] += delta[i] * (x[j] - mean[j]);
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double n = count + o.count;
    std::array<double, K> delta;
    for (std::size_t i = 0; i < K; ++i) delta[i] = o.mean[i] - mean[i];
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j)
        m2[i * K + j] += o.m2[i * K + j] + delta[i] * delta[j] * count * o.count / n;
    for (std::size_t i = 0; i < K; ++i) mean[i] += delta[i] * o.count / n;
    count = n;
  }

  /// Sample covariance (divisor count - 1).
  double cov(std::size_t i, std::size_t j) const {
    return count > 1.0 ? m2[i * K + j] / (count - 1.0) : 0.0;
  }

  double std_error(std::size_t i) const {
    return count > 0.0 ? std::sqrt(std::max(0.0, cov(i, i)) / count) : 0.0;
  }

  Estimate estimate(std::size_t i, std::uint64_t seed) const {
    Estimate e;
    e.value = mean[i];
    e.std_error = std_error(i);
    e.samples = static_cast<std::uint64_t>(count);
    e.seed = seed;
    return e;
  }

  /// mean_a / mean_b with a first-order (delta-method) standard error.
  Estimate ratio(std::size_t a, std::size_t b, std::uint64_t seed) const {
    Estimate e;
    e.samples = static_cast<std::uint64_t>(count);
    e.seed = seed;
    if (mean[b] == 0.0) {
      e.value = std::numeric_limits<double>::quiet_NaN();
      e.std_error = std::numeric_limits<double>::infinity();
      return e;
    }
    const double r = mean[a] / mean[b];
    const double var = cov(a, a) - 2.0 * r * cov(a, b) + r * r * cov(b, b);
    e.value = r;
    e.std_error = std::sqrt(std::max(0.0, var) / count) / std::abs(mean[b]);
    return e;
  }
};

/// Worker count: BESOV_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("BESOV_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Evaluates `body(rng, out)` for sample indices [0, samples) and returns the
/// merged moments. `body` must be safe to call concurrently.
namespace detail {
// Set inside worker threads so nested integrations (weights that average
// themselves) run serially instead of oversubscribing.
inline thread_local bool in_worker = false;
}  // namespace detail

template <std::size_t K, class Body>
Moments<K> accumulate(std::uint64_t seed, std::uint64_t stream, std::uint64_t samples, Body&& body) {
  const std::uint64_t chunks = (samples + kChunkSize - 1) / kChunkSize;
  std::vector<Moments<K>> parts(chunks);
  auto run_chunk = [&](std::uint64_t c) {
    Moments<K> m;
    const std::uint64_t lo = c * kChunkSize, hi = std::min(samples, lo + kChunkSize);
    std::array<double, K> out;
    for (std::uint64_t i = lo; i < hi; ++i) {
      CounterRng rng(seed, stream, i);
      out.fill(0.0);
      body(rng, out);
      m.add(out);
    }
    parts[c] = m;
  };
  const unsigned workers =
      detail::in_worker ? 1u : static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), chunks));
  if (workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        detail::in_worker = true;
        for (;;) {
          const std::uint64_t c = next.fetch_add(1);
          if (c >= chunks || failed.load()) return;
          try {
            run_chunk(c);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  Moments<K> total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

/// Runs body(i) for i in [0, count) across workers. Each index must write
/// only its own output slot; results are then independent of scheduling.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const unsigned workers =
      detail::in_worker ? 1u : static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      detail::in_worker = true;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Uniform point on the unit sphere of C^m (normalized complex Gaussian).
inline Point sample_sphere(std::size_t m, CounterRng& rng) {
  Point p(m);
  double r2 = 0.0;
  do {
    for (std::size_t i = 0; i < m; ++i) p[i] = rng.complex_normal();
    r2 = p.norm_sq();
  } while (r2 == 0.0);
  p *= 1.0 / std::sqrt(r2);
  return p;
}

/// A point drawn for integration over the ball: E[weight * f(point)] = ∫ f dv.
/// `defect` is 1 - |point|^2 computed without cancellation.
struct BallSample {
  Point point;
  double weight;
  double defect;
};

/// Draws from normalized volume on B^n, optionally tilted radially and
/// pushed through a Möbius map that concentrates samples near a focus.
class BallSampler {
 public:
  explicit BallSampler(std::size_t n, double gamma = 0.0, std::optional<Point> focus = std::nullopt)
      : n_(n), gamma_(gamma), focus_(std::move(focus)) {
    if (!(gamma > -1.0)) throw ConfigError("importance exponent gamma > -1 required");
    if (focus_) {
      if (focus_->dim() != n) throw InputError("BallSampler: focus dimension mismatch");
      if (!(focus_->norm_sq() < 1.0)) throw DomainError("BallSampler: focus must satisfy |a| < 1");
      if (focus_->norm_sq() == 0.0) focus_.reset();
    }
  }

  std::size_t dim() const { return n_; }

  BallSample draw(CounterRng& rng) const {
    const Point dir = sample_sphere(n_, rng);
    const double u = rng.uniform();
    double s, weight = 1.0;
    const double nn = static_cast<double>(n_);
    if (gamma_ == 0.0) {
      // |y|^2 = U^{1/n}; s = 1 - U^{1/n} via expm1 keeps precision near the sphere.
      s = -std::expm1(std::log(u) / nn);
    } else {
      s = std::pow(u, 1.0 / (gamma_ + 1.0));
      s = std::max(s, std::numeric_limits<double>::min());
      weight = nn * std::pow(1.0 - s, nn - 1.0) / ((gamma_ + 1.0) * std::pow(s, gamma_));
    }
    Point x = std::sqrt(1.0 - s) * dir;
    if (!focus_) return {x, weight, s};
    const Point& a = *focus_;
    const double d = std::norm(1.0 - inner(x, a));
    const double aa = 1.0 - a.norm_sq();
    const double jac = std::pow(aa / d, nn + 1.0);
    return {mobius(a, x), weight * jac, aa * s / d};
  }

 private:
  std::size_t n_;
  double gamma_;
  std::optional<Point> focus_;
};

/// Integration over a boundary cap {η : |1 - η ū| < c} of the unit sphere of
/// C^m: E[weight * f(point)] = ∫_cap f dσ (normalized σ).
class CapSampler {
 public:
  CapSampler(const Frame& frame, double radius) : frame_(frame), radius_(radius) {
    if (!(radius > 0.0)) throw InputError("CapSampler: radius must be positive");
  }

  bool full_sphere() const { return radius_ >= 2.0; }

  /// Returns the sphere point and its weight (0 when the proposal misses the cap).
  std::pair<Point, double> draw(CounterRng& rng) const {
    const std::size_t m = frame_.dim();
    if (full_sphere()) return {sample_sphere(m, rng), 1.0};
    if (m == 1) {
      const double tm = 2.0 * std::asin(std::min(1.0, 0.5 * radius_));
      const double th = tm * (2.0 * rng.uniform() - 1.0);
      Point xi(1);
      xi[0] = std::polar(1.0, th);
      return {frame_.from_frame(xi), tm / kPi};
    }
    // First frame coordinate x: uniform on the half-disk {|1 - x| < c, Re x < 1};
    // its law under σ has density (m-1)/π (1-|x|^2)^{m-2} on the unit disk.
    const double rad = radius_ * std::sqrt(rng.uniform());
    const double ang = kPi * (rng.uniform() - 0.5);
    const cplx x = 1.0 - std::polar(rad, ang);
    Point tail = sample_sphere(m - 1, rng);
    const double q = 1.0 - std::norm(x);
    if (!(q > 0.0)) return {frame_[0], 0.0};
    const double md = static_cast<double>(m);
    const double weight = 0.5 * radius_ * radius_ * (md - 1.0) * std::pow(q, md - 2.0);
    Point xi(m);
    xi[0] = x;
    const double t = std::sqrt(q);
    for (std::size_t i = 1; i < m; ++i) xi[i] = t * tail[i - 1];
    return {frame_.from_frame(xi), weight};
  }

 private:
  Frame frame_;
  double radius_;
};

/// Draws points of a ball region from its polar enclosure. The draw is an
/// unbiased proposal for ∫_region f dv once multiplied by the membership test.
///
/// With a tilt, 1 - |y|^2 comes from the even mixture of the tilted and the
/// untilted radial laws on the enclosure's shell, so the importance weight
/// never exceeds twice the untilted one.
class RegionSampler {
 public:
  /// gamma tilts 1 - |y|^2 inside the enclosure; cutoff drops the shell
  /// 1 - |y|^2 < cutoff (the estimate then covers region ∩ {1-|y|^2 >= cutoff}).
  explicit RegionSampler(const Region& region, double gamma = 0.0, double cutoff = 0.0)
      : region_(region), env_(polar_enclosure(region)), cap_(env_.frame, env_.cap_radius), gamma_(gamma) {
    n_ = region_anchor(region).dim();
    lo_ = std::max(env_.s_lo, cutoff);
    hi_ = env_.s_hi;
    if (!(gamma > -1.0) && !(lo_ > 0.0))
      throw ConfigError("RegionSampler: gamma <= -1 needs a positive inner cutoff");
    if (!empty()) {
      mass0_ = hi_ - lo_;
      if (gamma_ == -1.0) mass_ = std::log(hi_ / lo_);
      else mass_ = (std::pow(hi_, gamma_ + 1.0) - std::pow(lo_, gamma_ + 1.0)) / (gamma_ + 1.0);
    }
  }

  const Region& region() const { return region_; }
  bool empty() const { return !(hi_ > lo_); }

  /// Returns a sample with weight 0 when the proposal is outside the region.
  BallSample draw(CounterRng& rng) const {
    auto [dir, wdir] = cap_.draw(rng);
    const double u = rng.uniform();
    const double pick = rng.uniform();
    if (empty()) return {Point(n_), 0.0, 1.0};
    double s;
    if (gamma_ == 0.0 || pick < 0.5) {
      s = lo_ + u * mass0_;
    } else if (gamma_ == -1.0) {
      s = lo_ * std::exp(u * mass_);
    } else {
      const double a = std::pow(lo_, gamma_ + 1.0), b = std::pow(hi_, gamma_ + 1.0);
      s = std::pow(a + u * (b - a), 1.0 / (gamma_ + 1.0));
    }
    s = std::clamp(s, std::max(lo_, std::numeric_limits<double>::min()), hi_);
    const double nn = static_cast<double>(n_);
    const double proposal =
        gamma_ == 0.0 ? 1.0 / mass0_ : 0.5 / mass0_ + 0.5 * std::pow(s, gamma_) / mass_;
    const double weight = wdir * nn * std::pow(1.0 - s, nn - 1.0) / proposal;
    Point y = std::sqrt(1.0 - s) * dir;
    if (wdir == 0.0 || !region_contains(region_, y)) return {y, 0.0, s};
    return {y, weight, s};
  }

 private:
  Region region_;
  PolarEnclosure env_;
  CapSampler cap_;
  double gamma_;
  std::size_t n_;
  double lo_, hi_;
  double mass0_ = 0.0, mass_ = 0.0;
};

/// Uniform point of the polydisk (not intersected with the ball).
inline Point sample_polydisk(const Polydisk& P, CounterRng& rng) {
  const std::size_t n = P.center.dim();
  Point xi(n);
  auto disk = [&](double r) { return std::polar(r * std::sqrt(rng.uniform()), 2.0 * kPi * rng.uniform()); };
  xi[0] = P.center.norm() + disk(P.normal_radius());
  for (std::size_t i = 1; i < n; ++i) xi[i] = disk(P.tangential_radius());
  return P.frame.from_frame(xi);
}

struct Ball {
  std::size_t n;
};
struct Sphere {
  std::size_t m;
};
using Domain = std::variant<Ball, Sphere, Region>;

namespace detail {

inline std::uint64_t domain_stream(const Domain& d) {
  return hash_name("mc_integrate") ^ d.index();
}

template <class Value, class F>
auto integrate_domain(const Domain& domain, F&& f, const SamplerConfig& cfg) {
  cfg.validate();
  constexpr bool is_complex = std::is_same_v<Value, cplx>;
  // Channels: Re, Im, accepted-indicator.
  const auto eval = [&](const Point& p) -> cplx {
    if constexpr (is_complex) return f(p);
    else return cplx(f(p), 0.0);
  };
  Moments<3> mom;
  if (const auto* b = std::get_if<Ball>(&domain)) {
    const BallSampler sampler(b->n, cfg.gamma);
    mom = accumulate<3>(cfg.seed, domain_stream(domain), cfg.samples, [&](CounterRng& rng, auto& out) {
      const BallSample s = sampler.draw(rng);
      const cplx v = s.weight == 1.0 ? eval(s.point) : s.weight * eval(s.point);
      out = {v.real(), v.imag(), 1.0};
    });
  } else if (const auto* sp = std::get_if<Sphere>(&domain)) {
    mom = accumulate<3>(cfg.seed, domain_stream(domain), cfg.samples, [&](CounterRng& rng, auto& out) {
      const cplx v = eval(sample_sphere(sp->m, rng));
      out = {v.real(), v.imag(), 1.0};
    });
  } else {
    const Region& region = std::get<Region>(domain);
    if (std::holds_alternative<BoundaryCap>(region)) {
      const auto& cap = std::get<BoundaryCap>(region);
      const CapSampler sampler(Frame::aligned_with(cap.center), cap.radius);
      mom = accumulate<3>(cfg.seed, domain_stream(domain), cfg.samples, [&](CounterRng& rng, auto& out) {
        auto [p, w] = sampler.draw(rng);
        if (w == 0.0 || !region_contains(region, p)) {
          out = {0.0, 0.0, 0.0};
          return;
        }
        const cplx v = w * eval(p);
        out = {v.real(), v.imag(), 1.0};
      });
    } else {
      const RegionSampler sampler(region, cfg.gamma);
      mom = accumulate<3>(cfg.seed, domain_stream(domain), cfg.samples, [&](CounterRng& rng, auto& out) {
        const BallSample s = sampler.draw(rng);
        if (s.weight == 0.0) {
          out = {0.0, 0.0, 0.0};
          return;
        }
        const cplx v = s.weight * eval(s.point);
        out = {v.real(), v.imag(), 1.0};
      });
    }
    if (mom.mean[2] == 0.0)
      throw DegenerateRegionError("mc_integrate: no sample landed in the " + region_kind(region));
  }
  if constexpr (is_complex) {
    ComplexEstimate e;
    e.value = {mom.mean[0], mom.mean[1]};
    e.std_error = mom.count > 0 ? std::sqrt((mom.cov(0, 0) + mom.cov(1, 1)) / mom.count) : 0.0;
    e.samples = cfg.samples;
    e.seed = cfg.seed;
    e.acceptance = mom.mean[2];
    return e;
  } else {
    Estimate e = mom.estimate(0, cfg.seed);
    e.acceptance = mom.mean[2];
    return e;
  }
}

}  // namespace detail

/// Unbiased estimate of ∫ f dμ: normalized volume on Ball, normalized σ on
/// Sphere, volume restricted to a ball region, or σ restricted to a cap.
template <class F>
Estimate mc_integrate(const Domain& domain, F&& f, const SamplerConfig& cfg) {
  return detail::integrate_domain<double>(domain, std::forward<F>(f), cfg);
}

template <class F>
ComplexEstimate mc_integrate_complex(const Domain& domain, F&& f, const SamplerConfig& cfg) {
  return detail::integrate_domain<cplx>(domain, std::forward<F>(f), cfg);
}

/// ∫_0^1 (log 1/r)^{log_power} g(r) dr by the substitution r = e^{-u}, which
/// turns it into ∫_0^U u^{log_power} e^{-u} g(e^{-u}) du with U = 50 + 10·log_power.
/// For bounded g the dropped tail is at most sup|g| · Γ(log_power+1, U)
/// (below 1e-19 for log_power in [0, 3]).
inline double radial_integrate(const std::function<double(double)>& g, double log_power) {
  if (!(log_power > -1.0)) throw DomainError("radial_integrate: log power m - 1 > -1 (m > 0) required");
  const double upper = 50.0 + 10.0 * std::max(0.0, log_power);
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator(12);
  auto h = [&](double u) {
    if (u <= 0.0) return log_power == 0.0 ? g(1.0) : 0.0;
    return std::pow(u, log_power) * std::exp(-u) * g(std::exp(-u));
  };
  // Splitting keeps the nodes dense where e^{-u} still varies.
  const double cuts[] = {0.0, 1.0, 4.0, 12.0, upper};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
    double err = 0.0;
    total += integrator.integrate(h, cuts[i], cuts[i + 1], 1e-14, &err);
  }
  return total;
}

}  // namespace besov
