#pragma once

// Numerical certification of weight classes: A_p / B_p brackets over families
// of rho-balls and tents, tent masses, and doubling-exponent fits.
//
// A finite family can refute membership in a class quantified over all balls
// but never establish it, so verdicts are one of supported, refuted-at-scale
// or inconclusive.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "besov/core.hpp"
#include "besov/geometry.hpp"
#include "besov/sampling.hpp"
#include "besov/weights.hpp"

namespace besov {

enum class Verdict { Supported, RefutedAtScale, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "supported";
    case Verdict::RefutedAtScale: return "refuted-at-scale";
    default: return "inconclusive";
  }
}

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

inline void require_p(double p) {
  if (!(p > 1.0 && std::isfinite(p))) throw InputError("p > 1 required");
}

namespace detail {

inline std::uint64_t region_stream(const Region& r, std::uint64_t salt) {
  std::uint64_t bits;
  const double rad = region_radius(r);
  std::memcpy(&bits, &rad, sizeof bits);
  return derive_seed(hash_point(region_anchor(r)), bits ^ r.index(), salt);
}

/// Radial tilt for integrands behaving like s^e for each e in `exps`.
inline double tilt_for(std::initializer_list<double> exps, bool have_cutoff) {
  double g = 0.0;
  for (double e : exps) g = std::min(g, e);
  return std::max(g, have_cutoff ? -2.0 : -0.9);
}

}  // namespace detail

/// Sampled sums ∫_r w, ∫_r w^{-(p'-1)} and v(r) (or σ(r) for caps).
struct BracketParts {
  Moments<3> moments;
  std::uint64_t seed = 0;
};

inline BracketParts bracket_parts(const Weight& w, const Region& region, double p, const SamplerConfig& cfg,
                                  double cutoff = 0.0) {
  require_p(p);
  cfg.validate();
  const double q = 1.0 / (p - 1.0);  // p' - 1
  BracketParts out;
  out.seed = cfg.seed;
  const std::uint64_t stream = detail::region_stream(region, hash_name("bracket"));
  if (const auto* cap = std::get_if<BoundaryCap>(&region)) {
    const CapSampler sampler(Frame::aligned_with(cap->center), cap->radius);
    out.moments = accumulate<3>(cfg.seed, stream, cfg.samples, [&](CounterRng& rng, auto& o) {
      auto [pt, wt] = sampler.draw(rng);
      if (wt == 0.0) return;
      const double v = w(pt, 0.0);
      o = {wt * v, wt * std::pow(v, -q), wt};
    });
    return out;
  }
  const double beta = w.radial_exponent_hint();
  const double gamma = detail::tilt_for({beta, -beta * q}, cutoff > 0.0);
  const RegionSampler sampler(region, gamma, cutoff);
  if (sampler.empty()) throw DegenerateRegionError("ap_bracket: cutoff leaves no room in the region");
  out.moments = accumulate<3>(cfg.seed, stream, cfg.samples, [&](CounterRng& rng, auto& o) {
    const BallSample s = sampler.draw(rng);
    if (s.weight == 0.0) return;
    const double v = w(s.point, s.defect);
    o = {s.weight * v, s.weight * std::pow(v, -q), s.weight};
  });
  return out;
}

/// (avg_r w)(avg_r w^{-(p'-1)})^{p-1} with a delta-method error on the log.
inline Estimate bracket_from_parts(const BracketParts& parts, double p, std::uint64_t samples) {
  const auto& m = parts.moments;
  Estimate e;
  e.samples = samples;
  e.seed = parts.seed;
  e.acceptance = m.count > 0 ? 1.0 : 0.0;
  if (m.mean[2] == 0.0) throw DegenerateRegionError("ap_bracket: no sample landed in the region");
  const double a = m.mean[0], b = m.mean[1], c = m.mean[2];
  e.value = (a / c) * std::pow(b / c, p - 1.0);
  const std::array<double, 3> g{1.0 / a, (p - 1.0) / b, -p / c};
  double var = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) var += g[i] * g[j] * m.cov(i, j);
  e.std_error = e.value * std::sqrt(std::max(0.0, var) / m.count);
  if (!std::isfinite(e.value)) e.std_error = std::numeric_limits<double>::infinity();
  return e;
}

/// A_p bracket of w over a region. Lifted weights are tested over boundary
/// caps of the sphere of C^{n+1} with σ in place of v. `cutoff` excludes the
/// shell 1 - |y|^2 < cutoff.
inline Estimate ap_bracket(const Weight& w, const Region& region, double p, const SamplerConfig& cfg,
                           double cutoff = 0.0) {
  return bracket_from_parts(bracket_parts(w, region, p, cfg, cutoff), p, cfg.samples);
}

/// ∫_T w dv over a tent (volume not normalized by v(T)).
inline Estimate tent_mass(const Weight& w, const Tent& tent, const SamplerConfig& cfg) {
  cfg.validate();
  const double gamma = detail::tilt_for({w.radial_exponent_hint()}, false);
  const Region region = tent;
  const RegionSampler sampler(region, gamma);
  const auto m = accumulate<2>(cfg.seed, detail::region_stream(region, hash_name("mass")), cfg.samples,
                               [&](CounterRng& rng, auto& o) {
                                 const BallSample s = sampler.draw(rng);
                                 if (s.weight == 0.0) return;
                                 o = {s.weight * w(s.point, s.defect), 1.0};
                               });
  Estimate e = m.estimate(0, cfg.seed);
  e.acceptance = m.mean[1];
  return e;
}

/// ∫_{U(z,R)} w dv.
inline Estimate ball_mass(const Weight& w, const PseudoBall& ball, const SamplerConfig& cfg) {
  cfg.validate();
  const double gamma = detail::tilt_for({w.radial_exponent_hint()}, false);
  const Region region = ball;
  const RegionSampler sampler(region, gamma);
  const auto m = accumulate<2>(cfg.seed, detail::region_stream(region, hash_name("mass")), cfg.samples,
                               [&](CounterRng& rng, auto& o) {
                                 const BallSample s = sampler.draw(rng);
                                 if (s.weight == 0.0) return;
                                 o = {s.weight * w(s.point, s.defect), 1.0};
                               });
  Estimate e = m.estimate(0, cfg.seed);
  e.acceptance = m.mean[1];
  return e;
}

/// Least-squares slope of ys against xs.
inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw InputError("fit_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Regions tested by class_certify.
struct FamilySpec {
  std::size_t n = 1;
  /// |z| of the ball centers.
  std::vector<double> shells{0.0, 0.5, 0.9, 0.99, 0.999};
  /// Centers per shell: the first is on the positive e_1 axis, the rest random.
  std::size_t directions = 2;
  /// Ball and tent radii 2^{-k} for k in [k_min, k_max].
  int k_min = 2;
  int k_max = 10;
  /// Additional random (center, radius) pairs.
  std::size_t random_regions = 16;
  /// Tent cutoffs R·2^{-j}: the bracket trace is recorded at each, the last one is reported.
  std::vector<int> cutoff_levels{8, 16, 24};
  /// Doubling fit: base radius 2^{-tau_base}, radii 2^{k - tau_base} for k = 0..tau_steps.
  int tau_base = 12;
  int tau_steps = 8;
  /// Depth of the interior fit center below the sphere, relative to the base radius.
  int tau_depth = 10;
  /// Relative threshold for the cutoff-refinement growth of tent brackets.
  double divergence_threshold = 1.5;
  /// Maximum allowed (fine radii max)/(coarse radii max).
  double stability_threshold = 2.0;

  void validate() const {
    if (n < 1 || n + 1 > kMaxDim) throw ConfigError("family: n out of range");
    if (k_min > k_max) throw ConfigError("family: empty radius range");
    if (k_min < 0) throw ConfigError("family: radii must be at most 1 (k_min >= 0)");
    if (shells.empty() && random_regions == 0) throw ConfigError("family: no regions to test");
    if (directions < 1) throw ConfigError("family: directions >= 1 required");
    for (double r : shells)
      if (!(r >= 0.0 && r < 1.0)) throw ConfigError("family: shells must lie in [0, 1)");
    if (cutoff_levels.empty()) throw ConfigError("family: at least one cutoff level required");
    if (tau_steps < 1) throw ConfigError("family: tau_steps >= 1 required");
  }
};

struct RegionRecord {
  std::string kind;
  Point center;
  double radius;
  bool touches;
  bool random;
  Estimate bracket;
};

struct TraceRecord {
  double radius;
  double cutoff;
  Estimate bracket;
};

struct ClassReport {
  double p = 2.0;
  std::size_t n = 1;
  Estimate ap_sup;
  Estimate bp_sup;
  double ap_grid_max = 0.0, ap_random_max = 0.0;
  double bp_grid_max = 0.0, bp_random_max = 0.0;
  /// (max over radii 2^{-k}, k > mid) / (max over k <= mid).
  double ap_radius_ratio = 1.0, bp_radius_ratio = 1.0;
  /// max over tents of bracket(finest cutoff) / bracket(coarsest cutoff).
  double divergence_growth = 1.0;
  double tau_fit = 0.0, tau_lo = 0.0, tau_hi = 0.0;
  double tau_all_balls_fit = 0.0;
  bool tau_at_least_n_plus_1 = true;
  bool tau_within_bp_bound = true;
  bool tau_bound_applicable = false;
  Verdict ap_verdict = Verdict::Inconclusive;
  Verdict bp_verdict = Verdict::Inconclusive;
  std::vector<RegionRecord> regions;
  std::vector<TraceRecord> trace;
};

namespace detail {

inline Point random_direction(std::size_t n, CounterRng& rng) { return sample_sphere(n, rng); }

inline Point rotated_axis(std::size_t n, double r, std::size_t index, CounterRng& rng) {
  if (index == 0) return Point::axis(n, r);
  return r * random_direction(n, rng);
}

}  // namespace detail

/// Doubling-exponent fits for the boundary-touching normalization.
/// Returns {mean slope, min slope, max slope, all-balls fit}.
inline std::array<double, 4> doubling_fit(const Weight& w, const FamilySpec& fam, const SamplerConfig& cfg) {
  const std::size_t n = fam.n;
  const double R0 = std::ldexp(1.0, -fam.tau_base);
  const double depth = std::ldexp(R0, -fam.tau_depth);
  std::vector<double> slopes, all_slopes;
  for (const double h : {0.0, depth}) {
    const Point z = Point::axis(n, std::sqrt(1.0 - h));
    std::vector<double> ks, ys, ys_all;
    for (int k = 0; k <= fam.tau_steps; ++k) {
      const double R = std::ldexp(R0, k);
      const Estimate m = ball_mass(w, PseudoBall::make(z, R), cfg.with_seed(derive_seed(cfg.seed, k, 7)));
      ks.push_back(k);
      ys.push_back(std::log2(m.value));
      // All-balls normalization: w(U(2^k R)) (h+R)/(h+2^k R) ≈ 2^{k(τ-1)}.
      ys_all.push_back(std::log2(m.value * (h + R0) / (h + R)));
    }
    slopes.push_back(fit_slope(ks, ys));
    all_slopes.push_back(fit_slope(ks, ys_all) + 1.0);
  }
  double mean = 0.0, all = 0.0;
  for (double s : slopes) mean += s;
  for (double s : all_slopes) all += s;
  mean /= static_cast<double>(slopes.size());
  all /= static_cast<double>(all_slopes.size());
  const auto [lo, hi] = std::minmax_element(slopes.begin(), slopes.end());
  return {mean, *lo, *hi, all};
}

/// Brackets over a deterministic grid of balls and tents plus a random
/// family, the cutoff-refinement trace on tents and the doubling fits.
inline ClassReport class_certify(const Weight& w, double p, const FamilySpec& fam, const SamplerConfig& cfg) {
  require_p(p);
  fam.validate();
  cfg.validate();
  ClassReport rep;
  rep.p = p;
  rep.n = fam.n;
  const std::size_t n = fam.n;
  const int k_mid = (fam.k_min + fam.k_max) / 2;
  const double finest = std::ldexp(1.0, -fam.cutoff_levels.back());
  CounterRng dir_rng(cfg.seed, hash_name("family-directions"), 0);

  double ap_coarse = 0, ap_fine = 0, bp_coarse = 0, bp_fine = 0;
  Estimate ap_best, bp_best;
  ap_best.value = bp_best.value = -1.0;
  bool any_nonfinite = false;
  double max_rel_err = 0.0;

  auto record = [&](RegionRecord r, int k) {
    const double v = r.bracket.value;
    if (!std::isfinite(v)) any_nonfinite = true;
    else max_rel_err = std::max(max_rel_err, r.bracket.std_error / v);
    const bool in_bp = r.touches;
    auto upd = [&](Estimate& best, double& grid, double& rnd, double& coarse, double& fine) {
      if (!(best.value >= v)) best = r.bracket;
      if (r.random) rnd = std::max(rnd, v);
      else grid = std::max(grid, v);
      if (k >= 0) (k <= k_mid ? coarse : fine) = std::max(k <= k_mid ? coarse : fine, v);
    };
    upd(ap_best, rep.ap_grid_max, rep.ap_random_max, ap_coarse, ap_fine);
    if (in_bp) upd(bp_best, rep.bp_grid_max, rep.bp_random_max, bp_coarse, bp_fine);
    rep.regions.push_back(std::move(r));
  };

  std::uint64_t idx = 0;
  auto sub = [&](std::uint64_t i) { return cfg.with_seed(derive_seed(cfg.seed, i, hash_name("certify"))); };

  // Balls on the shell grid.
  for (double r0 : fam.shells) {
    const std::size_t dirs = r0 == 0.0 ? 1 : fam.directions;
    for (std::size_t d = 0; d < dirs; ++d) {
      const Point z = detail::rotated_axis(n, r0, d, dir_rng);
      for (int k = fam.k_min; k <= fam.k_max; ++k) {
        const double R = std::ldexp(1.0, -k);
        const bool touches = touches_boundary(z, R);
        const Region reg = PseudoBall::make(z, R);
        const Estimate b = ap_bracket(w, reg, p, sub(idx++), touches ? R * finest : 0.0);
        record({"pseudo_ball", z, R, touches, false, b}, k);
      }
    }
  }

  // Tents, with the cutoff trace.
  for (std::size_t d = 0; d < fam.directions; ++d) {
    const Point zeta = detail::rotated_axis(n, 1.0, d, dir_rng);
    for (int k = fam.k_min; k <= fam.k_max; ++k) {
      const double R = std::ldexp(1.0, -k);
      const Region reg = Tent::make(zeta, R);
      Estimate first, last;
      for (std::size_t c = 0; c < fam.cutoff_levels.size(); ++c) {
        const double delta = R * std::ldexp(1.0, -fam.cutoff_levels[c]);
        const Estimate b = ap_bracket(w, reg, p, sub(idx++), delta);
        rep.trace.push_back({R, delta, b});
        if (c == 0) first = b;
        last = b;
      }
      const double growth = last.value / first.value;
      if (!std::isfinite(growth)) any_nonfinite = true;
      else rep.divergence_growth = std::max(rep.divergence_growth, growth);
      record({"tent", zeta, R, true, false, last}, k);
    }
  }

  // Random family.
  CounterRng rnd(cfg.seed, hash_name("family-random"), 1);
  for (std::size_t i = 0; i < fam.random_regions; ++i) {
    const double depth = std::pow(10.0, -3.0 * rnd.uniform());
    const double r0 = 1.0 - depth;
    const Point z = r0 * detail::random_direction(n, rnd);
    const double R = std::ldexp(1.0, -fam.k_min - static_cast<int>(rnd.uniform() * (fam.k_max - fam.k_min + 1)));
    const bool touches = touches_boundary(z, R);
    const Estimate b = ap_bracket(w, PseudoBall::make(z, R), p, sub(idx++), touches ? R * finest : 0.0);
    record({"pseudo_ball", z, R, touches, true, b}, -1);
  }

  rep.ap_sup = ap_best;
  rep.bp_sup = bp_best;
  rep.ap_radius_ratio = ap_coarse > 0 ? ap_fine / ap_coarse : 1.0;
  rep.bp_radius_ratio = bp_coarse > 0 ? bp_fine / bp_coarse : 1.0;

  const auto fit = doubling_fit(w, fam, cfg);
  rep.tau_fit = fit[0];
  rep.tau_lo = fit[1];
  rep.tau_hi = fit[2];
  rep.tau_all_balls_fit = fit[3];
  rep.tau_at_least_n_plus_1 = rep.tau_fit >= static_cast<double>(n + 1) - 0.1;

  const bool diverging = any_nonfinite || rep.divergence_growth > fam.divergence_threshold;
  auto verdict = [&](double ratio) {
    if (diverging || ratio > fam.stability_threshold) return Verdict::RefutedAtScale;
    if (max_rel_err > 0.25) return Verdict::Inconclusive;
    return Verdict::Supported;
  };
  rep.bp_verdict = verdict(rep.bp_radius_ratio);
  rep.ap_verdict = verdict(rep.ap_radius_ratio);
  rep.tau_bound_applicable = rep.bp_verdict == Verdict::Supported;
  rep.tau_within_bp_bound = rep.tau_fit <= p * static_cast<double>(n + 1) + 0.1;
  return rep;
}

}  // namespace besov
