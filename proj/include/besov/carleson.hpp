#pragma once

// Carleson-measure testing for weighted Besov spaces with finite atomic
// measures: the tent condition, lower bounds for the embedding constants of
// the three equivalent conditions, and a consistency report tying them to the
// weight's class diagnostics.
//
// Only lower bounds on embedding constants are produced: each is a maximum
// over a finite test family.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "besov/classes.hpp"
#include "besov/core.hpp"
#include "besov/geometry.hpp"
#include "besov/kernels.hpp"
#include "besov/sampling.hpp"
#include "besov/weights.hpp"

namespace besov {

class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::size_t n) : n_(n) {
    if (n == 0 || n + 1 > kMaxDim) throw InputError("DiscreteMeasure: dimension out of range");
  }

  void add(const Point& atom, double mass) {
    if (atom.dim() != n_) throw InputError("DiscreteMeasure: atom dimension mismatch");
    if (!(atom.norm_sq() < 1.0)) throw DomainError("DiscreteMeasure: atoms must lie strictly inside the ball");
    if (!(mass > 0.0 && std::isfinite(mass))) throw InputError("DiscreteMeasure: masses must be positive and finite");
    atoms_.push_back(atom);
    masses_.push_back(mass);
  }

  std::size_t dim() const { return n_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<Point>& atoms() const { return atoms_; }
  const std::vector<double>& masses() const { return masses_; }

  double total_mass() const {
    double s = 0.0;
    for (double m : masses_) s += m;
    return s;
  }

  /// (sum mass |f(atom)|^p)^{1/p}.
  double lp_norm(const std::function<cplx(const Point&)>& f, double p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += masses_[i] * std::pow(std::abs(f(atoms_[i])), p);
    return std::pow(s, 1.0 / p);
  }

  DiscreteMeasure scaled(double c) const {
    DiscreteMeasure out(n_);
    for (std::size_t i = 0; i < atoms_.size(); ++i) out.add(atoms_[i], c * masses_[i]);
    return out;
  }

  /// 2^j equal atoms of total mass 1 on the circle |z_1| = 1 - 2^{-j} in the first coordinate.
  static DiscreteMeasure boundary_circle(std::size_t n, int j) {
    DiscreteMeasure mu(n);
    const std::size_t count = std::size_t{1} << j;
    const double r = 1.0 - std::ldexp(1.0, -j);
    for (std::size_t i = 0; i < count; ++i) {
      Point z(n);
      z[0] = std::polar(r, 2.0 * kPi * static_cast<double>(i) / static_cast<double>(count));
      mu.add(z, 1.0 / static_cast<double>(count));
    }
    return mu;
  }

 private:
  std::size_t n_;
  std::vector<Point> atoms_;
  std::vector<double> masses_;
};

/// Parses the measure CSV: a header row "n,<n>" followed by rows
/// "re(z_1),im(z_1),...,re(z_n),im(z_n),mass". Blank lines and lines
/// starting with '#' are skipped.
inline DiscreteMeasure parse_measure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::optional<DiscreteMeasure> mu;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  auto number = [&](const std::string& cell) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InputError("measure csv line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size())
      throw InputError("measure csv line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    const auto cells = split(line);
    if (!mu) {
      if (cells.size() != 2 || cells[0].find('n') == std::string::npos)
        throw InputError("measure csv line " + std::to_string(lineno) + ": expected header 'n,<dimension>'");
      const double n = number(cells[1]);
      if (!(n >= 1 && n == std::floor(n))) throw InputError("measure csv: dimension must be a positive integer");
      mu.emplace(static_cast<std::size_t>(n));
      continue;
    }
    const std::size_t n = mu->dim();
    if (cells.size() != 2 * n + 1)
      throw InputError("measure csv line " + std::to_string(lineno) + ": expected " + std::to_string(2 * n + 1) +
                       " fields, got " + std::to_string(cells.size()));
    Point z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = {number(cells[2 * i]), number(cells[2 * i + 1])};
    try {
      mu->add(z, number(cells[2 * n]));
    } catch (const std::exception& e) {
      throw InputError("measure csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!mu) throw InputError("measure csv: missing header 'n,<dimension>'");
  return *mu;
}

inline DiscreteMeasure read_measure_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read measure file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_measure_csv(ss.str());
}

inline std::string measure_to_csv(const DiscreteMeasure& mu) {
  std::ostringstream out;
  out.precision(17);
  out << "n," << mu.dim() << "\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Point& z = mu.atoms()[i];
    for (std::size_t k = 0; k < z.dim(); ++k) out << z[k].real() << "," << z[k].imag() << ",";
    out << mu.masses()[i] << "\n";
  }
  return out.str();
}

/// Boundary centers × radii.
struct TentFamily {
  std::vector<Point> centers;
  std::vector<double> radii;
};

/// Directions of up to `clusters` atoms spread through the atom list, plus
/// e_1; radii 2^{-k} down to half the smallest atom depth.
inline TentFamily default_tent_family(const DiscreteMeasure& mu, std::size_t clusters = 4) {
  TentFamily fam;
  const std::size_t n = mu.dim();
  fam.centers.push_back(Point::axis(n, 1.0));
  double min_depth = 0.5;
  if (!mu.empty()) {
    const std::size_t step = std::max<std::size_t>(1, mu.size() / clusters);
    for (std::size_t i = 0; i < mu.size() && fam.centers.size() < clusters + 1; i += step) {
      const Point& z = mu.atoms()[i];
      if (z.norm() > 0.0) {
        const Point u = SpherePoint::normalized(z).point();
        if (!(u == fam.centers.front())) fam.centers.push_back(u);
      }
    }
    for (const auto& z : mu.atoms()) min_depth = std::min(min_depth, 1.0 - z.norm());
  }
  const int kmax = static_cast<int>(std::ceil(std::log2(1.0 / min_depth))) + 1;
  for (int k = 0; k <= kmax; ++k) fam.radii.push_back(std::ldexp(1.0, -k));
  return fam;
}

struct TentTestResult {
  double value = 0.0;
  Point center;
  double radius = 0.0;
};

/// sup over the family of μ(T(η, R)) / R^exponent (exact masses, open tents).
inline TentTestResult tent_test(const DiscreteMeasure& mu, double exponent, const TentFamily& fam) {
  if (!(exponent > 0.0)) throw InputError("tent_test: exponent > 0 required");
  if (fam.centers.empty() || fam.radii.empty()) throw ConfigError("tent_test: empty tent family");
  TentTestResult best;
  best.center = fam.centers.front();
  best.radius = fam.radii.front();
  for (const auto& c : fam.centers) {
    for (double R : fam.radii) {
      const Region T = Tent::make(c, R);
      double m = 0.0;
      for (std::size_t i = 0; i < mu.size(); ++i)
        if (region_contains(T, mu.atoms()[i])) m += mu.masses()[i];
      const double v = m / std::pow(R, exponent);
      if (v > best.value) best = {v, c, R};
    }
  }
  return best;
}

enum class EmbedMode { I, II, III };

inline std::string to_string(EmbedMode m) {
  switch (m) {
    case EmbedMode::I: return "i";
    case EmbedMode::II: return "ii";
    default: return "iii";
  }
}

/// Test functions for the three conditions: nonnegative functions for the
/// potential conditions and holomorphic ones for the Besov embedding.
struct EmbeddingFamily {
  std::vector<TestFunction> positive;
  std::vector<std::string> positive_labels;
  std::vector<TestFunction> holomorphic;
  std::vector<std::string> holomorphic_labels;
};

inline std::string describe_point(const Point& z) {
  std::ostringstream out;
  out.precision(6);
  out << "(";
  for (std::size_t i = 0; i < z.dim(); ++i) {
    if (i) out << ",";
    out << z[i].real();
    if (z[i].imag() != 0.0) out << (z[i].imag() < 0 ? "" : "+") << z[i].imag() << "i";
  }
  out << ")";
  return out.str();
}

/// Indicators of every tent of `tents`, ρ-balls at two scales around cluster
/// atoms, Bergman-type profiles with poles at the cluster atoms pushed toward
/// the boundary, and the constant 1. Holomorphic side: 1, z_1^m (m <= 3) and
/// normalized kernels at the same poles.
inline EmbeddingFamily default_embedding_family(const DiscreteMeasure& mu, const TentFamily& tents) {
  EmbeddingFamily fam;
  const std::size_t n = mu.dim();
  const double nn = static_cast<double>(n);
  fam.positive.push_back(ConstantFn{1.0});
  fam.positive_labels.push_back("constant");
  for (const auto& c : tents.centers)
    for (double R : tents.radii) {
      fam.positive.push_back(IndicatorFn{Tent::make(c, R)});
      fam.positive_labels.push_back("tent" + describe_point(c) + ",R=" + std::to_string(R));
    }
  fam.holomorphic.push_back(ConstantFn{1.0});
  fam.holomorphic_labels.push_back("constant");
  for (int m = 1; m <= 3; ++m) {
    MultiIndex idx(n, 0);
    idx[0] = m;
    fam.holomorphic.push_back(HoloPolynomial::monomial(n, idx));
    fam.holomorphic_labels.push_back("z1^" + std::to_string(m));
  }
  // Cluster atoms: the atom nearest each tent center direction.
  std::vector<Point> cluster;
  for (const auto& c : tents.centers) {
    if (mu.empty()) break;
    std::size_t best = 0;
    double best_v = -2.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double v = inner(mu.atoms()[i], c).real();
      if (v > best_v) best_v = v, best = i;
    }
    const Point& z = mu.atoms()[best];
    if (std::find(cluster.begin(), cluster.end(), z) == cluster.end()) cluster.push_back(z);
  }
  for (const auto& z : cluster) {
    const double h = defect(z);
    for (double c : {1.0, 4.0}) {
      const double R = std::min(2.0, c * h);
      fam.positive.push_back(IndicatorFn{PseudoBall::make(z, R)});
      fam.positive_labels.push_back("ball" + describe_point(z) + ",R=" + std::to_string(R));
    }
    const double r = z.norm();
    const Point dir = r > 0.0 ? SpherePoint::normalized(z).point() : Point::axis(n, 1.0);
    const double depth = 1.0 - r;
    const Point pole = (1.0 - 0.5 * depth) * dir;
    fam.positive.push_back(KernelFn::make(pole, 2.0 * (nn + 1.0), nn + 1.0));
    fam.positive_labels.push_back("profile" + describe_point(pole));
    fam.holomorphic.push_back(KernelFn::make(pole, nn + 1.0, nn + 1.0));
    fam.holomorphic_labels.push_back("kernel" + describe_point(pole));
    fam.holomorphic.push_back(KernelFn::make(z, nn + 1.0, nn + 1.0));
    fam.holomorphic_labels.push_back("kernel" + describe_point(z));
  }
  return fam;
}

/// One test function's contribution.
struct EmbedTerm {
  std::string label;
  Estimate ratio;
  Estimate denominator;
  double numerator = 0.0;
};

struct EmbedResult {
  EmbedMode mode = EmbedMode::III;
  Estimate lower_bound;
  std::string argmax;
  std::vector<EmbedTerm> terms;
};

/// Potentials of every nonnegative test function at every atom, in both
/// kernel modes, plus the L^p(w dv) norms; computed once and shared.
struct PotentialTable {
  double p = 2.0, t = 0.0;
  std::vector<std::string> labels;
  /// [function][atom]
  std::vector<std::vector<double>> modulus, modulus_err;
  std::vector<std::vector<cplx>> holomorphic;
  std::vector<std::vector<double>> holomorphic_err;
  std::vector<Estimate> norms;
};

inline PotentialTable potential_table(const DiscreteMeasure& mu, const Weight& w, double s, double p,
                                      const EmbeddingFamily& fam, const SamplerConfig& cfg) {
  PotentialTable tab;
  tab.p = p;
  tab.t = s + 1.0 / p;
  const std::size_t n = mu.dim();
  const double beta = static_cast<double>(n + 1) - tab.t;
  const std::size_t F = fam.positive.size(), A = mu.size();
  tab.labels = fam.positive_labels;
  tab.modulus.assign(F, std::vector<double>(A, 0.0));
  tab.modulus_err.assign(F, std::vector<double>(A, 0.0));
  tab.holomorphic.assign(F, std::vector<cplx>(A, 0.0));
  tab.holomorphic_err.assign(F, std::vector<double>(A, 0.0));
  tab.norms.assign(F, Estimate{});
  const double tilt = detail::tilt_for({w.radial_exponent_hint()}, false);
  for (std::size_t fi = 0; fi < F; ++fi) {
    const TestFunction& f = fam.positive[fi];
    const std::uint64_t seed = derive_seed(cfg.seed, fi, hash_name("embed-positive"));
    const bool indicator = std::holds_alternative<IndicatorFn>(f);
    const DensitySampler sampler(f, n, indicator ? tilt : 0.0, true);
    std::vector<DensitySample> draws(cfg.samples);
    parallel_for((cfg.samples + kChunkSize - 1) / kChunkSize, [&](std::size_t c) {
      const std::uint64_t lo = c * kChunkSize, hi = std::min<std::uint64_t>(cfg.samples, lo + kChunkSize);
      for (std::uint64_t i = lo; i < hi; ++i) {
        CounterRng rng(seed, hash_name("density"), i);
        draws[i] = sampler.draw(rng);
      }
    });
    Moments<1> nm;
    std::uint64_t hits = 0;
    for (const auto& d : draws) {
      double v = 0.0;
      if (d.weight != 0.0) {
        v = d.weight * std::pow(d.fabs, p) * w(d.point, d.defect);
        ++hits;
      }
      nm.add({v});
    }
    if (hits == 0) throw DegenerateRegionError("embedding family: test function '" + tab.labels[fi] + "' has no samples");
    {
      Estimate e;
      const double I = nm.mean[0];
      e.value = std::pow(I, 1.0 / p);
      e.std_error = I > 0.0 ? e.value / (p * I) * nm.std_error(0) : 0.0;
      e.samples = cfg.samples;
      e.seed = seed;
      tab.norms[fi] = e;
    }
    parallel_for(A, [&](std::size_t ai) {
      const Point& z = mu.atoms()[ai];
      Moments<3> m;
      for (const auto& d : draws) {
        if (d.fw == cplx(0.0)) {
          m.add({0.0, 0.0, 0.0});
          continue;
        }
        const cplx diff = one_minus_inner(z, d.point);
        const double lg_abs = std::log(std::abs(diff));
        const double mod = std::exp(-beta * lg_abs);
        const cplx hol = std::polar(mod, -beta * std::arg(diff));
        const double fw = d.fw.real();
        m.add({fw * mod, fw * hol.real(), fw * hol.imag()});
      }
      tab.modulus[fi][ai] = m.mean[0];
      tab.modulus_err[fi][ai] = m.std_error(0);
      tab.holomorphic[fi][ai] = {m.mean[1], m.mean[2]};
      tab.holomorphic_err[fi][ai] = std::sqrt((m.cov(1, 1) + m.cov(2, 2)) / m.count);
    });
  }
  return tab;
}

namespace detail {

/// (sum m_i |x_i|^p)^{1/p} with the worst-case (fully correlated) error.
inline std::pair<double, double> atom_norm(const DiscreteMeasure& mu, const std::vector<double>& absval,
                                           const std::vector<double>& err, double p) {
  double s = 0.0, ds = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    s += mu.masses()[i] * std::pow(absval[i], p);
    ds += mu.masses()[i] * std::pow(absval[i], p - 1.0) * err[i];
  }
  if (s <= 0.0) return {0.0, 0.0};
  const double N = std::pow(s, 1.0 / p);
  return {N, N * ds / s};
}

inline Estimate ratio_estimate(double num, double num_err, const Estimate& den) {
  Estimate e;
  e.samples = den.samples;
  e.seed = den.seed;
  if (den.value <= 0.0) {
    e.value = 0.0;
    return e;
  }
  e.value = num / den.value;
  const double rn = num > 0.0 ? num_err / num : 0.0;
  const double rd = den.std_error / den.value;
  e.std_error = e.value * std::sqrt(rn * rn + rd * rd);
  return e;
}

inline EmbedResult pick_max(EmbedMode mode, std::vector<EmbedTerm> terms) {
  EmbedResult r;
  r.mode = mode;
  r.lower_bound = Estimate::exact_value(0.0);
  for (const auto& t : terms)
    if (t.ratio.value > r.lower_bound.value || (r.argmax.empty() && t.ratio.value >= r.lower_bound.value)) {
      r.lower_bound = t.ratio;
      r.argmax = t.label;
    }
  r.terms = std::move(terms);
  return r;
}

}  // namespace detail

inline EmbedResult embed_from_table(const DiscreteMeasure& mu, const PotentialTable& tab, EmbedMode mode) {
  std::vector<EmbedTerm> terms;
  for (std::size_t fi = 0; fi < tab.labels.size(); ++fi) {
    std::vector<double> absval(mu.size()), err(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (mode == EmbedMode::III) {
        absval[i] = std::abs(tab.modulus[fi][i]);
        err[i] = tab.modulus_err[fi][i];
      } else {
        absval[i] = std::abs(tab.holomorphic[fi][i]);
        err[i] = tab.holomorphic_err[fi][i];
      }
    }
    const auto [N, dN] = detail::atom_norm(mu, absval, err, tab.p);
    terms.push_back({tab.labels[fi], detail::ratio_estimate(N, dN, tab.norms[fi]), tab.norms[fi], N});
  }
  return detail::pick_max(mode, std::move(terms));
}

inline EmbedResult embed_besov(const DiscreteMeasure& mu, const Weight& w, double s, double p,
                               const EmbeddingFamily& fam, const SamplerConfig& cfg) {
  std::vector<EmbedTerm> terms(fam.holomorphic.size());
  for (std::size_t fi = 0; fi < fam.holomorphic.size(); ++fi) {
    const TestFunction& f = fam.holomorphic[fi];
    const double N = mu.lp_norm([&](const Point& z) { return eval_test(f, z); }, p);
    const auto sub = cfg.with_seed(derive_seed(cfg.seed, fi, hash_name("embed-holomorphic")));
    const Estimate D = besov_norm(f, s, p, w, sub, mu.dim());
    terms[fi] = {fam.holomorphic_labels[fi], detail::ratio_estimate(N, 0.0, D), D, N};
  }
  return detail::pick_max(EmbedMode::I, std::move(terms));
}

/// Lower bound on the best constant of one condition: the maximum over the
/// family of ||T f||_{L^p(μ)} / ||f||, where T is the potential with
/// t = s + 1/p (modes ii, iii) over L^p(w dv), or the identity over the
/// Besov norm (mode i).
inline EmbedResult embed_estimate(const DiscreteMeasure& mu, const Weight& w, double s, double p, EmbedMode mode,
                                  const EmbeddingFamily& fam, const SamplerConfig& cfg) {
  require_p(p);
  if (!(s > 0.0)) throw InputError("s > 0 required");
  cfg.validate();
  if (mu.empty()) {
    EmbedResult r;
    r.mode = mode;
    r.lower_bound = Estimate::exact_value(0.0);
    return r;
  }
  if (mode == EmbedMode::I) return embed_besov(mu, w, s, p, fam, cfg);
  return embed_from_table(mu, potential_table(mu, w, s, p, fam, cfg), mode);
}

/// Weight preset for the one-dimensional cases where the τ restriction is not needed.
struct Preset {
  std::string name;
  std::size_t n;
  double p, s;
  Weight weight;
  bool waive_tau_restriction;
};

inline Preset remark_n1_preset() {
  return {"remark-4.3-n1", 1, 2.0, 0.5, Weight::phi(PhiSpec{{0.0}, {0.5}, true}), true};
}

struct NecessityCheck {
  /// tent_constant^{1/p}
  double lhs = 0.0;
  /// max over tents T with μ(T) > 0 of R^{-e/p} ||1_T||_{L^p(w)} / min_{atoms in T} K1_T.
  double factor = 0.0;
  double kernel_iii = 0.0;
  bool holds = true;
};

struct EmbeddingReport {
  double s = 0.0, p = 2.0;
  std::size_t n = 1;
  std::size_t atoms = 0;
  double total_mass = 0.0;
  double tent_exponent = 0.0;
  std::string tent_exponent_source;
  TentTestResult tent;
  EmbedResult kernel_iii, kernel_ii, besov_i;
  Estimate ratio_iii_ii, ratio_iii_i;
  NecessityCheck necessity;
  /// Hypothesis diagnostics.
  ClassReport weight_class;
  double tau = 0.0;  // doubling order τ + 1 = max(fit, n + 1)
  bool bp_supported = false;
  bool range_theorem_41 = false;  // 0 <= τ - sp < 1
  bool range_theorem_d = false;   // τ < 1 + sp
  bool range_statements_disagree = false;
  bool tau_restriction_waived = false;
  bool mode_domination = true;
};

/// Exponent for the tent condition: n + α - sp for power weights (α = 0 for
/// constants), otherwise (fitted doubling order) - 1 - sp, which agrees with
/// the power case.
inline std::pair<double, std::string> tent_exponent_for(const Weight& w, std::size_t n, double s, double p,
                                                        double tau_fit) {
  const double nn = static_cast<double>(n);
  if (w.family() == WeightFamily::Constant) return {nn - s * p, "power (alpha = 0)"};
  if (const auto* pw = std::get_if<detail::PowerNode>(&w.node())) return {nn + pw->alpha - s * p, "power"};
  return {tau_fit - 1.0 - s * p, "doubling fit (heuristic)"};
}

struct ConsistencyOptions {
  FamilySpec weight_family;
  std::size_t clusters = 4;
  bool waive_tau_restriction = false;
  std::optional<TentFamily> tents;
  std::optional<EmbeddingFamily> functions;
};

inline ConsistencyOptions light_consistency_options(std::size_t n) {
  ConsistencyOptions o;
  o.weight_family.n = n;
  o.weight_family.shells = {0.0, 0.9, 0.99};
  o.weight_family.directions = 1;
  o.weight_family.k_min = 2;
  o.weight_family.k_max = 8;
  o.weight_family.random_regions = 4;
  return o;
}

inline EmbeddingReport consistency_report(const DiscreteMeasure& mu, const Weight& w, double s, double p,
                                          const SamplerConfig& cfg, const ConsistencyOptions& opt) {
  require_p(p);
  if (!(s > 0.0)) throw InputError("s > 0 required");
  cfg.validate();
  EmbeddingReport rep;
  rep.s = s;
  rep.p = p;
  rep.n = mu.dim();
  rep.atoms = mu.size();
  rep.total_mass = mu.total_mass();
  const std::size_t n = mu.dim();

  FamilySpec wf = opt.weight_family;
  wf.n = n;
  rep.weight_class = class_certify(w, p, wf, cfg.with_seed(derive_seed(cfg.seed, 1, hash_name("class"))));
  const double order = std::max(rep.weight_class.tau_fit, static_cast<double>(n + 1));
  rep.tau = order - 1.0;
  rep.bp_supported = rep.weight_class.bp_verdict == Verdict::Supported;
  const double sp = s * p;
  rep.range_theorem_41 = rep.tau - sp >= 0.0 && rep.tau - sp < 1.0;
  rep.range_theorem_d = rep.tau < 1.0 + sp;
  rep.range_statements_disagree = rep.range_theorem_41 != rep.range_theorem_d;
  rep.tau_restriction_waived = opt.waive_tau_restriction;

  const auto [e, src] = tent_exponent_for(w, n, s, p, rep.weight_class.tau_fit);
  rep.tent_exponent = e;
  rep.tent_exponent_source = src;
  const TentFamily tents = opt.tents ? *opt.tents : default_tent_family(mu, opt.clusters);
  const EmbeddingFamily fam = opt.functions ? *opt.functions : default_embedding_family(mu, tents);

  if (e > 0.0) rep.tent = tent_test(mu, e, tents);
  else rep.tent_exponent_source += "; nonpositive exponent, tent test skipped";

  if (mu.empty()) {
    rep.kernel_iii.lower_bound = rep.kernel_ii.lower_bound = rep.besov_i.lower_bound = Estimate::exact_value(0.0);
    rep.kernel_iii.mode = EmbedMode::III;
    rep.kernel_ii.mode = EmbedMode::II;
    rep.besov_i.mode = EmbedMode::I;
    rep.ratio_iii_ii = rep.ratio_iii_i = Estimate::exact_value(0.0);
    return rep;
  }

  const PotentialTable tab = potential_table(mu, w, s, p, fam, cfg);
  rep.kernel_iii = embed_from_table(mu, tab, EmbedMode::III);
  rep.kernel_ii = embed_from_table(mu, tab, EmbedMode::II);
  rep.besov_i = embed_besov(mu, w, s, p, fam, cfg);

  for (std::size_t fi = 0; fi < rep.kernel_iii.terms.size(); ++fi) {
    const auto& a = rep.kernel_iii.terms[fi].ratio;
    const auto& b = rep.kernel_ii.terms[fi].ratio;
    if (b.value > a.value + 3.0 * std::hypot(a.std_error, b.std_error)) rep.mode_domination = false;
  }

  auto ratio = [](const Estimate& a, const Estimate& b) {
    Estimate r;
    r.samples = a.samples;
    r.seed = a.seed;
    if (b.value <= 0.0) {
      r.value = 0.0;
      return r;
    }
    r.value = a.value / b.value;
    const double ra = a.value > 0 ? a.std_error / a.value : 0.0, rb = b.std_error / b.value;
    r.std_error = r.value * std::hypot(ra, rb);
    return r;
  };
  rep.ratio_iii_ii = ratio(rep.kernel_iii.lower_bound, rep.kernel_ii.lower_bound);
  rep.ratio_iii_i = ratio(rep.kernel_iii.lower_bound, rep.besov_i.lower_bound);

  // Necessity: for each tested tent with mass, μ(T)^{1/p} min K1_T <= ratio_T ||1_T||.
  if (e > 0.0) {
    NecessityCheck nc;
    nc.kernel_iii = rep.kernel_iii.lower_bound.value;
    nc.lhs = std::pow(rep.tent.value, 1.0 / p);
    std::size_t fi = 1;  // positive family starts with the constant, then the tents in order
    for (const auto& c : tents.centers)
      for (double R : tents.radii) {
        const Region T = Tent::make(c, R);
        double low = std::numeric_limits<double>::infinity();
        bool any = false;
        if (!opt.functions)
          for (std::size_t i = 0; i < mu.size(); ++i)
            if (region_contains(T, mu.atoms()[i])) {
              any = true;
              low = std::min(low, tab.modulus[fi][i]);
            }
        if (any && low > 0.0)
          nc.factor = std::max(nc.factor, std::pow(R, -e / p) * tab.norms[fi].value / low);
        ++fi;
      }
    nc.holds = nc.lhs <= nc.factor * nc.kernel_iii * (1.0 + 1e-12);
    rep.necessity = nc;
  }
  return rep;
}

}  // namespace besov
