#pragma once

// Weight families on the ball. A Weight is an immutable handle to a tree of
// family nodes; evaluation is deterministic (the Monte Carlo inside induced
// and regularized weights is seeded from the evaluation point).

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "besov/core.hpp"
#include "besov/geometry.hpp"
#include "besov/sampling.hpp"

namespace besov {

inline constexpr std::uint64_t kDefaultInnerSamples = 4096;

/// φ(t) = c_i t^{α_i} on [breaks[i], breaks[i+1]), breaks[0] = 0, with the
/// c_i fixed by continuity and c_0 = 1. Monotone by construction: all
/// exponents share the sign demanded by `increasing`.
struct PhiSpec {
  std::vector<double> breaks{0.0};
  std::vector<double> alphas{0.0};
  bool increasing = true;

  void validate() const {
    if (breaks.empty() || breaks.size() != alphas.size())
      throw InputError("phi: breaks and alphas must be nonempty and of equal length");
    if (breaks.front() != 0.0) throw InputError("phi: first break must be 0");
    for (std::size_t i = 1; i < breaks.size(); ++i)
      if (!(breaks[i] > breaks[i - 1] && breaks[i] < 1.0)) throw InputError("phi: breaks must increase within [0, 1)");
    for (double a : alphas) {
      if (!std::isfinite(a)) throw InputError("phi: exponents must be finite");
      if (increasing ? a < 0.0 : a > 0.0)
        throw InputError(increasing ? "phi: nondecreasing table needs exponents >= 0"
                                    : "phi: nonincreasing table needs exponents <= 0");
    }
  }

  double operator()(double t) const {
    double coef = 1.0;
    std::size_t i = 0;
    while (i + 1 < breaks.size() && t >= breaks[i + 1]) {
      const double b = breaks[i + 1];
      coef *= std::pow(b, alphas[i] - alphas[i + 1]);
      ++i;
    }
    return coef * std::pow(t, alphas[i]);
  }
};

/// Weight on the sphere S^n used to build induced weights.
struct BoundaryWeight {
  enum class Kind { Constant, PowerDistance };
  Kind kind = Kind::Constant;
  double value = 1.0;             // Constant
  std::vector<cplx> center;       // PowerDistance: |1 - ζ η̄|^beta
  double beta = 0.0;

  double operator()(const Point& zeta) const {
    if (kind == Kind::Constant) return value;
    double re = 1.0, im = 0.0;
    for (std::size_t i = 0; i < zeta.dim(); ++i) {
      const cplx t = zeta[i] * std::conj(center[i]);
      re -= t.real();
      im -= t.imag();
    }
    return std::pow(std::hypot(re, im), beta);
  }
};

enum class WeightFamily { Constant, Power, Phi, Induced, Lifted, Regularized, Product, Pow };

class Weight;

namespace detail {

struct ConstantNode { double c; };
struct PowerNode { double alpha; };
struct PhiNode { PhiSpec phi; };
struct InducedNode {
  BoundaryWeight boundary;
  double aperture;
  std::uint64_t inner_samples;
  std::uint64_t inner_seed;
};
struct LiftedNode { std::shared_ptr<const Weight> base; };
struct RegularizedNode {
  std::shared_ptr<const Weight> base;
  double eps;
  std::uint64_t inner_samples;
  std::uint64_t inner_seed;
};
struct ProductNode { std::shared_ptr<const Weight> a, b; };
struct PowNode { std::shared_ptr<const Weight> base; double q; };

using WeightNode =
    std::variant<ConstantNode, PowerNode, PhiNode, InducedNode, LiftedNode, RegularizedNode, ProductNode, PowNode>;

}  // namespace detail

class Weight {
 public:
  static Weight constant(double c = 1.0) {
    if (!(c > 0.0 && std::isfinite(c))) throw InputError("constant weight: c > 0 required");
    return Weight(detail::ConstantNode{c});
  }

  /// (1 - |z|)^alpha.
  static Weight power(double alpha) {
    if (!std::isfinite(alpha)) throw InputError("power weight: alpha must be finite");
    return Weight(detail::PowerNode{alpha});
  }

  /// φ(1 - |z|).
  static Weight phi(PhiSpec spec) {
    spec.validate();
    return Weight(detail::PhiNode{std::move(spec)});
  }

  /// (1-|z|^2)^{-n} ∫_{I_z} w dσ with I_z the closed cap of radius c(1-|z|^2)
  /// about z/|z|, and I_0 the whole sphere.
  static Weight induced(BoundaryWeight boundary, double aperture, std::uint64_t inner_samples = kDefaultInnerSamples,
                        std::uint64_t inner_seed = 0) {
    if (!(aperture > 0.0)) throw InputError("induced weight: aperture c > 0 required");
    if (inner_samples < 1) throw InputError("induced weight: inner_samples >= 1 required");
    return Weight(detail::InducedNode{std::move(boundary), aperture, inner_samples, inner_seed});
  }

  /// w_l(ζ) = w(ζ_1, ..., ζ_n) on the sphere of C^{n+1}.
  static Weight lifted(const Weight& base) {
    return Weight(detail::LiftedNode{std::make_shared<const Weight>(base)});
  }

  /// Average of the base weight over U(z, eps(1 - |z|^2)).
  static Weight regularized(const Weight& base, double eps, std::uint64_t inner_samples = kDefaultInnerSamples,
                            std::uint64_t inner_seed = 0) {
    if (!(eps > 0.0 && eps < 1.0)) throw InputError("regularize: eps in (0, 1) required");
    if (inner_samples < 1) throw InputError("regularize: inner_samples >= 1 required");
    return Weight(detail::RegularizedNode{std::make_shared<const Weight>(base), eps, inner_samples, inner_seed});
  }

  static Weight product(const Weight& a, const Weight& b) {
    return Weight(detail::ProductNode{std::make_shared<const Weight>(a), std::make_shared<const Weight>(b)});
  }

  /// w^q.
  static Weight pow(const Weight& base, double q) {
    if (!std::isfinite(q)) throw InputError("weight power: exponent must be finite");
    return Weight(detail::PowNode{std::make_shared<const Weight>(base), q});
  }

  WeightFamily family() const { return static_cast<WeightFamily>(node_->index()); }
  const detail::WeightNode& node() const { return *node_; }
  bool is_lifted() const { return family() == WeightFamily::Lifted; }

  /// β with w(z) ≍ (1 - |z|)^β as |z| → 1 (used to pick radial tilts).
  double radial_exponent_hint() const {
    return std::visit(
        [](const auto& n) -> double {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, detail::PowerNode>) return n.alpha;
          else if constexpr (std::is_same_v<T, detail::PhiNode>) return n.phi.alphas.front();
          else if constexpr (std::is_same_v<T, detail::LiftedNode>) return n.base->radial_exponent_hint();
          else if constexpr (std::is_same_v<T, detail::RegularizedNode>) return n.base->radial_exponent_hint();
          else if constexpr (std::is_same_v<T, detail::ProductNode>)
            return n.a->radial_exponent_hint() + n.b->radial_exponent_hint();
          else if constexpr (std::is_same_v<T, detail::PowNode>) return n.q * n.base->radial_exponent_hint();
          else return 0.0;
        },
        *node_);
  }

  /// Evaluates at an interior point; `defect` must equal 1 - |z|^2 and is
  /// used instead of recomputing it (samplers know it to full precision).
  double operator()(const Point& z, double defect) const;

  double operator()(const Point& z) const { return (*this)(z, 1.0 - z.norm_sq()); }

 private:
  explicit Weight(detail::WeightNode node) : node_(std::make_shared<const detail::WeightNode>(std::move(node))) {}
  std::shared_ptr<const detail::WeightNode> node_;
};

/// 1 - |z| from 1 - |z|^2 without cancellation.
inline double one_minus_modulus(double defect) { return defect / (1.0 + std::sqrt(1.0 - defect)); }

/// (1 - |z|^2)^{-n} ∫_{I_z} w dσ for the induced family.
inline double induced_value(const detail::InducedNode& node, const Point& z, double defect) {
  const std::size_t n = z.dim();
  const double r = z.norm();
  const double scale = std::pow(defect, -static_cast<double>(n));
  if (r == 0.0) {
    // I_0 is the whole sphere.
    if (node.boundary.kind == BoundaryWeight::Kind::Constant) return node.boundary.value;
    const SamplerConfig cfg{derive_seed(node.inner_seed, hash_point(z)), node.inner_samples, 0.0};
    return mc_integrate(Sphere{n}, [&](const Point& p) { return node.boundary(p); }, cfg).value;
  }
  const double radius = node.aperture * defect;
  const Frame frame = Frame::aligned_with(z);
  const CapSampler cap(frame, radius);
  const auto mom = accumulate<1>(derive_seed(node.inner_seed, hash_point(z)), hash_name("induced"),
                                 node.inner_samples, [&](CounterRng& rng, auto& out) {
                                   auto [p, wt] = cap.draw(rng);
                                   if (wt != 0.0) out[0] = wt * node.boundary(p);
                                 });
  return scale * mom.mean[0];
}

/// R_ε w(z): self-normalized average over U(z, ε(1 - |z|^2)). Draws continue
/// until `inner_samples` proposals land in the ball (at most 1000x as many
/// attempts), so small balls with low acceptance still get a full budget.
inline double regularized_value(const detail::RegularizedNode& node, const Point& z, double defect) {
  const double radius = std::min(2.0, node.eps * defect);
  const Region region = PseudoBall::make(z, radius);
  const RegionSampler sampler(region);
  const Weight& base = *node.base;
  const std::uint64_t seed = derive_seed(node.inner_seed, hash_point(z));
  const std::uint64_t stream = hash_name("regularized");
  const std::uint64_t max_attempts = 1000 * node.inner_samples;
  double num = 0.0, den = 0.0;
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < max_attempts && hits < node.inner_samples; ++i) {
    CounterRng rng(seed, stream, i);
    const BallSample s = sampler.draw(rng);
    if (s.weight == 0.0) continue;
    num += s.weight * base(s.point, s.defect);
    den += s.weight;
    ++hits;
  }
  if (den == 0.0) throw DegenerateRegionError("regularized weight: no inner sample hit U_eps(z)");
  return num / den;
}

inline double Weight::operator()(const Point& z, double defect) const {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, detail::LiftedNode>) {
          // z is a point of the sphere (or closed ball) of C^{n+1}.
          if (z.dim() < 2) throw InputError("lifted weight: evaluation point must have dimension n + 1 >= 2");
          Point base(z.dim() - 1);
          for (std::size_t i = 0; i + 1 < z.dim(); ++i) base[i] = z[i];
          const cplx last = z[z.dim() - 1];
          const double d = std::norm(last) + defect;  // 1 - |z'|^2 = |z_{n+1}|^2 + (1 - |z|^2)
          return (*n.base)(base, d);
        } else {
          if (!(defect > 0.0)) throw DomainError("weight evaluation requires |z| < 1");
          if constexpr (std::is_same_v<T, detail::ConstantNode>) return n.c;
          else if constexpr (std::is_same_v<T, detail::PowerNode>) return std::pow(one_minus_modulus(defect), n.alpha);
          else if constexpr (std::is_same_v<T, detail::PhiNode>) return n.phi(one_minus_modulus(defect));
          else if constexpr (std::is_same_v<T, detail::InducedNode>) return induced_value(n, z, defect);
          else if constexpr (std::is_same_v<T, detail::RegularizedNode>) return regularized_value(n, z, defect);
          else if constexpr (std::is_same_v<T, detail::ProductNode>) return (*n.a)(z, defect) * (*n.b)(z, defect);
          else return std::pow((*n.base)(z, defect), n.q);
        }
      },
      *node_);
}

inline double eval_weight(const Weight& w, const Point& z) { return w(z); }

inline Weight regularize(const Weight& w, double eps, std::uint64_t inner_samples = kDefaultInnerSamples,
                         std::uint64_t inner_seed = 0) {
  return Weight::regularized(w, eps, inner_samples, inner_seed);
}

}  // namespace besov
