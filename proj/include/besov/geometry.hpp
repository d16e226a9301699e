#pragma once

// Exact geometry of the unit ball of C^n: the pseudodistance rho, Möbius
// automorphisms, the lift to the sphere of C^{n+1}, and the regions (rho-balls,
// polydisks, tents, boundary caps) everything else integrates over.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <variant>

#include "besov/core.hpp"

namespace besov {

/// rho(z, w) = |1 - z w̄| - sqrt(1 - |z|^2) sqrt(1 - |w|^2) on the closed ball.
///
/// Evaluated through the algebraically identical quotient
///   (|z - w|^2 + |z w̄|^2 - |z|^2 |w|^2) / (|1 - z w̄| + sqrt(1-|z|^2) sqrt(1-|w|^2))
/// which has no cancellation when z and w are close. Symmetric bit-for-bit.
inline double rho(const Point& z, const Point& w) {
  require_same_dim(z, w, "rho");
  const cplx a = inner(z, w);
  const double zz = z.norm_sq(), ww = w.norm_sq();
  const double one_minus = std::abs(cplx(1.0 - a.real(), -a.imag()));
  const double tails = std::sqrt(std::max(0.0, 1.0 - zz)) * std::sqrt(std::max(0.0, 1.0 - ww));
  const double denom = one_minus + tails;
  if (denom == 0.0) return 0.0;
  const double num = dist_sq(z, w) + (a.real() * a.real() + a.imag() * a.imag()) - zz * ww;
  return std::max(0.0, num / denom);
}

/// φ_a(z) = (a - P_a z - sqrt(1-|a|^2) Q_a z) / (1 - z ā), the involutive
/// automorphism exchanging a and 0. Requires |a| < 1.
inline Point mobius(const Point& a, const Point& z) {
  require_same_dim(a, z, "mobius");
  const double aa = a.norm_sq();
  if (!(aa < 1.0)) throw DomainError("mobius: |a| < 1 required");
  const cplx za = inner(z, a);
  const double s = std::sqrt(1.0 - aa);
  Point out(a.dim());
  const cplx denom = 1.0 - za;
  if (aa == 0.0) {
    for (std::size_t i = 0; i < z.dim(); ++i) out[i] = -z[i];
    return out;
  }
  const cplx coef = za / aa;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    const cplx pz = coef * a[i];
    const cplx qz = z[i] - pz;
    out[i] = (a[i] - pz - s * qz) / denom;
  }
  return out;
}

/// Real Jacobian of φ_a at x with respect to volume: ((1-|a|^2)/|1 - x ā|^2)^{n+1}.
inline double mobius_jacobian(const Point& a, const Point& x) {
  const double num = 1.0 - a.norm_sq();
  const double d = std::norm(1.0 - inner(x, a));
  return std::pow(num / d, static_cast<double>(a.dim() + 1));
}

/// (z, sqrt(1-|z|^2) e^{iθ}) on the unit sphere of C^{n+1}.
inline SpherePoint lift(const Point& z, double theta) {
  const double zz = z.norm_sq();
  if (zz > 1.0 + kSphereTolerance) throw DomainError("lift: |z| <= 1 required");
  if (z.dim() + 1 > kMaxDim) throw InputError("lift: dimension too large");
  Point out(z.dim() + 1);
  for (std::size_t i = 0; i < z.dim(); ++i) out[i] = z[i];
  out[z.dim()] = std::polar(std::sqrt(std::max(0.0, 1.0 - zz)), theta);
  return SpherePoint(out);
}

/// Drops the last coordinate.
inline Point project(const SpherePoint& zeta) {
  if (zeta.dim() < 2) throw InputError("project: sphere point must have dimension >= 2");
  Point out(zeta.dim() - 1);
  for (std::size_t i = 0; i + 1 < zeta.dim(); ++i) out[i] = zeta[i];
  return out;
}

/// Orthonormal basis of C^n whose first vector is a given unit direction.
class Frame {
 public:
  /// Identity frame.
  explicit Frame(std::size_t n) : n_(n) {
    for (std::size_t i = 0; i < n; ++i) b_[i] = Point::axis(n, 1.0, i);
  }

  /// Frame whose first vector is u/|u|; the identity when u = 0.
  static Frame aligned_with(const Point& u) {
    const std::size_t n = u.dim();
    Frame f(n);
    const double r = u.norm();
    if (r == 0.0) return f;
    f.b_[0] = (1.0 / r) * u;
    std::size_t filled = 1;
    for (std::size_t j = 0; j < n && filled < n; ++j) {
      Point v = Point::axis(n, 1.0, j);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < filled; ++k) v -= inner(v, f.b_[k]) * f.b_[k];
      }
      const double len = v.norm();
      if (len < 1e-6) continue;
      f.b_[filled++] = (1.0 / len) * v;
    }
    return f;
  }

  std::size_t dim() const { return n_; }
  const Point& operator[](std::size_t i) const { return b_[i]; }

  /// Coordinates of p in this frame: ξ_i = <p, b_i>.
  Point to_frame(const Point& p) const {
    Point xi(n_);
    for (std::size_t i = 0; i < n_; ++i) xi[i] = inner(p, b_[i]);
    return xi;
  }

  Point from_frame(const Point& xi) const {
    Point p(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx c = xi[i];
      for (std::size_t j = 0; j < n_; ++j) p[j] += c * b_[i][j];
    }
    return p;
  }

 private:
  std::array<Point, kMaxDim> b_{};
  std::size_t n_;
};

inline void check_radius(double r, const char* what) {
  if (!(r > 0.0 && r <= 2.0)) throw InputError(std::string(what) + ": radius must lie in (0, 2]");
}

/// U(z, R) = {w : rho(z, w) < R}; the center may lie on the closed ball.
struct PseudoBall {
  Point center;
  double radius;

  static PseudoBall make(const Point& center, double radius) {
    check_radius(radius, "PseudoBall");
    if (center.norm_sq() > 1.0 + kSphereTolerance) throw DomainError("PseudoBall: center outside closed ball");
    return {center, radius};
  }
};

/// P(z, R): size R + sqrt(R(1-|z|^2)) in the complex normal direction and
/// sqrt(R) in each complex-tangential direction of the frame.
struct Polydisk {
  Point center;
  double radius;
  Frame frame;

  static Polydisk make(const Point& center, double radius) {
    check_radius(radius, "Polydisk");
    if (center.norm_sq() > 1.0 + kSphereTolerance) throw DomainError("Polydisk: center outside closed ball");
    return {center, radius, Frame::aligned_with(center)};
  }

  double normal_radius() const {
    return radius + std::sqrt(radius) * std::sqrt(defect(center));
  }
  double tangential_radius() const { return std::sqrt(radius); }
};

/// T(ζ, R) = {z : |1 - z ζ̄| < R} for ζ on the unit sphere.
struct Tent {
  Point zeta;
  double radius;

  static Tent make(const Point& zeta, double radius) {
    check_radius(radius, "Tent");
    SpherePoint check(zeta);
    (void)check;
    return {zeta, radius};
  }
};

/// B(ζ, r) = {η on the sphere : |1 - η ζ̄| < r}.
struct BoundaryCap {
  Point center;
  double radius;

  static BoundaryCap make(const Point& center, double radius) {
    check_radius(radius, "BoundaryCap");
    SpherePoint check(center);
    (void)check;
    return {center, radius};
  }
};

using Region = std::variant<PseudoBall, Polydisk, Tent, BoundaryCap>;

inline const Point& region_anchor(const Region& r) {
  return std::visit(
      [](const auto& x) -> const Point& {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Tent>) return x.zeta;
        else return x.center;
      },
      r);
}

inline double region_radius(const Region& r) {
  return std::visit([](const auto& x) { return x.radius; }, r);
}

inline std::string region_kind(const Region& r) {
  switch (r.index()) {
    case 0: return "pseudo_ball";
    case 1: return "polydisk";
    case 2: return "tent";
    default: return "boundary_cap";
  }
}

/// Strict membership in every case: boundary points of a region are outside.
inline bool region_contains(const Region& region, const Point& p) {
  require_same_dim(region_anchor(region), p, "region_contains");
  return std::visit(
      [&](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PseudoBall>) {
          return rho(r.center, p) < r.radius;
        } else if constexpr (std::is_same_v<T, Tent>) {
          const cplx a = inner(p, r.zeta);
          return std::abs(cplx(1.0 - a.real(), -a.imag())) < r.radius;
        } else if constexpr (std::is_same_v<T, BoundaryCap>) {
          const cplx a = inner(p, r.center);
          return std::abs(cplx(1.0 - a.real(), -a.imag())) < r.radius;
        } else {
          const Point xi = r.frame.to_frame(p);
          const double r0 = r.center.norm();
          if (std::abs(cplx(r0, 0.0) - xi[0]) >= r.normal_radius()) return false;
          const double t = r.tangential_radius();
          for (std::size_t i = 1; i < xi.dim(); ++i)
            if (std::abs(xi[i]) >= t) return false;
          return true;
        }
      },
      region);
}

/// Whether the closure of U(z, R) meets the sphere: rho(z, z/|z|) = 1 - |z| <= R.
inline bool touches_boundary(const Point& center, double radius) {
  return 1.0 - center.norm() <= radius;
}

/// Model volume R^n (R + 1 - |z|^2) of U(z, R), up to absolute constants.
inline double pseudo_ball_volume_model(const Point& z, double radius) {
  return std::pow(radius, static_cast<double>(z.dim())) * (radius + defect(z));
}

/// Exact normalized volume of U(0, R): (2R - R^2)^n for R <= 1.
inline double pseudo_ball_volume_at_origin(std::size_t n, double radius) {
  const double r2 = radius >= 1.0 ? 1.0 : 2.0 * radius - radius * radius;
  return std::pow(r2, static_cast<double>(n));
}

/// A polar sector that contains a region: directions in a boundary cap of the
/// frame's first vector, squared radii t = |y|^2 with 1 - t in [s_lo, s_hi].
/// cap_radius >= 2 means every direction.
struct PolarEnclosure {
  Frame frame;
  double cap_radius;
  double s_lo;
  double s_hi;
};

namespace detail {

inline PolarEnclosure sector_from_box(const Point& center, double normal, double tangential_sq) {
  const double r0 = center.norm();
  const double lo = std::max(0.0, r0 - normal);
  const double t_lo = lo * lo;
  const double t_hi = std::min(1.0, (r0 + normal) * (r0 + normal) + tangential_sq);
  double cap = 2.0;
  if (lo > 0.0) {
    const double phi = std::asin(std::min(1.0, normal / r0));
    const double c1 = 2.0 * std::sin(0.5 * phi);
    const double c2 = 1.0 - lo / std::sqrt(lo * lo + tangential_sq);
    cap = std::min(2.0, c1 + c2 + 1e-12);
  }
  return {Frame::aligned_with(center), cap, 1.0 - t_hi, 1.0 - t_lo};
}

}  // namespace detail

/// Rigorous polar enclosure of a ball region.
///
/// For U(z, R), with h = 1 - |z|^2 and coordinates w_1 along z/|z|:
///   |w_1 - |z|| < R + sqrt(R^2 + 2Rh),
///   |w'|^2 < min(2R(1 + a/h), 2(h + a))    (a the normal bound).
/// For T(ζ, R): |y| > 1 - R and the direction lies in the cap of radius 2R.
inline PolarEnclosure polar_enclosure(const Region& region) {
  return std::visit(
      [](const auto& r) -> PolarEnclosure {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PseudoBall>) {
          const double h = defect(r.center);
          const double R = r.radius;
          const double a = R + std::sqrt(R * R + 2.0 * R * h);
          double b2 = 2.0 * (h + a);
          if (h > 0.0) b2 = std::min(b2, 2.0 * R * (1.0 + a / h));
          b2 = std::min(b2, 1.0);
          return detail::sector_from_box(r.center, a, b2);
        } else if constexpr (std::is_same_v<T, Polydisk>) {
          const double b2 = static_cast<double>(r.center.dim() - 1) * r.radius;
          return detail::sector_from_box(r.center, r.normal_radius(), b2);
        } else if constexpr (std::is_same_v<T, Tent>) {
          const double lo = std::max(0.0, 1.0 - r.radius);
          return {Frame::aligned_with(r.zeta), std::min(2.0, 2.0 * r.radius), 0.0, 1.0 - lo * lo};
        } else {
          throw InputError("polar_enclosure: boundary caps live on the sphere, not in the ball");
        }
      },
      region);
}

}  // namespace besov
