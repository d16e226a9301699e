#pragma once

// Core value types shared by every module: points of C^n, sphere points and
// the error hierarchy.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace besov {

using cplx = std::complex<double>;

/// Largest complex dimension a Point can hold. Sphere points of S^{n+1}
/// need one extra slot, so ball dimensions go up to kMaxDim - 1.
inline constexpr std::size_t kMaxDim = 8;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr const char* kToolkitVersion = "besov-toolkit 1.0.0";

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateRegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point of C^n stored inline (no heap allocation).
class Point {
 public:
  Point() = default;

  explicit Point(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxDim) {
      throw InputError("Point dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
  }

  Point(std::initializer_list<cplx> coords) : Point(coords.size()) {
    std::size_t i = 0;
    for (const auto& c : coords) c_[i++] = c;
  }

  static Point from_span(std::span<const cplx> coords) {
    Point p(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) p.c_[i] = coords[i];
    return p;
  }

  /// Point (r, 0, ..., 0) of dimension n.
  static Point axis(std::size_t n, double r = 1.0, std::size_t index = 0) {
    Point p(n);
    p.c_.at(index) = r;
    return p;
  }

  std::size_t dim() const { return n_; }
  cplx& operator[](std::size_t i) { return c_[i]; }
  const cplx& operator[](std::size_t i) const { return c_[i]; }
  std::span<const cplx> coords() const { return {c_.data(), n_}; }

  double norm_sq() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += c_[i].real() * c_[i].real() + c_[i].imag() * c_[i].imag();
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }

  Point& operator+=(const Point& o) {
    for (std::size_t i = 0; i < n_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Point& operator-=(const Point& o) {
    for (std::size_t i = 0; i < n_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Point& operator*=(cplx s) {
    for (std::size_t i = 0; i < n_; ++i) c_[i] *= s;
    return *this;
  }

  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) { return a -= b; }
  friend Point operator*(cplx s, Point a) { return a *= s; }
  friend Point operator*(Point a, cplx s) { return a *= s; }

  friend bool operator==(const Point& a, const Point& b) {
    if (a.n_ != b.n_) return false;
    for (std::size_t i = 0; i < a.n_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

 private:
  std::array<cplx, kMaxDim> c_{};
  std::size_t n_ = 0;
};

inline void require_same_dim(const Point& a, const Point& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
}

/// The Hermitian pairing z w̄ = sum_i z_i conj(w_i).
///
/// Written out in real arithmetic so that inner(w, z) is bit-for-bit the
/// conjugate of inner(z, w).
inline cplx inner(const Point& z, const Point& w) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    const double a = z[i].real(), b = z[i].imag();
    const double c = w[i].real(), d = w[i].imag();
    re += a * c + b * d;
    im += b * c - a * d;
  }
  return {re, im};
}

/// |z - w|^2 without forming the difference point.
inline double dist_sq(const Point& z, const Point& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    const double dr = z[i].real() - w[i].real();
    const double di = z[i].imag() - w[i].imag();
    s += dr * dr + di * di;
  }
  return s;
}

/// 1 - |z|^2 clamped at zero (closed-ball points may round slightly outside).
inline double defect(const Point& z) { return std::max(0.0, 1.0 - z.norm_sq()); }

inline constexpr double kSphereTolerance = 1e-12;

/// A unit vector of C^m; |sum |ζ_i|^2 - 1| <= 1e-12 is enforced on construction.
class SpherePoint {
 public:
  explicit SpherePoint(const Point& p) : p_(p) {
    if (std::abs(p.norm_sq() - 1.0) > kSphereTolerance) {
      throw InputError("SpherePoint requires unit norm, got |p|^2 = " + std::to_string(p.norm_sq()));
    }
  }

  /// Normalizes a nonzero point onto the sphere.
  static SpherePoint normalized(Point p) {
    const double r = p.norm();
    if (!(r > 0.0)) throw InputError("cannot normalize the zero vector");
    p *= 1.0 / r;
    return SpherePoint(p);
  }

  const Point& point() const { return p_; }
  std::size_t dim() const { return p_.dim(); }
  const cplx& operator[](std::size_t i) const { return p_[i]; }

 private:
  Point p_;
};

}  // namespace besov
