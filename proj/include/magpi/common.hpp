#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace magpi {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Thrown when user-supplied configuration cannot be parsed or is
// internally inconsistent.  The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a request is well-formed but outside the validity domain of
// an algorithm (e.g. evolution time past a convergence threshold, or a
// potential that a solver cannot represent).  The CLI maps this to exit
// code 3.
struct precondition_error : std::runtime_error {
  explicit precondition_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

// ---- small fixed-size vector helpers -------------------------------------

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Bilinear complex pairing (no conjugation); used for k.z with analytically
// continued arguments z in C^3.
inline cplx dot(const Vec3& a, const CVec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline cplx dot(const CVec3& a, const Vec3& b) { return dot(b, a); }

inline cplx dot(const CVec3& a, const CVec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm2(const Vec3& a) { return dot(a, a); }

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

inline CVec3 operator*(cplx s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}

inline CVec3 operator+(const CVec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1],
          a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

inline double norm_inf(const Vec3& a) {
  return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])});
}

// Principal square root of i*h: sqrt(h) * exp(i pi/4).  This is the path
// scaling factor that turns Brownian samples into Fresnel-weighted ones.
inline cplx sqrt_i_hbar(double hbar) {
  const double r = std::sqrt(hbar) * std::sqrt(0.5);
  return cplx(r, r);
}

// Tolerance used when deciding that two frequency/packet atoms coincide
// and should be merged.
inline constexpr double atom_merge_tol = 1e-12;

// Shared physical/evaluation parameters of a run.
struct PhysicalParams {
  double hbar = 1.0;
  double t = 1.0;
  double lambda = 1.0;
};

// Composite Simpson rule with n (even) panels; T may be double, cplx, Vec3.
template <class T, class Fn>
T composite_simpson(Fn&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  T acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    const T v = f(a + i * h);
    acc = acc + ((i % 2 == 1) ? 4.0 : 2.0) * v;
  }
  return (h / 3.0) * acc;
}

}  // namespace magpi
