#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "magpi/common.hpp"

namespace magpi {

// Closed-form algebra for iterated simplex integrals of pure phase
// products.  Functions are represented as finite sums of terms
//     c * s^p * e^{E s}
// which the map  F |-> int_0^u e^{theta s} F(s) ds  preserves.

struct ExpoTerm {
  cplx c{};
  int p = 0;
  cplx E{};
};

class Exponomial {
 public:
  static Exponomial one() {
    Exponomial f;
    f.terms_.push_back({1.0, 0, 0.0});
    return f;
  }

  const std::vector<ExpoTerm>& terms() const { return terms_; }

  cplx eval(double s) const {
    cplx acc = 0.0;
    for (const auto& t : terms_)
      acc += t.c * std::pow(s, t.p) * std::exp(t.E * s);
    return acc;
  }

  // Returns u -> int_0^u e^{theta s} F(s) ds.  `horizon` is the largest u
  // the result will be evaluated at; it selects, per term, between the
  // series and the integration-by-parts closed form.
  Exponomial integrate_with_phase(cplx theta, double horizon) const {
    Exponomial out;
    for (const auto& t : terms_) {
      const cplx a = t.E + theta;
      // The by-parts antiderivative loses roughly p! (p+1)! / |a u|^{p+1}
      // digits to cancellation as |a u| shrinks, so small |a| horizons go
      // through the (always stable) power series instead.  The crossover
      // must grow with p; max(4, 2p) keeps both branches at full precision.
      if (std::abs(a) * horizon <= std::max(4.0, 2.0 * t.p)) {
        append_series(out, t.c, t.p, a, horizon);
      } else {
        append_by_parts(out, t.c, t.p, a);
      }
    }
    out.merge();
    return out;
  }

 private:
  // int_0^u c s^p e^{a s} ds = c sum_m a^m u^{p+m+1} / (m! (p+m+1)),
  // truncated at relative 1e-18 of the largest retained coefficient*u^q.
  static void append_series(Exponomial& out, cplx c, int p, cplx a,
                            double horizon) {
    cplx coeff = c;  // c a^m / m!
    double largest = 0.0;
    for (int m = 0; m <= 120; ++m) {
      const cplx term = coeff / static_cast<double>(p + m + 1);
      out.terms_.push_back({term, p + m + 1, 0.0});
      const double mag = std::abs(term) * std::pow(horizon, p + m + 1);
      largest = std::max(largest, mag);
      if (m > 0 && mag < 1e-18 * largest) break;
      coeff *= a / static_cast<double>(m + 1);
    }
  }

  // int_0^u c s^p e^{a s} ds =
  //   e^{a u} sum_{m<=p} c (-1)^{p-m} (p!/m!) u^m / a^{p-m+1}
  //   - c (-1)^p p! / a^{p+1}.
  static void append_by_parts(Exponomial& out, cplx c, int p, cplx a) {
    double fall = 1.0;  // p!/m! at m = p, descending
    cplx apow = a;      // a^{p-m+1}
    double sign = 1.0;
    for (int m = p; m >= 0; --m) {
      out.terms_.push_back({c * sign * fall / apow, m, a});
      fall *= m;  // p!/(m-1)! after the step
      apow *= a;
      sign = -sign;
    }
    const double psign = (p % 2 == 0) ? 1.0 : -1.0;
    double pfact = 1.0;
    for (int q = 2; q <= p; ++q) pfact *= q;
    out.terms_.push_back({-c * psign * pfact / apow * a, 0, 0.0});
  }

  void merge() {
    std::vector<ExpoTerm> merged;
    for (const auto& t : terms_) {
      bool found = false;
      for (auto& m : merged) {
        if (m.p == t.p && m.E == t.E) {
          m.c += t.c;
          found = true;
          break;
        }
      }
      if (!found) merged.push_back(t);
    }
    terms_ = std::move(merged);
  }

  std::vector<ExpoTerm> terms_;
};

// int over the ordered simplex 0 <= s_1 <= ... <= s_n <= t of
// prod_j e^{theta_j s_j} ds.  Empty theta list gives 1.
inline cplx simplex_phase_integral(const std::vector<cplx>& thetas, double t) {
  Exponomial f = Exponomial::one();
  for (const cplx& th : thetas) f = f.integrate_with_phase(th, t);
  return f.eval(t);
}

}  // namespace magpi
