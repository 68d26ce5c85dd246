#pragma once

#include <bit>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace osc {

inline double ipow(double x, int k) noexcept {
  double r = 1.0;
  while (k > 0) {
    if (k & 1) r *= x;
    x *= x;
    k >>= 1;
  }
  return r;
}

/// Compensated summation that also handles addends larger than the running sum.
class NeumaierSum {
 public:
  void add(double v) noexcept {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Branch-free sine and cosine of n arguments, written so the loop vectorizes.
/// Accurate to a few ulp for |x| below about 1e8.
inline void sincos_block(const double* x, double* s, double* c, std::size_t n) noexcept {
  constexpr double two_over_pi = 0.63661977236758134308;
  constexpr double p1 = 1.5707963267948966;
  constexpr double p2 = 6.123233995736766e-17;
  for (std::size_t i = 0; i < n; ++i) {
    double k = std::nearbyint(x[i] * two_over_pi);
    double r = (x[i] - k * p1) - k * p2;
    double r2 = r * r;
    double sp = r * (1.0 + r2 * (-1.0 / 6 + r2 * (1.0 / 120 + r2 * (-1.0 / 5040 + r2 * (1.0 / 362880 +
                 r2 * (-1.0 / 39916800 + r2 * (1.0 / 6227020800 + r2 * (-1.0 / 1307674368000))))))));
    double cp = 1.0 + r2 * (-0.5 + r2 * (1.0 / 24 + r2 * (-1.0 / 720 + r2 * (1.0 / 40320 +
                r2 * (-1.0 / 3628800 + r2 * (1.0 / 479001600 + r2 * (-1.0 / 87178291200 +
                r2 * (1.0 / 20922789888000))))))));
    auto q = static_cast<std::int64_t>(k) & 3;
    s[i] = q == 0 ? sp : q == 1 ? cp : q == 2 ? -sp : -cp;
    c[i] = q == 0 ? cp : q == 1 ? -sp : q == 2 ? -cp : sp;
  }
}

/// Vectorizable exp of n arguments; inputs are clamped to [-708, 709].
inline void exp_block(const double* x, double* y, std::size_t n) noexcept {
  constexpr double log2e = 1.4426950408889634074;
  constexpr double ln2_hi = 0.693147180369123816490;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::min(std::max(x[i], -708.0), 709.0);
    double k = std::nearbyint(v * log2e);
    double r = (v - k * ln2_hi) - k * ln2_lo;
    double p = 1.0 + r * (1.0 + r * (1.0 / 2 + r * (1.0 / 6 + r * (1.0 / 24 + r * (1.0 / 120 + r * (1.0 / 720 +
               r * (1.0 / 5040 + r * (1.0 / 40320 + r * (1.0 / 362880 + r * (1.0 / 3628800 +
               r * (1.0 / 39916800 + r * (1.0 / 479001600 + r * (1.0 / 6227020800.0)))))))))))));
    auto bits = static_cast<std::int64_t>(k + 1023.0) << 52;
    y[i] = p * std::bit_cast<double>(bits);
  }
}

std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double a, double b, std::size_t n);

}  // namespace osc
