#pragma once

#include <cmath>

namespace rsgf::normal {

inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297;  // log sqrt(2 pi)

inline double pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

inline double cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

/// log of the upper tail P(Z >= z); asymptotic expansion once erfc underflows.
inline double log_sf(double z) {
  if (z < 20.0) {
    return std::log(0.5 * std::erfc(z * 0.7071067811865475244));
  }
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) + std::log(series);
}

/// log P(a <= Z <= b) for a < b, stable in both tails.
inline double log_cdf_interval(double a, double b) {
  if (a >= 0.0) {
    const double la = log_sf(a);
    const double lb = log_sf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) return log_cdf_interval(-b, -a);
  const double mass = cdf(b) - cdf(a);
  return std::log(mass);
}

/// Mean of Z truncated to [a, b]: (pdf(a) - pdf(b)) / P(a <= Z <= b).
inline double truncated_mean(double a, double b) {
  const double log_mass = log_cdf_interval(a, b);
  const double la = -0.5 * a * a - kLogSqrt2Pi;
  const double lb = -0.5 * b * b - kLogSqrt2Pi;
  // pdf difference in a cancellation-safe form.
  if (la >= lb) return std::exp(la - log_mass) * (1.0 - std::exp(lb - la));
  return -std::exp(lb - log_mass) * (1.0 - std::exp(la - lb));
}

}  // namespace rsgf::normal
