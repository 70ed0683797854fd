#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace madprops {

using Vec = std::vector<double>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Error taxonomy. Parameter/config errors map to CLI exit code 2,
// everything else to 1.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedOperationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateWeightsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CostGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EffectiveSampleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2sq(const Vec& a) { return dot(a, a); }

inline double norm2(const Vec& a) { return std::sqrt(norm2sq(a)); }

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

// log(sum_j exp(x_j)); returns -inf for an all -inf (or empty) input.
inline double log_sum_exp(const Vec& x) {
  double m = kNegInf;
  for (double v : x) {
    if (std::isnan(v)) throw NumericError("log_sum_exp: NaN input");
    if (v > m) m = v;
  }
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace madprops
