#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "rulerepair/error.hpp"

namespace rulerepair {

// Exact non-negative-denominator fraction. Thresholds and impurity scores use
// it so that comparisons at equality boundaries (e.g. 3 * 0.5 = 1.5) are exact.
class Ratio {
 public:
  constexpr Ratio() = default;
  constexpr Ratio(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
    if (den_ == 0) throw Error(ErrorKind::kInvalidArgument, "zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Simplest fraction within `tolerance` of `x` (continued-fraction walk), so
  // 0.7 -> 7/10 and 1.0/3 -> 1/3.
  static Ratio from_double(double x, double tolerance = 1e-9,
                           std::int64_t max_den = 1'000'000) {
    if (!std::isfinite(x)) throw Error(ErrorKind::kInvalidArgument, "non-finite ratio");
    const bool negative = x < 0;
    double rest = std::fabs(x);
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    const double target = std::fabs(x);
    for (int iter = 0; iter < 64; ++iter) {
      const double a_real = std::floor(rest);
      const auto a = static_cast<std::int64_t>(a_real);
      const std::int64_t h2 = a * h1 + h0;
      const std::int64_t k2 = a * k1 + k0;
      if (k2 > max_den) break;
      h0 = h1;
      h1 = h2;
      k0 = k1;
      k1 = k2;
      if (std::fabs(static_cast<double>(h1) / static_cast<double>(k1) - target) <= tolerance) break;
      const double frac = rest - a_real;
      if (frac <= 0) break;
      rest = 1.0 / frac;
    }
    if (k1 == 0) throw Error(ErrorKind::kInvalidArgument, "cannot approximate " + std::to_string(x));
    return Ratio(negative ? -h1 : h1, k1);
  }

  // Accepts "p/q" or a decimal literal.
  static Ratio parse(const std::string& text) {
    const auto slash = text.find('/');
    try {
      if (slash != std::string::npos) {
        return Ratio(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
      }
      std::size_t used = 0;
      const double value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return from_double(value);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, "not a ratio: '" + text + "'");
    }
  }

  friend constexpr bool operator==(const Ratio& a, const Ratio& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend constexpr std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend std::ostream& operator<<(std::ostream& os, const Ratio& r) {
    os << r.num_;
    if (r.den_ != 1) os << '/' << r.den_;
    return os;
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace rulerepair
