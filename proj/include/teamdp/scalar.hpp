#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace teamdp {

/// Exact rational scalar used for golden values and the --rational solver mode.
using Rational = boost::multiprecision::cpp_rational;

/// Thrown when an enumeration would exceed its configured cap.
class SizeGuardError : public std::runtime_error {
 public:
  SizeGuardError(std::string what_counted, std::uint64_t count, std::uint64_t cap)
      : std::runtime_error("instance beyond desk scale: " + what_counted + " count " +
                           (count == std::numeric_limits<std::uint64_t>::max()
                                ? std::string(">2^64")
                                : std::to_string(count)) +
                           " exceeds cap " + std::to_string(cap)),
        counted_(std::move(what_counted)),
        count_(count),
        cap_(cap) {}

  const std::string& counted() const { return counted_; }
  std::uint64_t count() const { return count_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::string counted_;
  std::uint64_t count_;
  std::uint64_t cap_;
};

inline constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

/// a*b, saturating at 2^64-1.
inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return (a > kSaturated - b) ? kSaturated : a + b;
}

/// base^exp, saturating.
inline std::uint64_t sat_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t k = 0; k < exp; ++k) {
    r = sat_mul(r, base);
    if (r == kSaturated) break;
  }
  return base == 0 && exp == 0 ? 1 : r;
}

inline void guard(const std::string& what, std::uint64_t count, std::uint64_t cap) {
  if (count > cap) throw SizeGuardError(what, count, cap);
}

namespace detail {

inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string& v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
  };
  trim(s);
  if (s.empty()) throw std::invalid_argument("empty number");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    boost::multiprecision::cpp_int num(s.substr(0, slash));
    boost::multiprecision::cpp_int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    return Rational(num, den);
  }
  bool negative = false;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }
  boost::multiprecision::cpp_int digits = 0;
  long exponent = 0;
  bool any_digit = false;
  bool after_point = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      if (after_point) --exponent;
      any_digit = true;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else if (c == 'e' || c == 'E') {
      long e = 0;
      auto [ptr, ec] = std::from_chars(s.data() + pos + 1 + (s[pos + 1] == '+' ? 1 : 0),
                                       s.data() + s.size(), e);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("bad exponent in '" + s + "'");
      exponent += e;
      pos = s.size();
      break;
    } else {
      throw std::invalid_argument("not a number: '" + s + "'");
    }
  }
  if (!any_digit) throw std::invalid_argument("not a number: '" + s + "'");
  Rational r(digits);
  boost::multiprecision::cpp_int ten_pow = 1;
  for (long k = 0; k < (exponent < 0 ? -exponent : exponent); ++k) ten_pow *= 10;
  if (exponent < 0)
    r /= Rational(ten_pow);
  else
    r *= Rational(ten_pow);
  return negative ? Rational(-r) : r;
}

inline std::string rational_to_string(const Rational& r) {
  using boost::multiprecision::cpp_int;
  cpp_int num = boost::multiprecision::numerator(r);
  cpp_int den = boost::multiprecision::denominator(r);
  // Finite decimal iff den = 2^a 5^b.
  cpp_int d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return num.str() + "/" + den.str();
  int places = std::max(twos, fives);
  if (places == 0) return num.str();
  cpp_int scale = 1;
  for (int k = 0; k < places; ++k) scale *= 10;
  cpp_int scaled = num * (scale / den);
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.str();
  if (static_cast<int>(digits.size()) <= places)
    digits = std::string(places - digits.size() + 1, '0') + digits;
  std::string out = digits.substr(0, digits.size() - places) + "." +
                    digits.substr(digits.size() - places);
  return negative ? "-" + out : out;
}

struct VectorHash {
  template <class T>
  std::size_t operator()(const std::vector<T>& v) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : v) {
      h ^= std::hash<T>{}(e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace detail

/// Per-scalar policy: how to parse, print, compare and key probabilities.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  /// Belief entries are identified after rounding to this grid.
  static constexpr double key_resolution = 1e-9;
  /// Argmax ties: a later candidate must beat the incumbent by more than this.
  static constexpr double tie_tolerance = 1e-12;
  using key_type = std::int64_t;
  template <class V>
  using key_map = std::unordered_map<std::vector<key_type>, V, detail::VectorHash>;

  static key_type key(double p) { return std::llround(p / key_resolution); }
  static double ratio(long num, long den) { return static_cast<double>(num) / static_cast<double>(den); }
  static double parse(std::string_view text) {
    return static_cast<double>(detail::parse_rational(text));
  }
  static std::string to_string(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
  }
  static double to_double(double v) { return v; }
  static bool better(double candidate, double incumbent) {
    return candidate > incumbent + tie_tolerance;
  }
};

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  using key_type = Rational;
  template <class V>
  using key_map = std::map<std::vector<key_type>, V>;

  static key_type key(const Rational& p) { return p; }
  static Rational ratio(long num, long den) { return Rational(num, den); }
  static Rational parse(std::string_view text) { return detail::parse_rational(text); }
  static std::string to_string(const Rational& v) { return detail::rational_to_string(v); }
  static double to_double(const Rational& v) { return static_cast<double>(v); }
  static bool better(const Rational& candidate, const Rational& incumbent) {
    return candidate > incumbent;
  }
};

template <class To, class From>
To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<To, double>) {
    return static_cast<double>(v);
  } else {
    // double -> rational goes through the shortest round-trip decimal.
    return scalar_traits<To>::parse(scalar_traits<From>::to_string(v));
  }
}

/// |a - b| as double.
template <class S>
double abs_diff(const S& a, const S& b) {
  return std::abs(scalar_traits<S>::to_double(a) - scalar_traits<S>::to_double(b));
}

}  // namespace teamdp
