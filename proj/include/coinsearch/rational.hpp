// rational.hpp
// Exact rational arithmetic for mesh coordinates and protocol parameters.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace coinsearch {

// Arbitrary-precision rational, always stored in lowest terms with a
// positive denominator.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Serializes as "num/den" (den always printed, so round-trips are unambiguous).
std::string to_fraction_string(const Rational& r);

// Accepts "num/den", plain integers, and decimal strings such as "0.25"
// (converted exactly). Throws std::invalid_argument on anything else.
Rational parse_rational(const std::string& text);

} // namespace coinsearch
