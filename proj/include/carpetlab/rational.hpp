#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace carpetlab {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Exact: every finite double is a binary rational.
Rat rat_from_double(double x);

// Largest integer <= r.
Int rat_floor(const Rat& r);

// "num/den" (den omitted when 1).
std::string rat_to_string(const Rat& r);

// Accepts "num", "num/den", or a plain decimal like "0.25".
Rat parse_rat(const std::string& s);

// Fixed-point decimal expansion with `digits` fractional digits, truncated
// toward zero. Deterministic, used for SVG/CSV output.
std::string rat_to_decimal(const Rat& r, int digits);

inline Rat sqr(const Rat& r) { return r * r; }

}  // namespace carpetlab
