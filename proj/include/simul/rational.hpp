#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace simul {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Int int_pow(Int base, unsigned long long e) {
    Int r = 1;
    while (e) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

inline Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

inline std::string rat_str(const Rat& x) {
    return boost::multiprecision::numerator(x).str() +
           (boost::multiprecision::denominator(x) == 1
                ? std::string{}
                : "/" + boost::multiprecision::denominator(x).str());
}

}  // namespace simul
