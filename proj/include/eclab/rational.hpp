#pragma once

// Exact rational arithmetic used by every counting and marginal path.
// Floating point enters only at the spectral boundary (see linalg.hpp).

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace eclab {

using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

// Canonical "num/den" form, denominator always explicit and positive.
inline std::string rat_to_string(const Rat& r) {
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline Rat rat_from_string(const std::string& s) {
    Rat r;
    auto slash = s.find('/');
    if (slash == std::string::npos) {
        if (r.get_num().set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
        return r;
    }
    if (r.get_num().set_str(s.substr(0, slash), 10) != 0 ||
        r.get_den().set_str(s.substr(slash + 1), 10) != 0 || r.get_den() == 0)
        throw std::invalid_argument("bad rational: " + s);
    r.canonicalize();
    return r;
}

inline double to_double(const Rat& r) { return r.get_d(); }
inline double to_double(double x) { return x; }

// Scalar shims so templated code runs over both Rat and double.
inline Rat scalar_zero(const Rat*) { return Rat(0); }
inline double scalar_zero(const double*) { return 0.0; }

} // namespace eclab
