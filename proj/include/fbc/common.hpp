#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace fbc {

using Q = mpq_class;
using Z = mpz_class;

// Malformed input (CLI exit code 64).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computed object failed one of its structural checks (exit code 65).
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a/b in lowest terms; the two-argument mpq_class constructor does not reduce.
inline Q frac(long a, long b) {
    Q q(a, b);
    q.canonicalize();
    return q;
}

inline std::string qstr(const Q& q) { return q.get_str(); }

inline Q floor_q(const Q& q) {
    Z r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Q(r);
}

inline Q ceil_q(const Q& q) {
    Z r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Q(r);
}

inline bool is_integer(const Q& q) { return q.get_den() == 1; }

}  // namespace fbc
