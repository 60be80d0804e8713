#pragma once

// Exact rational arithmetic on 64-bit numerator/denominator pairs.
//
// Confidence levels, candidate effects and acceptance thresholds are all
// rationals with small denominators, and the accept/reject decision
// p_max >= alpha must never depend on floating-point parsing artifacts
// (e.g. 0.05 has no finite binary expansion).  Frac keeps those quantities
// exact, and compare_double_frac() compares an IEEE double against a
// rational without any rounding at all.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace randci {

/// Reduced rational number: den > 0, gcd(|num|, den) == 1.
struct Frac {
    long long num = 0;
    long long den = 1;
};

namespace detail {

inline __int128 abs128(__int128 v) { return v < 0 ? -v : v; }

inline __int128 gcd128(__int128 a, __int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline long long narrow_ll(__int128 v, const char* what) {
    if (v > std::numeric_limits<long long>::max() ||
        v < std::numeric_limits<long long>::min()) {
        throw std::overflow_error(std::string("fraction overflow in ") + what);
    }
    return static_cast<long long>(v);
}

/// Number of significant bits of v (0 for v == 0).
inline int bit_length_u128(unsigned __int128 v) {
    auto hi = static_cast<std::uint64_t>(v >> 64);
    auto lo = static_cast<std::uint64_t>(v);
    if (hi != 0) return 128 - __builtin_clzll(hi);
    if (lo != 0) return 64 - __builtin_clzll(lo);
    return 0;
}

/// Sign of (a << sh) - b for non-negative 128-bit operands.
/// Works for arbitrary sh >= 0 by comparing bit lengths before shifting,
/// so the shift itself never overflows.
inline int cmp_shifted_u128(unsigned __int128 a, unsigned __int128 b, int sh) {
    if (a == 0) return b == 0 ? 0 : -1;
    if (b == 0) return 1;
    const int la = bit_length_u128(a) + sh;
    const int lb = bit_length_u128(b);
    if (la != lb) return la > lb ? 1 : -1;
    // Equal bit lengths: the shifted value fits in 128 bits.
    const unsigned __int128 as = a << sh;
    if (as == b) return 0;
    return as > b ? 1 : -1;
}

}  // namespace detail

/// Builds a reduced fraction from a (possibly unreduced) 128-bit ratio.
inline Frac make_frac(__int128 num, __int128 den) {
    if (den == 0) throw std::invalid_argument("fraction: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    if (num == 0) return Frac{0, 1};
    const __int128 g = detail::gcd128(num, den);
    return Frac{detail::narrow_ll(num / g, "make_frac"),
                detail::narrow_ll(den / g, "make_frac")};
}

inline Frac frac_from_ll(long long v) { return Frac{v, 1}; }

inline Frac frac_add(const Frac& a, const Frac& b) {
    return make_frac(static_cast<__int128>(a.num) * b.den +
                         static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
}

inline Frac frac_sub(const Frac& a, const Frac& b) {
    return make_frac(static_cast<__int128>(a.num) * b.den -
                         static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
}

inline Frac frac_mul(const Frac& a, const Frac& b) {
    return make_frac(static_cast<__int128>(a.num) * b.num,
                     static_cast<__int128>(a.den) * b.den);
}

inline Frac frac_div(const Frac& a, const Frac& b) {
    if (b.num == 0) throw std::invalid_argument("fraction: division by zero");
    return make_frac(static_cast<__int128>(a.num) * b.den,
                     static_cast<__int128>(a.den) * b.num);
}

inline Frac frac_neg(const Frac& a) { return Frac{-a.num, a.den}; }

/// Sign of a - b, computed exactly.
inline int frac_cmp(const Frac& a, const Frac& b) {
    const __int128 lhs = static_cast<__int128>(a.num) * b.den;
    const __int128 rhs = static_cast<__int128>(b.num) * a.den;
    if (lhs == rhs) return 0;
    return lhs > rhs ? 1 : -1;
}

inline bool operator==(const Frac& a, const Frac& b) { return frac_cmp(a, b) == 0; }
inline bool operator!=(const Frac& a, const Frac& b) { return frac_cmp(a, b) != 0; }
inline bool operator<(const Frac& a, const Frac& b) { return frac_cmp(a, b) < 0; }
inline bool operator<=(const Frac& a, const Frac& b) { return frac_cmp(a, b) <= 0; }
inline bool operator>(const Frac& a, const Frac& b) { return frac_cmp(a, b) > 0; }
inline bool operator>=(const Frac& a, const Frac& b) { return frac_cmp(a, b) >= 0; }

inline double frac_to_double(const Frac& a) {
    return static_cast<double>(a.num) / static_cast<double>(a.den);
}

/// Largest integer <= num/den (floor division, exact).
inline long long frac_floor(const Frac& a) {
    long long q = a.num / a.den;
    if (a.num % a.den != 0 && a.num < 0) --q;
    return q;
}

inline long long frac_ceil(const Frac& a) {
    long long q = a.num / a.den;
    if (a.num % a.den != 0 && a.num > 0) ++q;
    return q;
}

/// Sign of x - f where x is an IEEE double and f an exact rational.
/// The double is decomposed as mantissa * 2^exponent, which is exact, so the
/// comparison has no rounding error for any finite x.
inline int compare_double_frac(double x, const Frac& f) {
    if (std::isnan(x)) throw std::invalid_argument("compare_double_frac: NaN");
    if (std::isinf(x)) return x > 0 ? 1 : -1;
    if (x == 0.0) {
        if (f.num == 0) return 0;
        return f.num < 0 ? 1 : -1;
    }
    int e = 0;
    const double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
    const auto mi = static_cast<long long>(std::ldexp(m, 53));  // exact integer
    e -= 53;
    const int sx = mi > 0 ? 1 : -1;
    const int sf = f.num > 0 ? 1 : (f.num < 0 ? -1 : 0);
    if (sf == 0) return sx;
    if (sx != sf) return sx;
    // Same sign: compare |mi| * f.den * 2^e against |f.num|.
    const auto a = static_cast<unsigned __int128>(std::llabs(mi)) *
                   static_cast<unsigned __int128>(f.den);
    const auto b = static_cast<unsigned __int128>(std::llabs(f.num));
    const int mag = e >= 0 ? detail::cmp_shifted_u128(a, b, e)
                           : -detail::cmp_shifted_u128(b, a, -e);
    return sx > 0 ? mag : -mag;
}

/// Exact test of x >= f (used for every p_max >= alpha decision).
inline bool double_ge_frac(double x, const Frac& f) {
    return compare_double_frac(x, f) >= 0;
}

/// Parses "3", "-7", "0.05", ".5", "2/5", "-14/16" into an exact fraction.
inline Frac parse_fraction(std::string_view text) {
    auto fail = [&]() -> Frac {
        throw std::invalid_argument("invalid number: '" + std::string(text) + "'");
    };
    // Trim surrounding whitespace.
    std::string_view s = text;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty()) return fail();

    bool neg = false;
    if (s.front() == '+' || s.front() == '-') {
        neg = s.front() == '-';
        s.remove_prefix(1);
        if (s.empty()) return fail();
    }

    auto parse_digits = [&](std::string_view d) -> long long {
        if (d.empty() || d.size() > 18) return fail().num;  // fail() throws
        long long v = 0;
        for (char c : d) {
            if (c < '0' || c > '9') return fail().num;
            v = v * 10 + (c - '0');
        }
        return v;
    };

    const auto slash = s.find('/');
    if (slash != std::string_view::npos) {
        const long long num = parse_digits(s.substr(0, slash));
        const long long den = parse_digits(s.substr(slash + 1));
        if (den == 0) return fail();
        return make_frac(neg ? -num : num, den);
    }

    const auto dot = s.find('.');
    if (dot == std::string_view::npos) {
        const long long v = parse_digits(s);
        return Frac{neg ? -v : v, 1};
    }
    const std::string_view ip = s.substr(0, dot);
    const std::string_view fp = s.substr(dot + 1);
    if (ip.empty() && fp.empty()) return fail();
    const long long ipart = ip.empty() ? 0 : parse_digits(ip);
    long long fpart = 0;
    long long scale = 1;
    if (!fp.empty()) {
        fpart = parse_digits(fp);
        for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    }
    const __int128 num = static_cast<__int128>(ipart) * scale + fpart;
    return make_frac(neg ? -num : num, scale);
}

inline std::string frac_to_string(const Frac& a) {
    if (a.den == 1) return std::to_string(a.num);
    return std::to_string(a.num) + "/" + std::to_string(a.den);
}

}  // namespace randci
