#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace freqlab {

/// Exact rational arithmetic for the exponent tables.
struct Rational {
    long long num = 0, den = 1;

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}
    Rational(long long n, long long d);

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
};

Rational rational_min(const Rational& a, const Rational& b);

/// p_circ(d) = 2 + 12/(4d - 3 - k), d = k (mod 3), k in {-1, 0, 1}.
Rational p_circ(int d);
/// Independent re-derivation of the same display (separate k search and arithmetic path).
Rational p_circ_alt(int d);

/// p_s(d) = 2 + 12/(4d - 6 - k), d = k (mod 3), k in {0, 1, 2}.
/// d = 2 is degenerate (division by zero) and returns nullopt.
std::optional<Rational> p_s(int d);
std::optional<Rational> p_s_alt(int d);

struct ExponentTable {
    int d = 0;
    Rational p0;                       // sharp multiplier range
    std::optional<Rational> ps;        // square-function range (degenerate at d=2)
    Rational bilinear_square;          // 2(d+2)/d
    Rational effective_square;         // min(ps, 2(d+2)/d)
    bool ps_degenerate = false;

    /// alpha(p) = max(d |1/2 - 1/p| - 1/2, 0).
    double alpha(double p) const;
    /// theoretical T_delta slope d/p - (d-1)/2.
    double e_t(double p) const { return d / p - (d - 1) / 2.0; }
    /// theoretical S_delta slope d/p - (d-2)/2.
    double e_s(double p) const { return d / p - (d - 2) / 2.0; }
};

ExponentTable exponents(int d);

Rational alpha_rational(int d, const Rational& p);

}  // namespace freqlab
