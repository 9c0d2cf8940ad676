#include "freqlab/exponents.hpp"

#include <cmath>
#include <numeric>

namespace freqlab {

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::domain_error("Rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
Rational Rational::operator-(const Rational& o) const { return {num * o.den - o.num * den, den * o.den}; }
Rational Rational::operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
Rational Rational::operator/(const Rational& o) const {
    if (o.num == 0) throw std::domain_error("Rational: division by zero");
    return {num * o.den, den * o.num};
}
bool Rational::operator<(const Rational& o) const { return num * o.den < o.num * den; }

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

Rational rational_min(const Rational& a, const Rational& b) { return a < b ? a : b; }

Rational p_circ(int d) {
    if (d < 2) throw std::invalid_argument("p_circ: d >= 2 required");
    static const int kmap[3] = {0, 1, -1};  // d mod 3 = 0,1,2  ->  k = 0,1,-1
    int k = kmap[d % 3];
    return Rational(2) + Rational(12, 4LL * d - 3 - k);
}

Rational p_circ_alt(int d) {
    if (d < 2) throw std::invalid_argument("p_circ_alt: d >= 2 required");
    // search k in {-1,0,1} with d == k (mod 3), then build 2 + 12/(4d-3-k)
    // through a common-denominator route.
    for (int k = -1; k <= 1; ++k) {
        if (((d - k) % 3) == 0) {
            long long den = 4LL * d - 3 - k;
            return Rational(2 * den + 12, den);
        }
    }
    throw std::logic_error("p_circ_alt: unreachable");
}

std::optional<Rational> p_s(int d) {
    if (d < 2) throw std::invalid_argument("p_s: d >= 2 required");
    static const int kmap[3] = {0, 1, 2};  // d mod 3 -> k in {0,1,2}
    int k = kmap[d % 3];
    long long den = 4LL * d - 6 - k;
    if (den == 0) return std::nullopt;  // d = 2: degenerate
    return Rational(2) + Rational(12, den);
}

std::optional<Rational> p_s_alt(int d) {
    if (d < 2) throw std::invalid_argument("p_s_alt: d >= 2 required");
    for (int k = 0; k <= 2; ++k) {
        if (((d - k) % 3) == 0) {
            long long den = 4LL * d - 6 - k;
            if (den == 0) return std::nullopt;
            return Rational(2 * den + 12, den);
        }
    }
    throw std::logic_error("p_s_alt: unreachable");
}

ExponentTable exponents(int d) {
    ExponentTable t;
    t.d = d;
    t.p0 = p_circ(d);
    t.ps = p_s(d);
    t.bilinear_square = Rational(2LL * (d + 2), d);
    t.ps_degenerate = !t.ps.has_value();
    t.effective_square = t.ps ? rational_min(*t.ps, t.bilinear_square) : t.bilinear_square;
    return t;
}

double ExponentTable::alpha(double p) const {
    double a = d * std::abs(0.5 - 1.0 / p) - 0.5;
    return a > 0.0 ? a : 0.0;
}

Rational alpha_rational(int d, const Rational& p) {
    Rational half(1, 2);
    Rational invp(p.den, p.num);
    Rational gap = half < invp ? invp - half : half - invp;
    Rational a = Rational(d) * gap - half;
    return Rational(0) < a ? a : Rational(0);
}

}  // namespace freqlab
