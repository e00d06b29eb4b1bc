#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "prds/errors.hpp"

namespace prds {

bool is_prime(std::uint64_t n);

// o_p(n) for nonzero n, uncapped (not a precision-limited quantity).
unsigned integer_valuation(const mpz_class& n, std::uint64_t p);

// p-adic valuation at working precision K. `v` is the index of the first
// nonzero digit; when all K digits vanish the value is indistinguishable
// from 0 and the marker reads ">=K" (at_floor, v == K).
struct Valuation {
    int v = 0;
    bool at_floor = false;

    mpq_class norm(std::uint64_t p) const; // p^-v, 0 at the floor
    std::string str() const;               // "3" or ">=16"

    friend bool operator==(const Valuation&, const Valuation&) = default;
    friend auto operator<=>(const Valuation& a, const Valuation& b) { return a.v <=> b.v; }
};

// An element of Z_p truncated to K base-p digits; all arithmetic is exact
// mod p^K. Immutable value type, safe to share across threads.
class PadicInt {
public:
    static PadicInt from_integer(long long n, std::uint64_t p, unsigned k);
    static PadicInt from_value(mpz_class value, std::uint64_t p, unsigned k);
    static PadicInt parse(const std::string& text); // "p:K:a0,a1,...,a{K-1}"

    std::uint64_t prime() const { return p_; }
    unsigned precision() const { return k_; }
    const mpz_class& value() const { return value_; }       // canonical rep in [0, p^K)
    const mpz_class& modulus() const { return modulus_; }   // p^K
    std::uint64_t residue() const;                          // digit a0 = value mod p
    std::vector<std::uint64_t> digits() const;              // little-endian, a0 first
    bool is_zero() const { return value_ == 0; }

    PadicInt add(const PadicInt& other) const;
    PadicInt sub(const PadicInt& other) const;
    PadicInt mul(const PadicInt& other) const;
    PadicInt pow(const mpz_class& e) const;
    PadicInt pow(std::uint64_t e) const;

    Valuation valuation() const;
    mpq_class norm() const;

    std::string str() const;

    friend PadicInt operator+(const PadicInt& a, const PadicInt& b) { return a.add(b); }
    friend PadicInt operator-(const PadicInt& a, const PadicInt& b) { return a.sub(b); }
    friend PadicInt operator*(const PadicInt& a, const PadicInt& b) { return a.mul(b); }
    friend bool operator==(const PadicInt& a, const PadicInt& b);

private:
    PadicInt(mpz_class value, std::uint64_t p, unsigned k, mpz_class modulus);
    void require_compatible(const PadicInt& other) const;

    mpz_class value_;
    mpz_class modulus_;
    std::uint64_t p_ = 0;
    unsigned k_ = 0;
};

Valuation valuation(const PadicInt& x);
mpq_class norm(const PadicInt& x);

// Standard metric |x - y|_p on Z_p (p^-(index of first differing digit)).
mpq_class dist(const PadicInt& x, const PadicInt& y);
Valuation dist_valuation(const PadicInt& x, const PadicInt& y);

// Measurement map g(u) = sum a_j p^-(j+1), exact rational; resolution p^-K.
mpq_class measure_g(const PadicInt& u);

// Checks |(gamma+u)^n - gamma^n|_p == |n|_p |u|_p at precision K.
// Domain: o_p(gamma)=0, o_p(u)>=1, o_p(n)+o_p(u) < K, and for p=2 with
// o_2(n)>=1 additionally o_2(u)>=2 (the identity is false at o_2(u)=1:
// (1+2)^2 - 1 = 8 has valuation 3, not 2). Returns true everywhere in-domain.
bool binomial_valuation_check(const PadicInt& gamma, const PadicInt& u, const mpz_class& n);

} // namespace prds
