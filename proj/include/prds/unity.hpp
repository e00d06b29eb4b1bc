#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "prds/padic.hpp"

namespace prds {

// Exponent a in Z/(p-1) relative to the fixed (smallest) primitive root xi;
// index 0 is the unity element 1. The (p, xi) context lives in UnityTable
// and in the report headers.
using RootIndex = std::uint64_t;

// Smallest primitive root mod p; p=2 degenerates to 1 (Gamma_2 = {1}).
std::uint64_t primitive_root(std::uint64_t p);

// a^e mod m for 64-bit operands.
std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e, std::uint64_t m);
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m);

// Multiplicative order of a mod m, gcd(a, m) = 1.
std::uint64_t multiplicative_order(std::uint64_t a, std::uint64_t m);

// The unique root of unity congruent to a0 mod p, to K digits; computed by
// iterating x <- x^p, which gains one correct digit per step.
PadicInt teichmuller_lift(std::uint64_t a0, std::uint64_t p, unsigned k);

// Fixed points of x -> x^k on the sphere, as indices: multiples of
// (p-1)/gcd(p-1, k-1); |Gamma_k| = gcd(p-1, k-1).
std::vector<RootIndex> gamma_k(std::uint64_t p, std::uint64_t k);

// Image of Gamma_k under x -> x^l: the enumerated set {a*l mod p-1}.
// Internally asserted equal to gamma_k(p, u) with u = g/gcd(l,g) + 1,
// g = gcd(p-1, k-1); this matches the cited (k-1)/gcd(k-1,l) + 1 exactly
// when (k-1) | (p-1), and is correct in general.
std::vector<RootIndex> image_of_gamma_k(std::uint64_t p, std::uint64_t k, std::uint64_t l);

enum class FixedPointClass { Attracting, SiegelCenter };

// Attracting iff p | k; otherwise the map is an isometry near the root
// (Siegel behaviour).
FixedPointClass classify_fixed_points(std::uint64_t p, std::uint64_t k);

// All p-1 Teichmuller representatives at precision K plus the discrete-log
// table for residue -> index lookups. Lifts are precomputed for p <= 10^5
// and derived on demand above that. Immutable after construction.
class UnityTable {
public:
    UnityTable(std::uint64_t p, unsigned k);

    std::uint64_t prime() const { return p_; }
    unsigned precision() const { return k_; }
    std::uint64_t xi() const { return xi_; }
    std::uint64_t order() const { return p_ - 1; }

    PadicInt lift(RootIndex a) const;
    RootIndex index_of_residue(std::uint64_t r) const; // discrete log base xi

    // x = gamma + u with gamma the lift of x mod p; requires |x|_p = 1.
    std::pair<RootIndex, PadicInt> nearest_root(const PadicInt& x) const;

private:
    std::uint64_t p_;
    unsigned k_;
    std::uint64_t xi_;
    PadicInt xi_lift_;
    bool eager_;
    std::vector<PadicInt> lifts_;       // eager mode: index -> lift
    std::vector<std::uint64_t> dlog_;   // eager mode: residue -> index
};

} // namespace prds
