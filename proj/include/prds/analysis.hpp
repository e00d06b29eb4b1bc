#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "prds/unity.hpp"

namespace prds {

// Experiment definition: random exponent s drawn i.i.d. from {s_1..s_m}
// with probabilities q_j, acting by x -> x^s on Z_p at precision K.
struct RdsSpec {
    std::uint64_t p = 0;
    std::vector<std::uint64_t> exponents;
    std::vector<mpq_class> probabilities; // empty means uniform
    unsigned precision = 16;
    std::uint64_t seed = 0;

    static std::vector<mpq_class> uniform_probabilities(std::size_t m);

    // All violations, not just the first. Empty means valid.
    std::vector<std::string> validate() const;
    void validate_or_throw() const;

    // The standing assumption p | s_j for some j; without it the sphere
    // dynamics are isometric and no attraction claim is made (warning, not
    // an error).
    bool has_attracting_exponent() const;

    std::vector<mpq_class> effective_probabilities() const;
};

struct FactorTrace {
    std::uint64_t prime = 0;
    unsigned multiplicity = 0;
    bool stripped = false;      // shared with some exponent, removed from q
    std::uint64_t witness = 0;  // an exponent sharing the factor (0 if kept)
};

struct AttractorOrderResult {
    std::uint64_t q = 1;
    std::vector<FactorTrace> factors; // factorization trace of p-1
};

// q = greatest divisor of p-1 coprime to every exponent: every prime factor
// of p-1 shared with some s_j is removed entirely.
AttractorOrderResult attractor_order(std::uint64_t p, const std::vector<std::uint64_t>& exponents);

// Attractor I_s as indices: multiples of (p-1)/q. Also computed as the
// literal image of the composed-power map on index space; the two routes
// are asserted equal.
std::vector<RootIndex> attractor_set(std::uint64_t p, const std::vector<std::uint64_t>& exponents);

// Partition of the attractor into s-invariant subsets: orbits of the group
// generated by {s_j mod q} on Z/q, embedded back via multiplication by
// (p-1)/q. Components ordered by smallest contained index; each sorted.
std::vector<std::vector<RootIndex>> invariant_decomposition(std::uint64_t p,
                                                            const std::vector<std::uint64_t>& exponents);

struct OrbitCycles {
    std::uint64_t exponent = 0;
    std::uint64_t order_mod_q = 1;                 // multiplicative order of s_j mod q
    std::vector<std::vector<RootIndex>> orbits;    // cycles of a -> a*s_j on the attractor
};

// Cycle decomposition of the single map f_{s_j} on the attractor; j indexes
// into `exponents` (0-based).
OrbitCycles single_map_orbits(std::uint64_t p, const std::vector<std::uint64_t>& exponents,
                              std::size_t j);

struct OrbitLengthCertificate {
    std::uint64_t orbit_length = 0; // d_a
    std::uint64_t q_a = 0;          // phi(q / gcd(a, q)); d_a | q_a holds
    std::uint64_t modulus = 0;      // q / gcd(a, q)
};

// Orbit of a under multiplication by s mod q together with the divisor
// bound d_a | phi(q/(a,q)); requires gcd(s, q) = 1.
OrbitLengthCertificate orbit_length_bound(std::uint64_t q, std::uint64_t a, std::uint64_t s);

struct TransitionMatrix {
    std::uint64_t p = 0;
    std::vector<RootIndex> states;              // sorted attractor indices
    std::vector<std::vector<mpq_class>> rows;   // exact; doubly stochastic
    std::size_t state_pos(RootIndex a) const;
};

TransitionMatrix transition_matrix(const RdsSpec& spec);

// Exact stationary distribution per component, solved by rational Gaussian
// elimination of pi P = pi, sum pi = 1 restricted to the component; the
// result is asserted equal to uniform 1/|component|.
std::vector<std::vector<mpq_class>> stationary_distributions(
    const TransitionMatrix& matrix, const std::vector<std::vector<RootIndex>>& components);

struct AbsorptionReport {
    std::vector<RootIndex> transient_states;            // sorted
    std::vector<std::vector<mpq_class>> probabilities;  // row per transient, column per component
};

// First-step absorption probabilities from every transient index of the
// full chain on Z/(p-1) into each attractor component. Rows sum to 1.
AbsorptionReport absorption_analysis(const RdsSpec& spec);

// All indices from which `target` is reachable with positive probability
// (includes the target). Requires target s-invariant.
std::vector<RootIndex> basin(std::uint64_t p, const std::vector<std::uint64_t>& exponents,
                             const std::vector<RootIndex>& target);

struct AttractorReport {
    RdsSpec spec;
    std::uint64_t q = 1;
    std::uint64_t primitive_root_ = 0;
    std::uint64_t zeta_index = 0; // (p-1)/q, generator exponent of the attractor
    std::vector<FactorTrace> factors;
    std::vector<RootIndex> attractor;
    std::vector<std::vector<RootIndex>> components;
    std::vector<std::vector<mpq_class>> stationary;
    AbsorptionReport absorption;
    bool attraction_claim = true; // false: "sphere dynamics are isometric"
};

AttractorReport analyze(const RdsSpec& spec);

std::string report_to_json(const AttractorReport& report, int indent = 2);

// Exact rational linear solve (Gaussian elimination) for n x n systems with
// multiple right-hand sides; throws InternalInconsistency when singular.
std::vector<std::vector<mpq_class>> solve_linear_exact(std::vector<std::vector<mpq_class>> a,
                                                       std::vector<std::vector<mpq_class>> b);

} // namespace prds
