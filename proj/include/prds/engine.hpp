#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prds/analysis.hpp"

namespace prds {

// splitmix64 in counter mode: every draw is a pure function of (key, index),
// so streams are seekable, splittable, and scheduling-independent.
namespace rng {
std::uint64_t mix(std::uint64_t z);
std::uint64_t at(std::uint64_t key, std::uint64_t index);
std::uint64_t derive(std::uint64_t key, std::uint64_t salt);
double unit_real(std::uint64_t r); // [0, 1)
inline constexpr const char* generator_name = "splitmix64";
} // namespace rng

// Two-sided i.i.d. exponent-index stream: draw(t) for t in Z, with the
// negative-time draws on an independent derived substream (theta is an
// invertible shift). Thresholds quantize the q_j to 2^-64 resolution; the
// exact analysis always uses the unquantized rationals.
class NoiseProcess {
public:
    NoiseProcess(std::vector<mpq_class> probabilities, std::uint64_t seed);

    std::size_t arity() const { return thresholds_.size(); }
    std::uint64_t seed() const { return seed_; }

    std::size_t draw(std::int64_t t) const;              // j at time t
    std::size_t forward(std::uint64_t n) const;          // n >= 1: draw(n-1)
    std::size_t backward(std::uint64_t n) const;         // n >= 1: draw(-n)

    NoiseProcess substream(std::uint64_t trial) const;   // independent per-trial stream
    NoiseProcess shifted(std::int64_t m) const;          // the stream of theta^m omega

private:
    std::size_t pick(std::uint64_t r) const;

    std::vector<mpq_class> probabilities_;
    std::vector<std::uint64_t> thresholds_;
    std::uint64_t seed_ = 0;
    std::uint64_t forward_key_ = 0;
    std::uint64_t backward_key_ = 0;
    std::int64_t shift_ = 0;
};

struct OrbitStep {
    std::size_t draw = 0;                 // index j of the exponent drawn
    PadicInt state;
    Valuation dist_to_attractor;          // valuation of distance to the attractor lift set
    std::uint64_t cumulative_valuation = 0; // v_n = sum o_p(s_drawn), uncapped
};

struct OrbitTrace {
    RdsSpec spec;
    PadicInt initial;
    Valuation initial_dist;
    std::vector<OrbitStep> steps;
};

OrbitTrace simulate_orbit(const RdsSpec& spec, const PadicInt& u0, std::uint64_t n_steps);
OrbitTrace simulate_orbit(const RdsSpec& spec, const PadicInt& u0, std::uint64_t n_steps,
                          const NoiseProcess& noise);

// n_trials independent orbits on per-trial substreams, executed on up to
// `threads` workers; results are ordered by trial index regardless of
// scheduling.
std::vector<OrbitTrace> run_trials(const RdsSpec& spec, const PadicInt& u0,
                                   std::uint64_t n_steps, std::uint64_t n_trials,
                                   unsigned threads);

// CSV export: step,drawn_j,state,dist_valuation,cumulative_valuation
// (state field quoted; step 0 carries "-" for drawn_j).
void write_trace_csv(std::ostream& out, const OrbitTrace& trace);

struct PullbackResult {
    std::uint64_t n = 0;
    std::uint64_t sum_valuation = 0;      // v_n over the backward draws
    bool at_floor = false;                // v_n + 1 >= K: below resolution
    mpq_class closed_form;                // p^-(v_n+1), 0 at the floor
    mpq_class sampled_sup;                // sup over sampled sphere points
    bool agree = false;
};

// Hausdorff distance of the n-step pullback image to the attractor lift
// set. Sampled sphere points are anchored at attractor lifts (x = gamma + u
// with gamma an attractor lift), where the binomial valuation identity gives
// dist = |S_-n|_p |u|_p for every n; the closed form and the sampled sup
// must agree. Points anchored at roots outside the attractor sit at distance
// 1 until gamma^{S_-n} falls in, so the full-sphere distance only matches
// for large n.
PullbackResult pullback_distance(const RdsSpec& spec, std::uint64_t n,
                                 std::size_t n_samples = 1000);
PullbackResult pullback_distance(const RdsSpec& spec, std::uint64_t n,
                                 const NoiseProcess& noise, std::size_t n_samples);

struct CocycleProduct {
    std::uint64_t n = 0;
    std::vector<std::uint64_t> counts; // k_{j,n}; sums to n
};

// Per-map draw counts k_{j,n} of the cocycle product. For i.i.d. draws the
// law of large numbers (k_{j,n}/n -> q_j) is the operative statement of
// "every map recurs", and that is what the tests check.
CocycleProduct recurrence_counters(const RdsSpec& spec, std::uint64_t n);
CocycleProduct recurrence_counters(const RdsSpec& spec, std::uint64_t n,
                                   const NoiseProcess& noise);

struct EntryDeviation {
    std::size_t row = 0;
    std::size_t col = 0;
    double deviation = 0.0;
    double sigma = 0.0;
};

struct EmpiricalChainReport {
    TransitionMatrix exact;
    std::vector<std::vector<std::uint64_t>> transition_counts; // [row][col]
    std::vector<std::uint64_t> row_visits;
    double max_abs_deviation = 0.0;
    bool all_within_3sigma = true;
    std::vector<EntryDeviation> failures; // entries beyond their 3-sigma band
    std::uint64_t n_steps = 0;
    RootIndex start_index = 0;
};

// Frequency estimate of the attractor chain from one long orbit started at
// an attractor lift, compared entry-wise against the exact matrix with
// 3-sigma binomial bands. The PadicInt state is chased against the exact
// index chain at every step; divergence is an arithmetic bug.
EmpiricalChainReport empirical_transition_matrix(const RdsSpec& spec, std::uint64_t n_steps,
                                                 std::uint64_t burn_in,
                                                 std::optional<RootIndex> start = std::nullopt);

// Engine-wide default: absorption into the attractor is geometrically fast.
std::uint64_t default_burn_in(std::uint64_t p);

} // namespace prds
