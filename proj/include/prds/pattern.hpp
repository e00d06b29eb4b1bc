#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prds/engine.hpp"

namespace prds {

struct PatternConfig {
    RdsSpec spec;
    std::optional<PadicInt> u0;          // default: lift of index 1
    std::uint64_t n_particles = 10000;
    std::optional<std::uint64_t> burn_in; // default: 10*(p-1)
    double y_min = 0.0;
    double y_max = 1.0;
    unsigned x_bins = 100;
    unsigned y_bins = 20;

    std::vector<std::string> validate() const;
    void validate_or_throw() const;
    std::uint64_t effective_burn_in() const;
    PadicInt effective_u0() const;
};

struct PatternResult {
    std::vector<mpq_class> strip_centers;     // exact g(lift) values, ascending
    std::vector<RootIndex> strip_indices;     // attractor indices, same order
    int reached_component = -1;               // -1: not absorbed by the end
    bool absorbed = false;
    std::vector<std::pair<mpq_class, double>> samples; // (x exact, y), post burn-in
    std::vector<std::uint64_t> strip_occupancy;        // per strip, by index match
    std::vector<std::vector<std::uint64_t>> histogram; // [x_bin][y_bin]
};

// One orbit; post burn-in emits (g(u_n), y_n) with y_n uniform on
// [y_min, y_max] from a derived noise substream. Strip centers come from
// the exact analysis of the absorbed component, never from the samples.
PatternResult generate_pattern(const PatternConfig& config);

// g(teichmuller lift) of each component index, ascending; probability-free.
std::vector<mpq_class> strip_centers(const RdsSpec& spec, const std::vector<RootIndex>& component);

struct SeedIndependenceReport {
    std::vector<std::uint64_t> seeds;
    std::vector<mpq_class> strip_centers;              // the common center set
    std::vector<std::vector<std::uint64_t>> occupancy; // [seed][strip]
    std::uint64_t samples_per_seed = 0;
    double max_occupancy_sigma = 0.0; // max |count - N/k| / sqrt(N (1/k)(1-1/k))
};

// Runs the pattern once per seed (optionally in parallel); the strip-center
// sets must be identical across seeds (exact), else ModelViolation. The
// occupancies differ per seed; the report carries their uniformity score.
SeedIndependenceReport seed_independence_check(const PatternConfig& config,
                                               const std::vector<std::uint64_t>& seeds,
                                               unsigned threads = 1);

// points CSV: "x,y" rows, 17 significant digits.
void write_points_csv(std::ostream& out, const PatternResult& result);

// histogram CSV: "# x_bins y_bins x_min x_max y_min y_max" then row-major counts.
void write_histogram_csv(std::ostream& out, const PatternConfig& config,
                         const PatternResult& result);

} // namespace prds
