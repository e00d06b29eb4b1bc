#include "prds/pattern.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "prds/rational.hpp"

namespace prds {

namespace {

constexpr std::uint64_t kYSalt = 0x792d6e6f697365ULL;

} // namespace

std::vector<std::string> PatternConfig::validate() const {
    auto errors = spec.validate();
    if (!(y_min < y_max)) errors.push_back("y range must satisfy y_min < y_max");
    if (n_particles < 1) errors.push_back("n_particles must be >= 1");
    if (x_bins < 1 || y_bins < 1) errors.push_back("histogram bins must be >= 1");
    if (effective_burn_in() >= n_particles)
        errors.push_back("burn_in (" + std::to_string(effective_burn_in()) +
                         ") must be below n_particles (" + std::to_string(n_particles) + ")");
    if (u0 && errors.empty() && (u0->prime() != spec.p || u0->precision() != spec.precision))
        errors.push_back("u0 does not match the spec's (p, K)");
    return errors;
}

void PatternConfig::validate_or_throw() const {
    auto errors = validate();
    if (errors.empty()) return;
    std::string all;
    for (const auto& e : errors) {
        if (!all.empty()) all += "; ";
        all += e;
    }
    throw ValidationError(all);
}

std::uint64_t PatternConfig::effective_burn_in() const {
    return burn_in ? *burn_in : default_burn_in(spec.p);
}

PadicInt PatternConfig::effective_u0() const {
    if (u0) return *u0;
    return teichmuller_lift(primitive_root(spec.p), spec.p, spec.precision);
}

std::vector<mpq_class> strip_centers(const RdsSpec& spec, const std::vector<RootIndex>& component) {
    std::vector<mpq_class> centers;
    centers.reserve(component.size());
    UnityTable table(spec.p, spec.precision);
    for (RootIndex a : component) centers.push_back(measure_g(table.lift(a)));
    std::sort(centers.begin(), centers.end());
    return centers;
}

PatternResult generate_pattern(const PatternConfig& config) {
    config.validate_or_throw();
    const RdsSpec& spec = config.spec;
    const std::uint64_t burn = config.effective_burn_in();
    const PadicInt u0 = config.effective_u0();

    OrbitTrace trace = simulate_orbit(spec, u0, config.n_particles);
    UnityTable table(spec.p, spec.precision);
    const auto components = invariant_decomposition(spec.p, spec.exponents);

    PatternResult result;

    // absorbed component from the final state, strips from the exact analysis
    const PadicInt& last = trace.steps.empty() ? trace.initial : trace.steps.back().state;
    if (last.valuation().v == 0) {
        const RootIndex final_index = table.index_of_residue(last.residue());
        for (std::size_t c = 0; c < components.size(); ++c) {
            if (std::binary_search(components[c].begin(), components[c].end(), final_index)) {
                result.reached_component = static_cast<int>(c);
                result.absorbed = true;
                break;
            }
        }
    }
    if (result.absorbed) {
        const auto& comp = components[static_cast<std::size_t>(result.reached_component)];
        result.strip_indices = comp;
        std::vector<std::pair<mpq_class, RootIndex>> pairs;
        for (RootIndex a : comp) pairs.emplace_back(measure_g(table.lift(a)), a);
        std::sort(pairs.begin(), pairs.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        result.strip_centers.clear();
        result.strip_indices.clear();
        for (auto& [g, a] : pairs) {
            result.strip_centers.push_back(g);
            result.strip_indices.push_back(a);
        }
        result.strip_occupancy.assign(comp.size(), 0);
    }

    const std::uint64_t y_key = rng::derive(spec.seed, kYSalt);
    result.histogram.assign(config.x_bins, std::vector<std::uint64_t>(config.y_bins, 0));
    result.samples.reserve(config.n_particles - burn);
    for (std::uint64_t n = burn + 1; n <= config.n_particles; ++n) {
        const PadicInt& state = trace.steps[n - 1].state;
        mpq_class x = measure_g(state);
        const double y =
            config.y_min + rng::unit_real(rng::at(y_key, n)) * (config.y_max - config.y_min);

        const double xd = x.get_d();
        auto x_bin = static_cast<std::size_t>(xd * config.x_bins);
        if (x_bin >= config.x_bins) x_bin = config.x_bins - 1;
        auto y_bin = static_cast<std::size_t>((y - config.y_min) / (config.y_max - config.y_min) *
                                              config.y_bins);
        if (y_bin >= config.y_bins) y_bin = config.y_bins - 1;
        ++result.histogram[x_bin][y_bin];

        if (result.absorbed && state.valuation().v == 0) {
            const RootIndex a = table.index_of_residue(state.residue());
            auto it = std::find(result.strip_indices.begin(), result.strip_indices.end(), a);
            if (it != result.strip_indices.end())
                ++result.strip_occupancy[static_cast<std::size_t>(it - result.strip_indices.begin())];
        }
        result.samples.emplace_back(std::move(x), y);
    }
    return result;
}

SeedIndependenceReport seed_independence_check(const PatternConfig& config,
                                               const std::vector<std::uint64_t>& seeds,
                                               unsigned threads) {
    if (seeds.empty()) throw ValidationError("seed_independence_check needs at least one seed");
    config.validate_or_throw();

    std::vector<PatternResult> results(seeds.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            PatternConfig per_seed = config;
            per_seed.spec.seed = seeds[i];
            results[i] = generate_pattern(per_seed);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].absorbed)
            throw ModelViolation("seed " + std::to_string(seeds[i]) +
                                 " did not absorb into the attractor within burn-in");
        if (results[i].strip_centers != results[0].strip_centers)
            throw ModelViolation("strip-center sets differ between seeds " +
                                 std::to_string(seeds[0]) + " and " + std::to_string(seeds[i]));
    }

    SeedIndependenceReport report;
    report.seeds = seeds;
    report.strip_centers = results[0].strip_centers;
    report.samples_per_seed = config.n_particles - config.effective_burn_in();
    const std::size_t k = report.strip_centers.size();
    const double n = static_cast<double>(report.samples_per_seed);
    const double expected = n / static_cast<double>(k);
    const double sigma = std::sqrt(n * (1.0 / k) * (1.0 - 1.0 / k));
    for (const auto& r : results) {
        report.occupancy.push_back(r.strip_occupancy);
        for (std::uint64_t count : r.strip_occupancy) {
            const double score =
                sigma > 0 ? std::abs(static_cast<double>(count) - expected) / sigma : 0.0;
            report.max_occupancy_sigma = std::max(report.max_occupancy_sigma, score);
        }
    }
    return report;
}

void write_points_csv(std::ostream& out, const PatternResult& result) {
    out << "x,y\n";
    for (const auto& [x, y] : result.samples)
        out << format_double(x.get_d()) << "," << format_double(y) << "\n";
}

void write_histogram_csv(std::ostream& out, const PatternConfig& config,
                         const PatternResult& result) {
    out << "# " << config.x_bins << " " << config.y_bins << " 0 1 "
        << format_double(config.y_min) << " " << format_double(config.y_max) << "\n";
    for (const auto& row : result.histogram) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ",";
            out << row[j];
        }
        out << "\n";
    }
}

} // namespace prds
