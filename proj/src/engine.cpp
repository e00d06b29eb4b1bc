#include "prds/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

namespace prds {

namespace rng {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t at(std::uint64_t key, std::uint64_t index) {
    return mix(key + index * 0x9e3779b97f4a7c15ULL);
}

std::uint64_t derive(std::uint64_t key, std::uint64_t salt) {
    return mix(key ^ mix(salt));
}

double unit_real(std::uint64_t r) {
    return static_cast<double>(r >> 11) * 0x1.0p-53;
}

} // namespace rng

namespace {

constexpr std::uint64_t kForwardSalt = 0x666f7277'61726421ULL;
constexpr std::uint64_t kBackwardSalt = 0x6261636b'77617264ULL;
constexpr std::uint64_t kTrialSalt = 0x747269616cULL;

// shared exact-analysis context for one spec
struct EngineContext {
    UnityTable table;
    std::vector<RootIndex> attractor;
    std::vector<char> in_attractor; // by index

    explicit EngineContext(const RdsSpec& spec)
        : table(spec.p, spec.precision), attractor(attractor_set(spec.p, spec.exponents)) {
        in_attractor.assign(spec.p - 1, 0);
        for (RootIndex a : attractor) in_attractor[a] = 1;
    }

    Valuation dist_to_attractor(const PadicInt& x) const {
        if (x.valuation().v != 0) return Valuation{0, false}; // off the sphere: distance 1
        RootIndex a = table.index_of_residue(x.residue());
        if (!in_attractor[a]) return Valuation{0, false}; // all attractor lifts differ mod p
        return dist_valuation(x, table.lift(a));
    }
};

} // namespace

NoiseProcess::NoiseProcess(std::vector<mpq_class> probabilities, std::uint64_t seed)
    : probabilities_(std::move(probabilities)), seed_(seed) {
    if (probabilities_.empty()) throw ValidationError("noise process needs at least one probability");
    mpq_class sum(0);
    for (const auto& q : probabilities_) {
        if (q <= 0) throw ValidationError("probabilities must be > 0");
        sum += q;
    }
    if (sum != 1) throw ValidationError("probabilities must sum to 1");
    // cumulative thresholds floor(c_j * 2^64); the last bucket catches the rest
    static_assert(sizeof(unsigned long) == 8, "64-bit unsigned long expected");
    mpq_class cum(0);
    thresholds_.resize(probabilities_.size());
    for (std::size_t j = 0; j + 1 < probabilities_.size(); ++j) {
        cum += probabilities_[j];
        mpz_class t = (cum.get_num() << 64) / cum.get_den();
        thresholds_[j] = t.get_ui();
    }
    thresholds_.back() = ~0ULL;
    forward_key_ = rng::derive(seed, kForwardSalt);
    backward_key_ = rng::derive(seed, kBackwardSalt);
}

std::size_t NoiseProcess::pick(std::uint64_t r) const {
    for (std::size_t j = 0; j + 1 < thresholds_.size(); ++j)
        if (r < thresholds_[j]) return j;
    return thresholds_.size() - 1;
}

std::size_t NoiseProcess::draw(std::int64_t t) const {
    const std::int64_t shifted = t + shift_;
    if (shifted >= 0) return pick(rng::at(forward_key_, static_cast<std::uint64_t>(shifted)));
    return pick(rng::at(backward_key_, static_cast<std::uint64_t>(-shifted - 1)));
}

std::size_t NoiseProcess::forward(std::uint64_t n) const {
    return draw(static_cast<std::int64_t>(n) - 1);
}

std::size_t NoiseProcess::backward(std::uint64_t n) const {
    return draw(-static_cast<std::int64_t>(n));
}

NoiseProcess NoiseProcess::substream(std::uint64_t trial) const {
    NoiseProcess out(probabilities_, rng::derive(seed_, rng::derive(kTrialSalt, trial)));
    return out;
}

NoiseProcess NoiseProcess::shifted(std::int64_t m) const {
    NoiseProcess out(*this);
    out.shift_ += m;
    return out;
}

std::uint64_t default_burn_in(std::uint64_t p) { return 10 * (p - 1); }

OrbitTrace simulate_orbit(const RdsSpec& spec, const PadicInt& u0, std::uint64_t n_steps) {
    return simulate_orbit(spec, u0, n_steps,
                          NoiseProcess(spec.effective_probabilities(), spec.seed));
}

OrbitTrace simulate_orbit(const RdsSpec& spec, const PadicInt& u0, std::uint64_t n_steps,
                          const NoiseProcess& noise) {
    spec.validate_or_throw();
    if (u0.prime() != spec.p || u0.precision() != spec.precision)
        throw IncompatibleOperands("u0 does not match the spec's (p, K)");
    EngineContext ctx(spec);

    std::vector<unsigned> exponent_valuations;
    exponent_valuations.reserve(spec.exponents.size());
    for (auto s : spec.exponents)
        exponent_valuations.push_back(
            integer_valuation(mpz_class(static_cast<unsigned long>(s)), spec.p));

    OrbitTrace trace{spec, u0, ctx.dist_to_attractor(u0), {}};
    trace.steps.reserve(n_steps);
    PadicInt u = u0;
    std::uint64_t cumulative = 0;
    for (std::uint64_t n = 1; n <= n_steps; ++n) {
        const std::size_t j = noise.forward(n);
        u = u.pow(spec.exponents[j]);
        cumulative += exponent_valuations[j];
        trace.steps.push_back(OrbitStep{j, u, ctx.dist_to_attractor(u), cumulative});
    }
    return trace;
}

std::vector<OrbitTrace> run_trials(const RdsSpec& spec, const PadicInt& u0,
                                   std::uint64_t n_steps, std::uint64_t n_trials,
                                   unsigned threads) {
    spec.validate_or_throw();
    const NoiseProcess base(spec.effective_probabilities(), spec.seed);
    std::vector<OrbitTrace> traces;
    traces.reserve(n_trials);
    for (std::uint64_t t = 0; t < n_trials; ++t)
        traces.push_back(OrbitTrace{spec, u0, Valuation{}, {}});

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_trials)));
    std::atomic<std::uint64_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::uint64_t t = next.fetch_add(1);
            if (t >= n_trials) return;
            traces[t] = simulate_orbit(spec, u0, n_steps, base.substream(t));
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
    return traces;
}

void write_trace_csv(std::ostream& out, const OrbitTrace& trace) {
    out << "step,drawn_j,state,dist_valuation,cumulative_valuation\n";
    out << "0,-,\"" << trace.initial.str() << "\"," << trace.initial_dist.str() << ",0\n";
    for (std::size_t n = 0; n < trace.steps.size(); ++n) {
        const auto& s = trace.steps[n];
        out << (n + 1) << "," << s.draw << ",\"" << s.state.str() << "\","
            << s.dist_to_attractor.str() << "," << s.cumulative_valuation << "\n";
    }
}

PullbackResult pullback_distance(const RdsSpec& spec, std::uint64_t n, std::size_t n_samples) {
    return pullback_distance(spec, n, NoiseProcess(spec.effective_probabilities(), spec.seed),
                             n_samples);
}

PullbackResult pullback_distance(const RdsSpec& spec, std::uint64_t n, const NoiseProcess& noise,
                                 std::size_t n_samples) {
    spec.validate_or_throw();
    if (n_samples == 0) throw ValidationError("need at least one sample point");
    EngineContext ctx(spec);
    const unsigned k = spec.precision;

    PullbackResult result;
    result.n = n;
    mpz_class s_product(1);
    for (std::uint64_t i = 1; i <= n; ++i) {
        const std::uint64_t s = spec.exponents[noise.backward(i)];
        result.sum_valuation += integer_valuation(mpz_class(static_cast<unsigned long>(s)), spec.p);
        s_product *= static_cast<unsigned long>(s);
    }
    // sup_{|u|<=1/p} |(gamma+u)^S - gamma^S|: p^-(v+1) attained at |u| = 1/p,
    // except p=2 with 2 | S, where the quadratic binomial term ties the linear
    // one and the sup drops to 2^-(v+2), attained at |u| = 1/4.
    const std::uint64_t exponent =
        (spec.p == 2 && result.sum_valuation >= 1) ? result.sum_valuation + 2
                                                   : result.sum_valuation + 1;
    result.at_floor = exponent >= k;
    if (result.at_floor) {
        result.closed_form = 0;
    } else {
        mpz_class pk;
        mpz_ui_pow_ui(pk.get_mpz_t(), spec.p, static_cast<unsigned long>(exponent));
        result.closed_form = mpq_class(1) / mpq_class(pk);
    }

    // sphere points anchored at attractor lifts: x = gamma + u; samples 0 and 1
    // pin |u|_p to exactly 1/p and 1/p^2 so the sup is attained deterministically
    const std::uint64_t sample_key = rng::derive(noise.seed(), 0x70756c6cULL);
    mpq_class sup(0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const RootIndex anchor = ctx.attractor[i % ctx.attractor.size()];
        PadicInt gamma = ctx.table.lift(anchor);
        mpz_class noise_part(0);
        for (unsigned d = 1; d < k; ++d) {
            std::uint64_t digit = rng::at(sample_key, i * k + d) % spec.p;
            if (i == 0 && d == 1) digit = 1 + digit % (spec.p - 1);
            if (i == 1 && d <= 2) digit = (d == 1) ? 0 : 1 + digit % (spec.p - 1);
            mpz_class scaled;
            mpz_ui_pow_ui(scaled.get_mpz_t(), spec.p, d);
            noise_part += scaled * static_cast<unsigned long>(digit);
        }
        PadicInt x = gamma.add(PadicInt::from_value(noise_part, spec.p, k));
        PadicInt y = x.pow(s_product);
        // nearest attractor lift: the one sharing y's residue, all others at distance 1
        mpq_class d_best(1);
        for (RootIndex a : ctx.attractor) {
            mpq_class d = dist(y, ctx.table.lift(a));
            if (d < d_best) d_best = d;
        }
        if (d_best > sup) sup = d_best;
    }
    result.sampled_sup = sup;
    result.agree = (result.sampled_sup == result.closed_form);
    return result;
}

CocycleProduct recurrence_counters(const RdsSpec& spec, std::uint64_t n) {
    return recurrence_counters(spec, n, NoiseProcess(spec.effective_probabilities(), spec.seed));
}

CocycleProduct recurrence_counters(const RdsSpec& spec, std::uint64_t n,
                                   const NoiseProcess& noise) {
    spec.validate_or_throw();
    CocycleProduct product;
    product.n = n;
    product.counts.assign(spec.exponents.size(), 0);
    for (std::uint64_t i = 1; i <= n; ++i) ++product.counts[noise.forward(i)];
    return product;
}

EmpiricalChainReport empirical_transition_matrix(const RdsSpec& spec, std::uint64_t n_steps,
                                                 std::uint64_t burn_in,
                                                 std::optional<RootIndex> start) {
    spec.validate_or_throw();
    EmpiricalChainReport report;
    report.exact = transition_matrix(spec);
    report.n_steps = n_steps;
    const auto& states = report.exact.states;
    const std::size_t m = states.size();

    RootIndex start_index = states[0];
    if (start) {
        start_index = *start;
    } else if (m > 1) {
        start_index = states[1]; // smallest nonzero attractor index
    }
    report.start_index = start_index;

    EngineContext ctx(spec);
    if (start_index >= spec.p - 1 || !ctx.in_attractor[start_index])
        throw ValidationError("start index " + std::to_string(start_index) + " is not in the attractor");

    const NoiseProcess noise(spec.effective_probabilities(), spec.seed);
    const std::uint64_t n = spec.p - 1;
    report.transition_counts.assign(m, std::vector<std::uint64_t>(m, 0));
    report.row_visits.assign(m, 0);

    PadicInt u = ctx.table.lift(start_index);
    RootIndex a = start_index;
    std::size_t row = report.exact.state_pos(a);
    for (std::uint64_t i = 1; i <= burn_in + n_steps; ++i) {
        const std::size_t j = noise.forward(i);
        const std::uint64_t s = spec.exponents[j];
        u = u.pow(s);
        const RootIndex b = n == 1 ? 0 : mul_mod(a, s % n, n);
        // chase the PadicInt orbit against the exact index chain
        if (!(u == ctx.table.lift(b)))
            throw InternalInconsistency("orbit left the attractor lift set");
        const std::size_t col = report.exact.state_pos(b);
        if (i > burn_in) {
            ++report.transition_counts[row][col];
            ++report.row_visits[row];
        }
        a = b;
        row = col;
    }

    report.max_abs_deviation = 0.0;
    report.all_within_3sigma = true;
    for (std::size_t r = 0; r < m; ++r) {
        if (report.row_visits[r] == 0) continue; // never visited: no estimator
        const double n_r = static_cast<double>(report.row_visits[r]);
        for (std::size_t c = 0; c < m; ++c) {
            const double exact = report.exact.rows[r][c].get_d();
            const double emp = static_cast<double>(report.transition_counts[r][c]) / n_r;
            const double dev = std::abs(emp - exact);
            report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
            const double sigma = std::sqrt(exact * (1.0 - exact) / n_r);
            if (dev > 3.0 * sigma) {
                report.all_within_3sigma = false;
                report.failures.push_back(EntryDeviation{r, c, dev, sigma});
            }
        }
    }
    return report;
}

} // namespace prds
