#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "prds/analysis.hpp"
#include "prds/rational.hpp"

using namespace prds;

namespace {

RdsSpec make_spec(std::uint64_t p, std::vector<std::uint64_t> s,
                  std::vector<mpq_class> q = {}, std::uint64_t seed = 0) {
    RdsSpec spec;
    spec.p = p;
    spec.exponents = std::move(s);
    spec.probabilities = std::move(q);
    spec.seed = seed;
    return spec;
}

std::vector<std::size_t> component_sizes(const std::vector<std::vector<RootIndex>>& comps) {
    std::vector<std::size_t> sizes;
    for (const auto& c : comps) sizes.push_back(c.size());
    std::sort(sizes.begin(), sizes.end());
    return sizes;
}

// recurrent classes of the positive-probability graph on the attractor:
// Tarjan-free double-pass via forward closure equality
std::vector<std::set<RootIndex>> recurrent_classes_oracle(std::uint64_t p,
                                                          const std::vector<std::uint64_t>& s) {
    const std::uint64_t n = p - 1;
    auto attractor = attractor_set(p, s);
    std::set<RootIndex> in_attr(attractor.begin(), attractor.end());
    auto reach = [&](RootIndex a) {
        std::set<RootIndex> seen{a};
        std::vector<RootIndex> stack{a};
        while (!stack.empty()) {
            RootIndex x = stack.back();
            stack.pop_back();
            for (auto e : s) {
                RootIndex y = n == 1 ? 0 : (x * (e % n)) % n;
                if (seen.insert(y).second) stack.push_back(y);
            }
        }
        return seen;
    };
    std::vector<std::set<RootIndex>> classes;
    std::set<RootIndex> assigned;
    for (RootIndex a : attractor) {
        if (assigned.count(a)) continue;
        auto r = reach(a);
        // a is recurrent iff every reachable state reaches a back
        std::set<RootIndex> cls;
        for (RootIndex b : r)
            if (reach(b).count(a)) cls.insert(b);
        bool recurrent = true;
        for (RootIndex b : r)
            if (!cls.count(b)) recurrent = false;
        REQUIRE(recurrent); // on the attractor every state is recurrent
        for (RootIndex b : cls) assigned.insert(b);
        classes.push_back(cls);
    }
    return classes;
}

} // namespace

TEST_CASE("attractor orders (golden)") {
    CHECK(attractor_order(61, {61, 2}).q == 15);
    CHECK(attractor_order(29, {29, 2, 3}).q == 7);
    CHECK(attractor_order(47, {47, 14}).q == 23);
    CHECK(attractor_order(41, {11, 41}).q == 40);
    CHECK(attractor_order(41, {17, 41}).q == 40);
    CHECK(attractor_order(61, {61, 2, 3}).q == 5);

    auto trace = attractor_order(61, {61, 2}).factors;
    REQUIRE(trace.size() == 3);
    CHECK(trace[0].prime == 2);
    CHECK(trace[0].stripped);
    CHECK(trace[0].witness == 2);
    CHECK_FALSE(trace[1].stripped);
    CHECK_FALSE(trace[2].stripped);
}

TEST_CASE("attractor order: brute-force oracle") {
    // greatest divisor of p-1 coprime to all exponents, by enumeration
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::uint64_t p = std::vector<std::uint64_t>{13, 29, 41, 47, 61}[gen() % 5];
        std::vector<std::uint64_t> s{p, 2 + gen() % (p - 2)};
        std::uint64_t best = 1;
        for (std::uint64_t d = 1; d <= p - 1; ++d) {
            if ((p - 1) % d) continue;
            bool coprime = true;
            for (auto e : s)
                if (std::gcd(d, e) != 1) coprime = false;
            if (coprime) best = std::max(best, d);
        }
        CHECK(attractor_order(p, s).q == best);
    }
}

TEST_CASE("attractor sets (golden)") {
    std::vector<RootIndex> expect61;
    for (std::uint64_t a = 0; a <= 56; a += 4) expect61.push_back(a);
    CHECK(attractor_set(61, {61, 2}) == expect61);

    std::vector<RootIndex> expect29{0, 4, 8, 12, 16, 20, 24};
    CHECK(attractor_set(29, {29, 2, 3}) == expect29);

    // adding s_3 with gcd(s_3, 15) = 5 shrinks I to {0, 20, 40}
    CHECK(attractor_set(61, {61, 2, 25}) == std::vector<RootIndex>{0, 20, 40});
}

TEST_CASE("invariant decompositions (golden)") {
    auto c29 = invariant_decomposition(29, {29, 2, 3});
    REQUIRE(c29.size() == 2);
    CHECK(c29[0] == std::vector<RootIndex>{0});
    CHECK(c29[1] == std::vector<RootIndex>{4, 8, 12, 16, 20, 24});

    auto c41a = invariant_decomposition(41, {11, 41});
    CHECK(c41a.size() == 25);
    auto sizes_a = component_sizes(c41a);
    CHECK(std::count(sizes_a.begin(), sizes_a.end(), 1) == 10);
    CHECK(std::count(sizes_a.begin(), sizes_a.end(), 2) == 15);

    auto c41b = invariant_decomposition(41, {17, 41});
    CHECK(c41b.size() == 16);
    auto sizes_b = component_sizes(c41b);
    CHECK(std::count(sizes_b.begin(), sizes_b.end(), 1) == 8);
    CHECK(std::count(sizes_b.begin(), sizes_b.end(), 4) == 8);

    auto c47 = invariant_decomposition(47, {14, 47});
    REQUIRE(c47.size() == 2);
    CHECK(c47[0] == std::vector<RootIndex>{0});
    CHECK(c47[1].size() == 22);

    // p=61 with s=(61,2): the unique fixed point, one 2-subset, three 4-subsets
    auto c61a = invariant_decomposition(61, {61, 2});
    auto sizes61 = component_sizes(c61a);
    CHECK(c61a.size() == 5);
    CHECK(std::count(sizes61.begin(), sizes61.end(), 1) == 1);
    CHECK(std::count(sizes61.begin(), sizes61.end(), 2) == 1);
    CHECK(std::count(sizes61.begin(), sizes61.end(), 4) == 3);

    // p=61 with s=(61,2,3): fixed point plus the 4-set {12,24,36,48}
    auto c61 = invariant_decomposition(61, {61, 2, 3});
    REQUIRE(c61.size() == 2);
    CHECK(c61[1] == std::vector<RootIndex>{12, 24, 36, 48});
}

TEST_CASE("components are ordered by smallest index and partition the attractor") {
    for (auto& [p, s] : std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>>{
             {29, {29, 2, 3}}, {41, {11, 41}}, {47, {14, 47}}, {61, {61, 2}}}) {
        auto comps = invariant_decomposition(p, s);
        auto attractor = attractor_set(p, s);
        std::vector<RootIndex> all;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (i) CHECK(comps[i].front() > comps[i - 1].front());
            all.insert(all.end(), comps[i].begin(), comps[i].end());
        }
        std::sort(all.begin(), all.end());
        CHECK(all == attractor);
        CHECK(comps.front().front() == 0); // {1} is always invariant
    }
}

TEST_CASE("components equal the recurrent classes of the chain graph") {
    for (auto& [p, s] : std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>>{
             {29, {29, 2, 3}}, {41, {17, 41}}, {61, {61, 2, 3}}}) {
        auto comps = invariant_decomposition(p, s);
        auto classes = recurrent_classes_oracle(p, s);
        REQUIRE(comps.size() == classes.size());
        std::set<std::set<RootIndex>> got, expect;
        for (const auto& c : comps) got.insert(std::set<RootIndex>(c.begin(), c.end()));
        for (const auto& c : classes) expect.insert(c);
        CHECK(got == expect);
    }
}

TEST_CASE("congruent exponents leave the structure unchanged") {
    std::mt19937_64 gen(17);
    for (auto& [p, s] : std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>>{
             {29, {29, 2, 3}}, {61, {61, 2}}}) {
        auto base_set = attractor_set(p, s);
        auto base_comp = invariant_decomposition(p, s);
        for (int i = 0; i < 5; ++i) {
            auto extended = s;
            std::uint64_t j = gen() % s.size();
            extended.push_back(s[j] + (1 + gen() % 3) * (p - 1));
            CHECK(attractor_set(p, extended) == base_set);
            CHECK(invariant_decomposition(p, extended) == base_comp);
        }
    }
}

TEST_CASE("single map orbits on the attractor (p=29)") {
    auto f2 = single_map_orbits(29, {29, 2, 3}, 1);
    CHECK(f2.exponent == 2);
    CHECK(f2.order_mod_q == 3);
    REQUIRE(f2.orbits.size() == 3);
    CHECK(f2.orbits[0] == std::vector<RootIndex>{0});
    CHECK(f2.orbits[1] == std::vector<RootIndex>{4, 8, 16});
    CHECK(f2.orbits[2] == std::vector<RootIndex>{12, 24, 20});

    auto f3 = single_map_orbits(29, {29, 2, 3}, 2);
    CHECK(f3.exponent == 3);
    CHECK(f3.order_mod_q == 6);
    REQUIRE(f3.orbits.size() == 2);
    CHECK(f3.orbits[0] == std::vector<RootIndex>{0});
    CHECK(f3.orbits[1].size() == 6);

    auto f29 = single_map_orbits(29, {29, 2, 3}, 0);
    CHECK(f29.order_mod_q == 1); // 29 = 1 mod 7: identity on the attractor
    CHECK(f29.orbits.size() == 7);
}

TEST_CASE("orbit length bound certificates") {
    auto cert = orbit_length_bound(15, 3, 2);
    CHECK(cert.orbit_length == 4);
    CHECK(cert.modulus == 5);
    CHECK(cert.q_a == 4);

    CHECK(orbit_length_bound(7, 0, 3).orbit_length == 1);

    // q prime: d_a | q-1 for a != 0
    for (std::uint64_t a = 1; a < 23; ++a) {
        auto c = orbit_length_bound(23, a, 14);
        CHECK(c.q_a == 22);
        CHECK(22 % c.orbit_length == 0);
    }

    // random sweep: the divisor certificate always holds
    std::mt19937_64 gen(23);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t q = 2 + gen() % 120;
        std::uint64_t s = 2 + gen() % 120;
        if (std::gcd(s % q ? s % q : q, q) != 1) continue;
        std::uint64_t a = gen() % q;
        auto c = orbit_length_bound(q, a, s);
        CHECK(c.q_a % c.orbit_length == 0);
    }
    CHECK_THROWS_AS(orbit_length_bound(15, 2, 3), NotAUnitModQ);
}

TEST_CASE("transition matrix reproduces the p=29 chain") {
    mpq_class q1(1, 5), q2(2, 5), q3(2, 5);
    auto spec = make_spec(29, {29, 2, 3}, {q1, q2, q3});
    auto m = transition_matrix(spec);
    REQUIRE(m.states == std::vector<RootIndex>{0, 4, 8, 12, 16, 20, 24});

    // state 1 is never left
    CHECK(m.rows[0][0] == 1);

    // row xi^4: self-loop q1, doubling to xi^8 with q2, tripling to xi^12 with q3
    auto row4 = m.rows[m.state_pos(4)];
    CHECK(row4[m.state_pos(4)] == q1);
    CHECK(row4[m.state_pos(8)] == q2);
    CHECK(row4[m.state_pos(12)] == q3);

    // doubly stochastic: columns also sum to 1
    for (std::size_t c = 0; c < m.states.size(); ++c) {
        mpq_class sum(0);
        for (std::size_t r = 0; r < m.states.size(); ++r) sum += m.rows[r][c];
        CHECK(sum == 1);
    }
}

TEST_CASE("single map with s = p acts as the identity matrix") {
    auto m = transition_matrix(make_spec(5, {5}));
    REQUIRE(m.states.size() == 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(m.rows[r][c] == (r == c ? 1 : 0));
}

TEST_CASE("stationary distributions are uniform per component") {
    for (auto probs : std::vector<std::vector<mpq_class>>{
             {mpq_class(1, 3), mpq_class(1, 3), mpq_class(1, 3)},
             {mpq_class(1, 5), mpq_class(2, 5), mpq_class(2, 5)},
             {mpq_class(9, 10), mpq_class(1, 20), mpq_class(1, 20)}}) {
        auto spec = make_spec(29, {29, 2, 3}, probs);
        auto comps = invariant_decomposition(29, {29, 2, 3});
        auto pis = stationary_distributions(transition_matrix(spec), comps);
        REQUIRE(pis.size() == 2);
        CHECK(pis[0] == std::vector<mpq_class>{mpq_class(1)});
        CHECK(pis[1] == std::vector<mpq_class>(6, mpq_class(1, 6)));
    }

    auto spec61 = make_spec(61, {61, 2, 3});
    auto comps61 = invariant_decomposition(61, {61, 2, 3});
    auto pis61 = stationary_distributions(transition_matrix(spec61), comps61);
    CHECK(pis61[1] == std::vector<mpq_class>(4, mpq_class(1, 4)));
}

TEST_CASE("absorption analysis") {
    auto spec = make_spec(29, {29, 2, 3});
    auto report = absorption_analysis(spec);
    CHECK(report.transient_states.size() == 21);
    for (const auto& row : report.probabilities) {
        mpq_class sum(0);
        for (const auto& x : row) sum += x;
        CHECK(sum == 1);
    }

    // Monte Carlo oracle for the start xi^7, independent index-space walk
    auto comps = invariant_decomposition(29, {29, 2, 3});
    std::size_t pos7 = std::lower_bound(report.transient_states.begin(),
                                        report.transient_states.end(), RootIndex{7}) -
                       report.transient_states.begin();
    REQUIRE(report.transient_states[pos7] == 7);
    const auto& h7 = report.probabilities[pos7];
    CHECK(h7[0] > 0); // {1} reachable: 7 -> 14 -> 0 under doubling

    std::mt19937_64 gen(1234);
    const int trials = 100000;
    std::vector<int> absorbed(comps.size(), 0);
    for (int t = 0; t < trials; ++t) {
        std::uint64_t a = 7;
        for (int step = 0; step < 200; ++step) {
            std::uint64_t s = std::vector<std::uint64_t>{29, 2, 3}[gen() % 3];
            a = a * (s % 28) % 28;
        }
        for (std::size_t c = 0; c < comps.size(); ++c)
            if (std::binary_search(comps[c].begin(), comps[c].end(), a)) ++absorbed[c];
    }
    for (std::size_t c = 0; c < comps.size(); ++c) {
        double expect = h7[c].get_d();
        double got = static_cast<double>(absorbed[c]) / trials;
        double sigma = std::sqrt(expect * (1 - expect) / trials);
        CHECK(std::abs(got - expect) <= 3 * sigma + 1e-12);
    }
}

TEST_CASE("absorption rows are indicators of the composed-power image") {
    // the q-coordinate of an index only ever moves inside its group orbit,
    // so the absorbed component is a deterministic function of the start:
    // the component containing a * prod s_j^(p-1)
    for (auto& [p, s] : std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>>{
             {29, {29, 2, 3}}, {43, {43, 6, 2}}, {61, {61, 2, 3}}, {41, {41, 2, 6}}}) {
        auto report = absorption_analysis(make_spec(p, s));
        auto comps = invariant_decomposition(p, s);
        const std::uint64_t n = p - 1;
        std::uint64_t composed = 1;
        for (auto e : s) {
            std::uint64_t f = 1;
            for (std::uint64_t i = 0; i < n; ++i) f = f * (e % n) % n;
            composed = composed * f % n;
        }
        for (std::size_t i = 0; i < report.transient_states.size(); ++i) {
            const std::uint64_t image = report.transient_states[i] * composed % n;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                bool lands = std::binary_search(comps[c].begin(), comps[c].end(), image);
                CHECK(report.probabilities[i][c] == (lands ? 1 : 0));
            }
        }
    }
}

TEST_CASE("absorption for a deterministic single map is 0/1") {
    auto spec = make_spec(29, {2});
    auto report = absorption_analysis(spec);
    auto comps = invariant_decomposition(29, {2});
    for (std::size_t i = 0; i < report.transient_states.size(); ++i) {
        // forward iteration oracle
        std::uint64_t a = report.transient_states[i];
        for (int step = 0; step < 100; ++step) a = a * 2 % 28;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            bool lands = std::binary_search(comps[c].begin(), comps[c].end(), a);
            CHECK(report.probabilities[i][c] == (lands ? 1 : 0));
        }
    }
}

TEST_CASE("absorbing start has probability 1 for its component") {
    auto spec = make_spec(29, {29, 2, 3});
    auto report = absorption_analysis(spec);
    // attractor indices are not transient at all
    for (RootIndex a : attractor_set(29, {29, 2, 3}))
        CHECK(!std::binary_search(report.transient_states.begin(), report.transient_states.end(), a));
}

TEST_CASE("basins (p=29, s=2 only)") {
    CHECK(basin(29, {2}, {0}) == std::vector<RootIndex>{0, 7, 14, 21});
    CHECK(basin(29, {2}, {4, 8, 16}) ==
          std::vector<RootIndex>{1, 2, 4, 8, 9, 11, 15, 16, 18, 22, 23, 25});
    // basin of the full attractor is everything
    auto full = basin(29, {29, 2, 3}, attractor_set(29, {29, 2, 3}));
    CHECK(full.size() == 28);
    CHECK_THROWS_AS(basin(29, {2}, {4, 8}), NotInvariant);
}

TEST_CASE("spec validation lists every violation") {
    RdsSpec bad;
    bad.p = 6;
    bad.exponents = {1, 1};
    bad.probabilities = {mpq_class(1, 2)};
    bad.precision = 0;
    auto errors = bad.validate();
    CHECK(errors.size() >= 4);
    CHECK_THROWS_AS(bad.validate_or_throw(), ValidationError);

    auto good = make_spec(29, {29, 2, 3});
    CHECK(good.validate().empty());
    CHECK(good.has_attracting_exponent());
    CHECK_FALSE(make_spec(29, {2, 3}).has_attracting_exponent());
}

TEST_CASE("analyze report and JSON schema") {
    auto spec = make_spec(29, {29, 2, 3}, {mpq_class(1, 5), mpq_class(2, 5), mpq_class(2, 5)});
    auto report = analyze(spec);
    CHECK(report.q == 7);
    CHECK(report.zeta_index == 4);
    CHECK(report.primitive_root_ == 2);
    CHECK(report.attraction_claim);

    auto text = report_to_json(report);
    CHECK(text.find("\"q\": 7") != std::string::npos);
    CHECK(text.find("\"primitive_root\": 2") != std::string::npos);
    CHECK(text.find("\"2/5\"") != std::string::npos);
    CHECK(text.find("\"transient_absorption\"") != std::string::npos);

    auto iso = analyze(make_spec(29, {2, 3}));
    CHECK_FALSE(iso.attraction_claim);
    CHECK(report_to_json(iso).find("no attraction claim") != std::string::npos);
}

TEST_CASE("exact solver guard and degenerate p") {
    auto spec2 = make_spec(2, {2});
    auto report = analyze(spec2);
    CHECK(report.q == 1);
    CHECK(report.attractor == std::vector<RootIndex>{0});
    CHECK(report.components.size() == 1);
    CHECK(report.absorption.transient_states.empty());

    RdsSpec big = make_spec(12289, {12289, 2}); // p-1 = 2^12 * 3 exceeds the solve guard
    CHECK_THROWS_AS(absorption_analysis(big), ValidationError);
}
