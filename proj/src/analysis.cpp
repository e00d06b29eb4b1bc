#include "prds/analysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "prds/rational.hpp"

namespace prds {

namespace {

constexpr std::uint64_t kSolveLimit = 4096; // exact solves stay within p-1 <= 2^12

std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n) {
    std::vector<std::pair<std::uint64_t, unsigned>> out;
    for (std::uint64_t f = 2; f * f <= n; f += (f == 2 ? 1 : 2)) {
        if (n % f) continue;
        unsigned e = 0;
        while (n % f == 0) {
            n /= f;
            ++e;
        }
        out.emplace_back(f, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

std::uint64_t euler_phi(std::uint64_t n) {
    std::uint64_t phi = 1;
    for (auto [f, e] : factorize(n)) {
        std::uint64_t fe = 1;
        for (unsigned i = 0; i + 1 < e; ++i) fe *= f;
        phi *= fe * (f - 1);
    }
    return n == 1 ? 1 : phi;
}

// index maps a -> a * (s mod n) mod n on Z/n, one table per exponent
std::vector<std::vector<std::uint64_t>> index_maps(std::uint64_t n,
                                                   const std::vector<std::uint64_t>& exponents) {
    std::vector<std::vector<std::uint64_t>> maps(exponents.size(), std::vector<std::uint64_t>(n));
    for (std::size_t j = 0; j < exponents.size(); ++j) {
        const std::uint64_t s = n == 1 ? 0 : exponents[j] % n;
        for (std::uint64_t a = 0; a < n; ++a) maps[j][a] = n == 1 ? 0 : mul_mod(a, s, n);
    }
    return maps;
}

void require_valid_prime(std::uint64_t p) {
    if (!is_prime(p)) throw InvalidModulus("p must be prime, got " + std::to_string(p));
}

} // namespace

std::vector<mpq_class> RdsSpec::uniform_probabilities(std::size_t m) {
    std::vector<mpq_class> q(m, mpq_class(1, static_cast<unsigned long>(m)));
    for (auto& x : q) x.canonicalize();
    return q;
}

std::vector<mpq_class> RdsSpec::effective_probabilities() const {
    return probabilities.empty() ? uniform_probabilities(exponents.size()) : probabilities;
}

std::vector<std::string> RdsSpec::validate() const {
    std::vector<std::string> errors;
    if (!is_prime(p)) errors.push_back("p must be prime, got " + std::to_string(p));
    if (precision == 0) errors.push_back("precision K must be >= 1");
    if (exponents.empty()) errors.push_back("at least one exponent is required");
    for (auto s : exponents)
        if (s < 2) errors.push_back("exponent " + std::to_string(s) + " must be >= 2");
    std::set<std::uint64_t> distinct(exponents.begin(), exponents.end());
    if (distinct.size() != exponents.size()) errors.push_back("exponents must be pairwise distinct");
    if (!probabilities.empty()) {
        if (probabilities.size() != exponents.size())
            errors.push_back("got " + std::to_string(probabilities.size()) + " probabilities for " +
                             std::to_string(exponents.size()) + " exponents");
        mpq_class sum(0);
        bool positive = true;
        for (const auto& q : probabilities) {
            if (q <= 0) positive = false;
            sum += q;
        }
        if (!positive) errors.push_back("all probabilities must be > 0");
        if (!probabilities.empty() && sum != 1)
            errors.push_back("probabilities must sum to 1, got " + rational_str(sum));
    }
    return errors;
}

void RdsSpec::validate_or_throw() const {
    auto errors = validate();
    if (errors.empty()) return;
    std::string all;
    for (const auto& e : errors) {
        if (!all.empty()) all += "; ";
        all += e;
    }
    throw ValidationError(all);
}

bool RdsSpec::has_attracting_exponent() const {
    return std::any_of(exponents.begin(), exponents.end(), [&](std::uint64_t s) { return s % p == 0; });
}

AttractorOrderResult attractor_order(std::uint64_t p, const std::vector<std::uint64_t>& exponents) {
    require_valid_prime(p);
    AttractorOrderResult result;
    for (auto [f, e] : factorize(p - 1)) {
        FactorTrace trace{f, e, false, 0};
        for (auto s : exponents) {
            if (s % f == 0) {
                trace.stripped = true;
                trace.witness = s;
                break;
            }
        }
        if (!trace.stripped) {
            std::uint64_t fe = 1;
            for (unsigned i = 0; i < e; ++i) fe *= f;
            result.q *= fe;
        }
        result.factors.push_back(trace);
    }
    return result;
}

std::vector<RootIndex> attractor_set(std::uint64_t p, const std::vector<std::uint64_t>& exponents) {
    require_valid_prime(p);
    const std::uint64_t n = p - 1;
    const std::uint64_t q = attractor_order(p, exponents).q;
    const std::uint64_t d = n / q;

    std::vector<RootIndex> by_order;
    by_order.reserve(q);
    for (std::uint64_t a = 0; a < n; a += d) by_order.push_back(a);

    // literal image of f_{s_1}^{p-1} o ... o f_{s_m}^{p-1} on index space
    std::uint64_t composed = 1 % n;
    for (auto s : exponents) composed = n == 1 ? 0 : mul_mod(composed, pow_mod(s % n, n, n), n);
    std::set<RootIndex> image;
    for (std::uint64_t a = 0; a < n; ++a) image.insert(n == 1 ? 0 : mul_mod(a, composed, n));
    if (!std::equal(by_order.begin(), by_order.end(), image.begin(), image.end()))
        throw InternalInconsistency("attractor order route disagrees with the literal image");
    return by_order;
}

std::vector<std::vector<RootIndex>> invariant_decomposition(
    std::uint64_t p, const std::vector<std::uint64_t>& exponents) {
    const std::uint64_t n = p - 1;
    const std::uint64_t q = attractor_order(p, exponents).q;
    const std::uint64_t d = n / q;

    // orbits of the group generated by the (invertible) maps t -> t*s_j on Z/q;
    // undirected reachability equals the group orbit
    auto maps = index_maps(q, exponents);
    std::vector<std::vector<std::uint64_t>> preimages(q);
    for (const auto& m : maps)
        for (std::uint64_t t = 0; t < q; ++t) preimages[m[t]].push_back(t);

    std::vector<char> seen(q, 0);
    std::vector<std::vector<RootIndex>> components;
    for (std::uint64_t t0 = 0; t0 < q; ++t0) {
        if (seen[t0]) continue;
        std::vector<std::uint64_t> stack{t0};
        seen[t0] = 1;
        std::vector<RootIndex> comp;
        while (!stack.empty()) {
            std::uint64_t t = stack.back();
            stack.pop_back();
            comp.push_back(t * d);
            for (const auto& m : maps)
                if (!seen[m[t]]) {
                    seen[m[t]] = 1;
                    stack.push_back(m[t]);
                }
            for (std::uint64_t u : preimages[t])
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    std::sort(components.begin(), components.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return components;
}

OrbitCycles single_map_orbits(std::uint64_t p, const std::vector<std::uint64_t>& exponents,
                              std::size_t j) {
    if (j >= exponents.size()) throw ValidationError("exponent index out of range");
    const std::uint64_t n = p - 1;
    const std::uint64_t q = attractor_order(p, exponents).q;
    const std::uint64_t d = n / q;
    const std::uint64_t s = q == 1 ? 0 : exponents[j] % q;

    OrbitCycles result;
    result.exponent = exponents[j];
    result.order_mod_q = q == 1 ? 1 : multiplicative_order(s, q);
    std::vector<char> seen(q, 0);
    for (std::uint64_t t0 = 0; t0 < q; ++t0) {
        if (seen[t0]) continue;
        std::vector<RootIndex> cycle;
        std::uint64_t t = t0;
        do {
            seen[t] = 1;
            cycle.push_back(t * d);
            t = q == 1 ? 0 : mul_mod(t, s, q);
        } while (t != t0);
        result.orbits.push_back(std::move(cycle));
    }
    std::sort(result.orbits.begin(), result.orbits.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return result;
}

OrbitLengthCertificate orbit_length_bound(std::uint64_t q, std::uint64_t a, std::uint64_t s) {
    if (q == 0) throw ValidationError("q must be >= 1");
    if (q > 1 && std::gcd(s % q, q) != 1)
        throw NotAUnitModQ(std::to_string(s) + " is not a unit mod " + std::to_string(q));
    OrbitLengthCertificate cert;
    a = q == 1 ? 0 : a % q;
    cert.modulus = q / std::gcd(a, q);
    cert.q_a = euler_phi(cert.modulus);
    std::uint64_t t = a;
    cert.orbit_length = 0;
    do {
        ++cert.orbit_length;
        t = q == 1 ? 0 : mul_mod(t, s % q, q);
    } while (t != a);
    if (cert.q_a % cert.orbit_length != 0)
        throw InternalInconsistency("orbit length does not divide phi(q/(a,q))");
    return cert;
}

std::size_t TransitionMatrix::state_pos(RootIndex a) const {
    auto it = std::lower_bound(states.begin(), states.end(), a);
    if (it == states.end() || *it != a)
        throw InternalInconsistency("index " + std::to_string(a) + " is not an attractor state");
    return static_cast<std::size_t>(it - states.begin());
}

TransitionMatrix transition_matrix(const RdsSpec& spec) {
    spec.validate_or_throw();
    TransitionMatrix m;
    m.p = spec.p;
    m.states = attractor_set(spec.p, spec.exponents);
    const auto probs = spec.effective_probabilities();
    const std::uint64_t n = spec.p - 1;
    m.rows.assign(m.states.size(), std::vector<mpq_class>(m.states.size(), mpq_class(0)));
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        for (std::size_t j = 0; j < spec.exponents.size(); ++j) {
            const std::uint64_t b = n == 1 ? 0 : mul_mod(m.states[i], spec.exponents[j] % n, n);
            m.rows[i][m.state_pos(b)] += probs[j];
        }
    }
    return m;
}

std::vector<std::vector<mpq_class>> solve_linear_exact(std::vector<std::vector<mpq_class>> a,
                                                       std::vector<std::vector<mpq_class>> b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw InternalInconsistency("solve: shape mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a[pivot][col] == 0) ++pivot;
        if (pivot == n) throw InternalInconsistency("solve: singular system");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        const mpq_class inv = 1 / a[col][col];
        for (auto& x : a[col]) x *= inv;
        for (auto& x : b[col]) x *= inv;
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col || a[row][col] == 0) continue;
            const mpq_class factor = a[row][col];
            for (std::size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
            for (std::size_t k = 0; k < b[row].size(); ++k) b[row][k] -= factor * b[col][k];
        }
    }
    return b;
}

std::vector<std::vector<mpq_class>> stationary_distributions(
    const TransitionMatrix& matrix, const std::vector<std::vector<RootIndex>>& components) {
    if (matrix.states.size() > kSolveLimit)
        throw ValidationError("exact solves are limited to p-1 <= " + std::to_string(kSolveLimit));
    std::vector<std::vector<mpq_class>> result;
    for (const auto& comp : components) {
        const std::size_t n = comp.size();
        // (P^T - I) pi = 0 with the last equation replaced by sum pi = 1
        std::vector<std::vector<mpq_class>> a(n, std::vector<mpq_class>(n, mpq_class(0)));
        std::vector<std::vector<mpq_class>> b(n, std::vector<mpq_class>(1, mpq_class(0)));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                a[i][j] = matrix.rows[matrix.state_pos(comp[j])][matrix.state_pos(comp[i])];
                if (i == j) a[i][j] -= 1;
            }
        }
        for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1;
        b[n - 1][0] = 1;
        auto solved = solve_linear_exact(std::move(a), std::move(b));
        std::vector<mpq_class> pi(n);
        const mpq_class uniform(1, static_cast<unsigned long>(n));
        for (std::size_t i = 0; i < n; ++i) {
            pi[i] = solved[i][0];
            if (pi[i] != uniform)
                throw InternalInconsistency("stationary distribution is not uniform on a component");
        }
        result.push_back(std::move(pi));
    }
    return result;
}

AbsorptionReport absorption_analysis(const RdsSpec& spec) {
    spec.validate_or_throw();
    const std::uint64_t n = spec.p - 1;
    if (n > kSolveLimit)
        throw ValidationError("exact solves are limited to p-1 <= " + std::to_string(kSolveLimit));
    const auto components = invariant_decomposition(spec.p, spec.exponents);
    const auto probs = spec.effective_probabilities();
    auto maps = index_maps(n, spec.exponents);

    std::vector<int> comp_of(n, -1);
    for (std::size_t c = 0; c < components.size(); ++c)
        for (RootIndex a : components[c]) comp_of[a] = static_cast<int>(c);

    AbsorptionReport report;
    for (std::uint64_t a = 0; a < n; ++a)
        if (comp_of[a] < 0) report.transient_states.push_back(a);
    const std::size_t t = report.transient_states.size();
    if (t == 0) return report;

    std::vector<std::size_t> transient_pos(n, 0);
    for (std::size_t i = 0; i < t; ++i) transient_pos[report.transient_states[i]] = i;

    // (I - Q) H = R, column block per component
    std::vector<std::vector<mpq_class>> a_mat(t, std::vector<mpq_class>(t, mpq_class(0)));
    std::vector<std::vector<mpq_class>> rhs(t, std::vector<mpq_class>(components.size(), mpq_class(0)));
    for (std::size_t i = 0; i < t; ++i) {
        a_mat[i][i] = 1;
        const std::uint64_t from = report.transient_states[i];
        for (std::size_t j = 0; j < maps.size(); ++j) {
            const std::uint64_t to = maps[j][from];
            if (comp_of[to] >= 0)
                rhs[i][static_cast<std::size_t>(comp_of[to])] += probs[j];
            else
                a_mat[i][transient_pos[to]] -= probs[j];
        }
    }
    report.probabilities = solve_linear_exact(std::move(a_mat), std::move(rhs));
    for (const auto& row : report.probabilities) {
        mpq_class sum(0);
        for (const auto& x : row) sum += x;
        if (sum != 1) throw InternalInconsistency("absorption probabilities do not sum to 1");
    }
    return report;
}

std::vector<RootIndex> basin(std::uint64_t p, const std::vector<std::uint64_t>& exponents,
                             const std::vector<RootIndex>& target) {
    require_valid_prime(p);
    const std::uint64_t n = p - 1;
    auto maps = index_maps(n, exponents);

    std::set<RootIndex> target_set(target.begin(), target.end());
    for (RootIndex a : target)
        if (a >= n) throw ValidationError("target index " + std::to_string(a) + " out of range");
    for (const auto& m : maps) {
        std::set<RootIndex> image;
        for (RootIndex a : target_set) image.insert(m[a]);
        if (image != target_set) throw NotInvariant("target set is not s-invariant");
    }

    std::vector<std::vector<std::uint64_t>> preimages(n);
    for (const auto& m : maps)
        for (std::uint64_t a = 0; a < n; ++a) preimages[m[a]].push_back(a);

    std::vector<char> reached(n, 0);
    std::vector<std::uint64_t> stack(target_set.begin(), target_set.end());
    for (auto a : stack) reached[a] = 1;
    while (!stack.empty()) {
        std::uint64_t a = stack.back();
        stack.pop_back();
        for (std::uint64_t b : preimages[a])
            if (!reached[b]) {
                reached[b] = 1;
                stack.push_back(b);
            }
    }
    std::vector<RootIndex> out;
    for (std::uint64_t a = 0; a < n; ++a)
        if (reached[a]) out.push_back(a);
    return out;
}

AttractorReport analyze(const RdsSpec& spec) {
    spec.validate_or_throw();
    AttractorReport report;
    report.spec = spec;
    auto order = attractor_order(spec.p, spec.exponents);
    report.q = order.q;
    report.factors = std::move(order.factors);
    report.primitive_root_ = primitive_root(spec.p);
    report.zeta_index = (spec.p - 1) / report.q;
    report.attractor = attractor_set(spec.p, spec.exponents);
    report.components = invariant_decomposition(spec.p, spec.exponents);
    report.stationary = stationary_distributions(transition_matrix(spec), report.components);
    report.absorption = absorption_analysis(spec);
    report.attraction_claim = spec.has_attracting_exponent();
    return report;
}

std::string report_to_json(const AttractorReport& report, int indent) {
    nlohmann::json j;
    j["p"] = report.spec.p;
    j["exponents"] = report.spec.exponents;
    auto probs = report.spec.effective_probabilities();
    std::vector<std::string> prob_strs;
    for (const auto& q : probs) prob_strs.push_back(rational_str(q));
    j["probabilities"] = prob_strs;
    j["precision"] = report.spec.precision;
    j["q"] = report.q;
    j["primitive_root"] = report.primitive_root_;
    j["zeta_index"] = report.zeta_index;
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : report.factors) {
        nlohmann::json entry;
        entry["prime"] = f.prime;
        entry["multiplicity"] = f.multiplicity;
        entry["stripped"] = f.stripped;
        if (f.stripped) entry["shared_with"] = f.witness;
        factors.push_back(entry);
    }
    j["factor_trace"] = factors;
    j["attractor"] = report.attractor;
    j["components"] = report.components;
    std::vector<std::vector<std::string>> stationary;
    for (const auto& pi : report.stationary) {
        std::vector<std::string> row;
        for (const auto& x : pi) row.push_back(rational_str(x));
        stationary.push_back(std::move(row));
    }
    j["stationary"] = stationary;
    nlohmann::json absorption = nlohmann::json::object();
    for (std::size_t i = 0; i < report.absorption.transient_states.size(); ++i) {
        std::vector<std::string> row;
        for (const auto& x : report.absorption.probabilities[i]) row.push_back(rational_str(x));
        absorption[std::to_string(report.absorption.transient_states[i])] = row;
    }
    j["transient_absorption"] = absorption;
    j["attraction_claim"] = report.attraction_claim;
    if (!report.attraction_claim)
        j["note"] = "sphere dynamics are isometric; no attraction claim";
    return j.dump(indent);
}

} // namespace prds
