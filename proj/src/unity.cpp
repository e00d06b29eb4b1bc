#include "prds/unity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace prds {

namespace {

constexpr std::uint64_t kEagerLimit = 100000; // precompute lifts/dlog below this

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

} // namespace

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

std::uint64_t pow_mod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
    if (m == 1) return 0;
    std::uint64_t r = 1;
    a %= m;
    while (e) {
        if (e & 1) r = mul_mod(r, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return r;
}

std::uint64_t multiplicative_order(std::uint64_t a, std::uint64_t m) {
    if (m == 1) return 1;
    if (std::gcd(a % m, m) != 1) throw NotAUnitModQ(std::to_string(a) + " is not a unit mod " + std::to_string(m));
    // order divides the group exponent; walk divisors of phi via the orbit
    std::uint64_t x = a % m, o = 1;
    while (x != 1) {
        x = mul_mod(x, a % m, m);
        ++o;
    }
    return o;
}

std::uint64_t primitive_root(std::uint64_t p) {
    if (!is_prime(p)) throw InvalidModulus("p must be prime, got " + std::to_string(p));
    if (p == 2) return 1;
    const std::uint64_t n = p - 1;
    auto factors = factorize(n);
    for (std::uint64_t g = 2; g < p; ++g) {
        bool primitive = true;
        for (auto [f, e] : factors) {
            if (pow_mod(g, n / f, p) == 1) {
                primitive = false;
                break;
            }
        }
        if (primitive) return g;
    }
    throw InternalInconsistency("no primitive root mod " + std::to_string(p));
}

PadicInt teichmuller_lift(std::uint64_t a0, std::uint64_t p, unsigned k) {
    if (a0 % p == 0) throw NotAUnit("residue " + std::to_string(a0) + " is not a unit mod " + std::to_string(p));
    PadicInt x = PadicInt::from_value(mpz_class(static_cast<unsigned long>(a0 % p)), p, k);
    for (unsigned i = 0; i < k; ++i) {
        PadicInt next = x.pow(static_cast<std::uint64_t>(p));
        if (next == x) break;
        x = next;
    }
    return x;
}

std::vector<RootIndex> gamma_k(std::uint64_t p, std::uint64_t k) {
    if (!is_prime(p)) throw InvalidModulus("p must be prime, got " + std::to_string(p));
    if (k < 2) throw ValidationError("gamma_k needs k >= 2");
    const std::uint64_t n = p - 1;
    const std::uint64_t g = std::gcd(n, k - 1);
    const std::uint64_t m = n / g;
    std::vector<RootIndex> out;
    out.reserve(g);
    for (std::uint64_t a = 0; a < n; a += m) out.push_back(a);
    return out;
}

std::vector<RootIndex> image_of_gamma_k(std::uint64_t p, std::uint64_t k, std::uint64_t l) {
    if (k < 2 || l < 2) throw ValidationError("image_of_gamma_k needs k, l >= 2");
    const std::uint64_t n = p - 1;
    auto source = gamma_k(p, k);
    std::vector<RootIndex> image;
    image.reserve(source.size());
    for (RootIndex a : source) image.push_back(n == 1 ? 0 : mul_mod(a, l % n, n));
    std::sort(image.begin(), image.end());
    image.erase(std::unique(image.begin(), image.end()), image.end());

    const std::uint64_t g = std::gcd(n, k - 1);
    const std::uint64_t u = g / std::gcd(l, g) + 1;
    if (image != gamma_k(p, u))
        throw InternalInconsistency("image of Gamma_k is not the expected subgroup");
    return image;
}

FixedPointClass classify_fixed_points(std::uint64_t p, std::uint64_t k) {
    if (k < 2) throw ValidationError("classify_fixed_points needs k >= 2");
    return k % p == 0 ? FixedPointClass::Attracting : FixedPointClass::SiegelCenter;
}

UnityTable::UnityTable(std::uint64_t p, unsigned k)
    : p_(p),
      k_(k),
      xi_(primitive_root(p)),
      xi_lift_(teichmuller_lift(primitive_root(p), p, k)),
      eager_(p <= kEagerLimit) {
    if (!eager_) return;
    lifts_.reserve(p_ - 1);
    dlog_.assign(p_, 0);
    PadicInt cur = PadicInt::from_integer(1, p_, k_);
    for (std::uint64_t a = 0; a < p_ - 1; ++a) {
        if (a) cur = cur.mul(xi_lift_);
        dlog_[cur.residue()] = a;
        lifts_.push_back(cur);
    }
}

PadicInt UnityTable::lift(RootIndex a) const {
    a %= p_ - 1;
    if (eager_) return lifts_[a];
    return xi_lift_.pow(static_cast<std::uint64_t>(a));
}

RootIndex UnityTable::index_of_residue(std::uint64_t r) const {
    r %= p_;
    if (r == 0) throw NotAUnit("residue 0 has no root index");
    if (eager_) return dlog_[r];
    // baby-step giant-step on the residue group
    const std::uint64_t n = p_ - 1;
    const std::uint64_t m = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n))) + 1;
    std::unordered_map<std::uint64_t, std::uint64_t> baby;
    baby.reserve(m);
    std::uint64_t cur = 1;
    for (std::uint64_t j = 0; j < m; ++j) {
        baby.emplace(cur, j);
        cur = mul_mod(cur, xi_, p_);
    }
    const std::uint64_t giant = pow_mod(pow_mod(xi_, m, p_), n - 1, p_); // xi^-m
    std::uint64_t y = r;
    for (std::uint64_t i = 0; i < m; ++i) {
        auto it = baby.find(y);
        if (it != baby.end()) return (i * m + it->second) % n;
        y = mul_mod(y, giant, p_);
    }
    throw InternalInconsistency("discrete log failed for residue " + std::to_string(r));
}

std::pair<RootIndex, PadicInt> UnityTable::nearest_root(const PadicInt& x) const {
    if (x.prime() != p_ || x.precision() != k_)
        throw IncompatibleOperands("PadicInt does not match this UnityTable");
    if (x.valuation().v != 0) throw NotOnSphere("x must have |x|_p = 1");
    RootIndex a = index_of_residue(x.residue());
    PadicInt gamma = lift(a);
    return {a, x.sub(gamma)};
}

} // namespace prds
