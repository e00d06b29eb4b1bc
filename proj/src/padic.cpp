#include "prds/padic.hpp"

#include <sstream>

namespace prds {

bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    mpz_class z(static_cast<unsigned long>(n));
    return mpz_probab_prime_p(z.get_mpz_t(), 32) != 0;
}

unsigned integer_valuation(const mpz_class& n, std::uint64_t p) {
    if (n == 0) throw ValidationError("integer_valuation of 0 is undefined");
    mpz_class rest(n), q;
    unsigned v = 0;
    while (mpz_divisible_ui_p(rest.get_mpz_t(), p)) {
        mpz_divexact_ui(q.get_mpz_t(), rest.get_mpz_t(), p);
        mpz_swap(rest.get_mpz_t(), q.get_mpz_t());
        ++v;
    }
    return v;
}

mpq_class Valuation::norm(std::uint64_t p) const {
    if (at_floor) return mpq_class(0);
    mpz_class pk;
    mpz_ui_pow_ui(pk.get_mpz_t(), p, static_cast<unsigned long>(v));
    return mpq_class(1) / mpq_class(pk);
}

std::string Valuation::str() const {
    return at_floor ? ">=" + std::to_string(v) : std::to_string(v);
}

PadicInt::PadicInt(mpz_class value, std::uint64_t p, unsigned k, mpz_class modulus)
    : value_(std::move(value)), modulus_(std::move(modulus)), p_(p), k_(k) {}

PadicInt PadicInt::from_integer(long long n, std::uint64_t p, unsigned k) {
    return from_value(mpz_class(static_cast<long>(n)), p, k);
}

PadicInt PadicInt::from_value(mpz_class value, std::uint64_t p, unsigned k) {
    if (!is_prime(p)) throw InvalidModulus("p must be prime, got " + std::to_string(p));
    if (k == 0) throw InvalidPrecision("precision K must be >= 1");
    mpz_class modulus;
    mpz_ui_pow_ui(modulus.get_mpz_t(), p, k);
    mpz_class reduced;
    mpz_fdiv_r(reduced.get_mpz_t(), value.get_mpz_t(), modulus.get_mpz_t());
    return PadicInt(std::move(reduced), p, k, std::move(modulus));
}

PadicInt PadicInt::parse(const std::string& text) {
    std::istringstream in(text);
    std::string p_part, k_part, digit_part;
    if (!std::getline(in, p_part, ':') || !std::getline(in, k_part, ':') ||
        !std::getline(in, digit_part)) {
        throw ValidationError("PadicInt form is p:K:a0,a1,...  got \"" + text + "\"");
    }
    std::uint64_t p = 0;
    unsigned k = 0;
    try {
        p = std::stoull(p_part);
        k = static_cast<unsigned>(std::stoul(k_part));
    } catch (const std::exception&) {
        throw ValidationError("bad PadicInt header in \"" + text + "\"");
    }
    if (!is_prime(p)) throw InvalidModulus("p must be prime, got " + p_part);
    if (k == 0) throw InvalidPrecision("precision K must be >= 1");

    std::vector<std::uint64_t> digits;
    std::istringstream ds(digit_part);
    std::string tok;
    while (std::getline(ds, tok, ',')) {
        try {
            digits.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw ValidationError("bad digit \"" + tok + "\" in \"" + text + "\"");
        }
    }
    if (digits.size() != k)
        throw ValidationError("expected " + std::to_string(k) + " digits, got " +
                              std::to_string(digits.size()));
    mpz_class value(0);
    for (std::size_t j = digits.size(); j-- > 0;) {
        if (digits[j] >= p) throw ValidationError("digit " + std::to_string(digits[j]) + " out of range");
        value *= static_cast<unsigned long>(p);
        value += static_cast<unsigned long>(digits[j]);
    }
    return from_value(std::move(value), p, k);
}

std::uint64_t PadicInt::residue() const {
    return mpz_fdiv_ui(value_.get_mpz_t(), p_);
}

std::vector<std::uint64_t> PadicInt::digits() const {
    std::vector<std::uint64_t> out(k_);
    mpz_class rest(value_), q;
    for (unsigned j = 0; j < k_; ++j) {
        out[j] = mpz_fdiv_q_ui(q.get_mpz_t(), rest.get_mpz_t(), p_);
        mpz_swap(rest.get_mpz_t(), q.get_mpz_t());
    }
    return out;
}

void PadicInt::require_compatible(const PadicInt& other) const {
    if (p_ != other.p_ || k_ != other.k_)
        throw IncompatibleOperands("operands differ in (p, K): (" + std::to_string(p_) + "," +
                                   std::to_string(k_) + ") vs (" + std::to_string(other.p_) + "," +
                                   std::to_string(other.k_) + ")");
}

PadicInt PadicInt::add(const PadicInt& other) const {
    require_compatible(other);
    mpz_class v = value_ + other.value_;
    if (v >= modulus_) v -= modulus_;
    return PadicInt(std::move(v), p_, k_, modulus_);
}

PadicInt PadicInt::sub(const PadicInt& other) const {
    require_compatible(other);
    mpz_class v = value_ - other.value_;
    if (v < 0) v += modulus_;
    return PadicInt(std::move(v), p_, k_, modulus_);
}

PadicInt PadicInt::mul(const PadicInt& other) const {
    require_compatible(other);
    mpz_class v = value_ * other.value_;
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), v.get_mpz_t(), modulus_.get_mpz_t());
    return PadicInt(std::move(r), p_, k_, modulus_);
}

PadicInt PadicInt::pow(const mpz_class& e) const {
    if (e < 0) throw ValidationError("negative exponent");
    mpz_class r;
    mpz_powm(r.get_mpz_t(), value_.get_mpz_t(), e.get_mpz_t(), modulus_.get_mpz_t());
    return PadicInt(std::move(r), p_, k_, modulus_);
}

PadicInt PadicInt::pow(std::uint64_t e) const {
    mpz_class r;
    mpz_powm_ui(r.get_mpz_t(), value_.get_mpz_t(), static_cast<unsigned long>(e),
                modulus_.get_mpz_t());
    return PadicInt(std::move(r), p_, k_, modulus_);
}

Valuation PadicInt::valuation() const {
    if (value_ == 0) return Valuation{static_cast<int>(k_), true};
    return Valuation{static_cast<int>(integer_valuation(value_, p_)), false};
}

mpq_class PadicInt::norm() const {
    return valuation().norm(p_);
}

std::string PadicInt::str() const {
    std::string out = std::to_string(p_) + ":" + std::to_string(k_) + ":";
    auto ds = digits();
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j) out += ",";
        out += std::to_string(ds[j]);
    }
    return out;
}

bool operator==(const PadicInt& a, const PadicInt& b) {
    return a.p_ == b.p_ && a.k_ == b.k_ && a.value_ == b.value_;
}

Valuation valuation(const PadicInt& x) { return x.valuation(); }
mpq_class norm(const PadicInt& x) { return x.norm(); }

mpq_class dist(const PadicInt& x, const PadicInt& y) { return x.sub(y).norm(); }

Valuation dist_valuation(const PadicInt& x, const PadicInt& y) { return x.sub(y).valuation(); }

mpq_class measure_g(const PadicInt& u) {
    // sum a_j p^-(j+1) = (digit-reversed value) / p^K
    auto ds = u.digits();
    mpz_class num(0);
    for (std::size_t j = 0; j < ds.size(); ++j) {
        num *= static_cast<unsigned long>(u.prime());
        num += static_cast<unsigned long>(ds[j]);
    }
    mpq_class g(num, u.modulus());
    g.canonicalize();
    return g;
}

bool binomial_valuation_check(const PadicInt& gamma, const PadicInt& u, const mpz_class& n) {
    if (n <= 0) throw PrecisionExceeded("n must be a positive integer");
    const std::uint64_t p = gamma.prime();
    const unsigned k = gamma.precision();
    Valuation vg = gamma.valuation();
    Valuation vu = u.valuation();
    if (vg.v != 0) throw PrecisionExceeded("gamma must lie on the unit sphere");
    if (vu.v < 1) throw PrecisionExceeded("u must satisfy |u|_p <= 1/p");
    if (vu.at_floor) throw PrecisionExceeded("u vanishes at precision K");
    unsigned vn = integer_valuation(n, p);
    if (vn + static_cast<unsigned>(vu.v) >= k)
        throw PrecisionExceeded("o_p(n) + o_p(u) must stay below K");
    if (p == 2 && vn >= 1 && vu.v == 1)
        throw PrecisionExceeded("p=2 requires |u|_2 <= 1/4 when 2 | n");

    PadicInt lhs = gamma.add(u).pow(n).sub(gamma.pow(n));
    Valuation vl = lhs.valuation();
    return !vl.at_floor && vl.v == static_cast<int>(vn) + vu.v;
}

} // namespace prds
