#include "prds/rational.hpp"

#include <cstdio>

#include "prds/errors.hpp"

namespace prds {

mpq_class parse_rational(const std::string& text) {
    if (text.empty()) throw ValidationError("empty rational");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        mpq_class q;
        if (q.set_str(text, 10) != 0) throw ValidationError("bad rational: " + text);
        if (q.get_den() == 0) throw ValidationError("zero denominator: " + text);
        q.canonicalize();
        return q;
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        mpz_class n;
        if (n.set_str(text, 10) != 0) throw ValidationError("bad rational: " + text);
        return mpq_class(n);
    }
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::size_t frac_len = text.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+") throw ValidationError("bad rational: " + text);
    mpz_class num;
    if (num.set_str(digits, 10) != 0) throw ValidationError("bad rational: " + text);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    mpq_class q(num, den);
    q.canonicalize();
    return q;
}

std::string rational_str(const mpq_class& q) {
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace prds
