#include "coinsearch/rational.hpp"

#include <cctype>

namespace coinsearch {

std::string to_fraction_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

namespace {

// digit-by-digit accumulation; cpp_int's string constructor would read a
// leading 0 as an octal prefix
BigInt parse_bigint(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty integer literal");
    std::size_t i = 0;
    bool negative = false;
    if (text[0] == '+' || text[0] == '-') {
        negative = text[0] == '-';
        i = 1;
    }
    if (i == text.size()) throw std::invalid_argument("bad integer literal");
    BigInt v = 0;
    for (; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw std::invalid_argument("bad integer literal");
        v = v * 10 + (text[i] - '0');
    }
    return negative ? -v : v;
}

} // namespace

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational literal");
    auto bad = [&]() -> std::invalid_argument {
        return std::invalid_argument("bad rational literal: '" + text + "'");
    };

    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        try {
            const BigInt num = parse_bigint(text.substr(0, slash));
            const BigInt den = parse_bigint(text.substr(slash + 1));
            if (den == 0) throw bad();
            return Rational(num, den);
        } catch (const std::invalid_argument&) {
            throw bad();
        }
    }

    const auto dot = text.find('.');
    std::string digits;
    std::size_t frac_len = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (i == 0 && (ch == '+' || ch == '-')) {
            digits.push_back(ch);
        } else if (ch == '.') {
            if (i != dot) throw bad();
        } else if (std::isdigit(static_cast<unsigned char>(ch))) {
            digits.push_back(ch);
            if (dot != std::string::npos && i > dot) ++frac_len;
        } else {
            throw bad();
        }
    }
    if (digits.empty() || digits == "+" || digits == "-") throw bad();

    try {
        const BigInt scaled = parse_bigint(digits);
        BigInt den = 1;
        for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
        return Rational(scaled, den);
    } catch (const std::invalid_argument&) {
        throw bad();
    }
}

} // namespace coinsearch
