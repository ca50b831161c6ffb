#include "hpn/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>
#include <ostream>

namespace hpn {

namespace {

using wide = __int128;

constexpr wide kMax = std::numeric_limits<std::int64_t>::max();
constexpr wide kMin = std::numeric_limits<std::int64_t>::min();

wide gcd_wide(wide a, wide b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        wide t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::int64_t parse_int(std::string_view text, std::string_view whole) {
    std::int64_t value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc::result_out_of_range) {
        throw ArithmeticOverflow("rational literal out of range: " + std::string(whole));
    }
    if (ec != std::errc() || ptr != last || first == last) {
        throw std::invalid_argument("malformed rational: \"" + std::string(whole) + "\"");
    }
    return value;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    *this = from_wide(num, den);
}

Rational Rational::from_wide(wide num, wide den) {
    if (den == 0) throw std::domain_error("division by zero");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    wide g = gcd_wide(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num > kMax || num < kMin || den > kMax) {
        throw ArithmeticOverflow("rational result exceeds 64-bit range");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
}

std::int64_t Rational::floor() const noexcept {
    std::int64_t q = num_ / den_;
    if ((num_ % den_ != 0) && (num_ < 0)) --q;
    return q;
}

std::int64_t Rational::ceil() const noexcept {
    std::int64_t q = num_ / den_;
    if ((num_ % den_ != 0) && (num_ > 0)) ++q;
    return q;
}

double Rational::to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty rational");
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto n = parse_int(text.substr(0, slash), text);
        auto d = parse_int(text.substr(slash + 1), text);
        if (d == 0) throw std::invalid_argument("zero denominator in \"" + std::string(text) + "\"");
        return Rational(n, d);
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        auto int_part = text.substr(0, dot);
        auto frac_part = text.substr(dot + 1);
        if (frac_part.empty() || frac_part.size() > 18) {
            throw std::invalid_argument("malformed decimal: \"" + std::string(text) + "\"");
        }
        for (char c : frac_part) {
            if (c < '0' || c > '9') throw std::invalid_argument("malformed decimal: \"" + std::string(text) + "\"");
        }
        bool negative = !int_part.empty() && int_part.front() == '-';
        std::string_view digits = int_part;
        if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) digits.remove_prefix(1);
        std::int64_t whole = digits.empty() ? 0 : parse_int(digits, text);
        std::int64_t frac = parse_int(frac_part, text);
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
        Rational r = Rational(whole) + Rational(frac, scale);
        return negative ? -r : r;
    }
    return Rational(parse_int(text, text));
}

Rational Rational::operator-() const { return from_wide(-static_cast<wide>(num_), den_); }

Rational& Rational::operator+=(const Rational& rhs) {
    if (den_ == rhs.den_) {
        *this = from_wide(static_cast<wide>(num_) + rhs.num_, den_);
    } else {
        *this = from_wide(static_cast<wide>(num_) * rhs.den_ + static_cast<wide>(rhs.num_) * den_,
                          static_cast<wide>(den_) * rhs.den_);
    }
    return *this;
}

Rational& Rational::operator-=(const Rational& rhs) { return *this += -rhs; }

Rational& Rational::operator*=(const Rational& rhs) {
    *this = from_wide(static_cast<wide>(num_) * rhs.num_, static_cast<wide>(den_) * rhs.den_);
    return *this;
}

Rational& Rational::operator/=(const Rational& rhs) {
    if (rhs.num_ == 0) throw std::domain_error("division by zero");
    *this = from_wide(static_cast<wide>(num_) * rhs.den_, static_cast<wide>(den_) * rhs.num_);
    return *this;
}

std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs) noexcept {
    wide l = static_cast<wide>(lhs.num_) * rhs.den_;
    wide r = static_cast<wide>(rhs.num_) * lhs.den_;
    return l <=> r;
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

const Rational& ExtRational::value() const {
    if (infinite_) throw std::logic_error("value() of infinite quantity");
    return value_;
}

double ExtRational::to_double() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_.to_double();
}

std::string ExtRational::str() const { return infinite_ ? "inf" : value_.str(); }

ExtRational ExtRational::parse(std::string_view text) {
    if (text == "inf" || text == "Infinity" || text == "infinity") return infinity();
    return Rational::parse(text);
}

ExtRational operator*(const ExtRational& a, const ExtRational& b) {
    if (a.is_zero() || b.is_zero()) return Rational(0);
    if (a.infinite_ || b.infinite_) {
        if (a.is_negative() || b.is_negative()) throw std::domain_error("negative times infinity");
        return ExtRational::infinity();
    }
    return a.value_ * b.value_;
}

ExtRational operator+(const ExtRational& a, const ExtRational& b) {
    if (a.infinite_ || b.infinite_) return ExtRational::infinity();
    return a.value_ + b.value_;
}

std::strong_ordering operator<=>(const ExtRational& a, const ExtRational& b) noexcept {
    if (a.infinite_ && b.infinite_) return std::strong_ordering::equal;
    if (a.infinite_) return std::strong_ordering::greater;
    if (b.infinite_) return std::strong_ordering::less;
    return a.value_ <=> b.value_;
}

std::ostream& operator<<(std::ostream& os, const ExtRational& r) { return os << r.str(); }

}  // namespace hpn
