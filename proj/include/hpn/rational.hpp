#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hpn {

/// Raised when an exact computation leaves the 64-bit numerator/denominator range.
class ArithmeticOverflow : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Exact rational number with a normalized 64-bit numerator and a positive
/// 64-bit denominator. Every operation is checked; a result that does not fit
/// throws ArithmeticOverflow instead of wrapping.
class Rational {
public:
    constexpr Rational() noexcept = default;
    constexpr Rational(std::int64_t value) noexcept : num_(value) {}  // NOLINT(implicit)
    Rational(std::int64_t num, std::int64_t den);

    [[nodiscard]] constexpr std::int64_t num() const noexcept { return num_; }
    [[nodiscard]] constexpr std::int64_t den() const noexcept { return den_; }

    [[nodiscard]] constexpr bool is_zero() const noexcept { return num_ == 0; }
    [[nodiscard]] constexpr bool is_positive() const noexcept { return num_ > 0; }
    [[nodiscard]] constexpr bool is_negative() const noexcept { return num_ < 0; }
    [[nodiscard]] constexpr bool is_integer() const noexcept { return den_ == 1; }

    [[nodiscard]] std::int64_t floor() const noexcept;
    [[nodiscard]] std::int64_t ceil() const noexcept;
    [[nodiscard]] double to_double() const noexcept;

    /// Canonical text form: "p" for integers, "p/q" otherwise.
    [[nodiscard]] std::string str() const;

    /// Accepts "p", "p/q", "-p/q" and finite decimals such as "3.5".
    static Rational parse(std::string_view text);

    Rational operator-() const;
    Rational& operator+=(const Rational& rhs);
    Rational& operator-=(const Rational& rhs);
    Rational& operator*=(const Rational& rhs);
    Rational& operator/=(const Rational& rhs);

    friend Rational operator+(Rational lhs, const Rational& rhs) { return lhs += rhs; }
    friend Rational operator-(Rational lhs, const Rational& rhs) { return lhs -= rhs; }
    friend Rational operator*(Rational lhs, const Rational& rhs) { return lhs *= rhs; }
    friend Rational operator/(Rational lhs, const Rational& rhs) { return lhs /= rhs; }

    friend constexpr bool operator==(const Rational&, const Rational&) noexcept = default;
    friend std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs) noexcept;

private:
    static Rational from_wide(__int128 num, __int128 den);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

[[nodiscard]] inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
[[nodiscard]] inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

/// A non-negative rational extended with +infinity. Used for flow rates
/// (infinite = immediate transition), delays (infinite = never fires),
/// enabling degrees over an empty input set and maximal speeds.
class ExtRational {
public:
    constexpr ExtRational() noexcept = default;
    ExtRational(Rational value) noexcept : value_(value) {}  // NOLINT(implicit)
    ExtRational(std::int64_t value) noexcept : value_(value) {}  // NOLINT(implicit)

    static ExtRational infinity() noexcept {
        ExtRational r;
        r.infinite_ = true;
        return r;
    }

    [[nodiscard]] bool is_infinite() const noexcept { return infinite_; }
    [[nodiscard]] bool is_finite() const noexcept { return !infinite_; }
    [[nodiscard]] bool is_zero() const noexcept { return !infinite_ && value_.is_zero(); }
    [[nodiscard]] bool is_positive() const noexcept { return infinite_ || value_.is_positive(); }
    [[nodiscard]] bool is_negative() const noexcept { return !infinite_ && value_.is_negative(); }

    /// Finite value; throws std::logic_error on infinity.
    [[nodiscard]] const Rational& value() const;

    [[nodiscard]] double to_double() const noexcept;

    /// "inf" or the Rational canonical form.
    [[nodiscard]] std::string str() const;
    static ExtRational parse(std::string_view text);

    /// inf * 0 = 0, inf * k = inf for k > 0.
    friend ExtRational operator*(const ExtRational& a, const ExtRational& b);
    friend ExtRational operator+(const ExtRational& a, const ExtRational& b);

    friend bool operator==(const ExtRational& a, const ExtRational& b) noexcept {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }
    friend std::strong_ordering operator<=>(const ExtRational& a, const ExtRational& b) noexcept;

private:
    Rational value_;
    bool infinite_ = false;
};

std::ostream& operator<<(std::ostream& os, const ExtRational& r);

[[nodiscard]] inline ExtRational min(const ExtRational& a, const ExtRational& b) { return b < a ? b : a; }
[[nodiscard]] inline ExtRational max(const ExtRational& a, const ExtRational& b) { return a < b ? b : a; }

}  // namespace hpn
