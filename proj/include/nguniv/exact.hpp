#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace nguniv {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class Ordering { Less, Equal, Greater };

Rational parse_rational(const std::string& text);
std::string rational_to_string(const Rational& q);
double rational_to_double(const Rational& q);

// q + m*kappa + n*delta with kappa, delta formal positive infinitesimals.
class ExactValue {
public:
    ExactValue() = default;
    ExactValue(long long q) : q_(q) {}
    ExactValue(Rational q, long long kappa = 0, long long delta = 0)
        : q_(std::move(q)), kappa_(kappa), delta_(delta) {}

    static ExactValue kappa(long long m = 1) { return {Rational(0), m, 0}; }
    static ExactValue delta(long long n = 1) { return {Rational(0), 0, n}; }
    static ExactValue frac(long long num, long long den) { return {Rational(num, den)}; }
    static ExactValue parse(const std::string& text);

    const Rational& rational_part() const { return q_; }
    long long kappa_coeff() const { return kappa_; }
    long long delta_coeff() const { return delta_; }
    bool is_zero() const { return q_ == 0 && kappa_ == 0 && delta_ == 0; }
    bool is_rational() const { return kappa_ == 0 && delta_ == 0; }

    ExactValue operator-() const { return {-q_, -kappa_, -delta_}; }
    ExactValue& operator+=(const ExactValue& o);
    ExactValue& operator-=(const ExactValue& o);
    ExactValue& operator*=(long long s);
    // Rational scaling; throws std::domain_error if an infinitesimal
    // coefficient would leave the integers.
    ExactValue scaled(const Rational& s) const;

    friend ExactValue operator+(ExactValue a, const ExactValue& b) { return a += b; }
    friend ExactValue operator-(ExactValue a, const ExactValue& b) { return a -= b; }
    friend ExactValue operator*(ExactValue a, long long s) { return a *= s; }
    friend ExactValue operator*(long long s, ExactValue a) { return a *= s; }
    friend bool operator==(const ExactValue& a, const ExactValue& b) {
        return a.q_ == b.q_ && a.kappa_ == b.kappa_ && a.delta_ == b.delta_;
    }
    friend bool operator!=(const ExactValue& a, const ExactValue& b) { return !(a == b); }

    // Value at concrete small kappa, delta.
    double evaluate(double kappa, double delta) const;
    std::string to_string() const;

private:
    Rational q_{0};
    long long kappa_ = 0;
    long long delta_ = 0;
};

struct CompareResult {
    Ordering order;
    // True when the rational parts tie and the delta/kappa coefficients
    // disagree in sign, so the verdict rests on the delta-before-kappa rule.
    bool priority_decided;
};

CompareResult compare_detailed(const ExactValue& a, const ExactValue& b);
Ordering compare(const ExactValue& a, const ExactValue& b);
ExactValue sum(const std::vector<ExactValue>& values);

inline bool operator<(const ExactValue& a, const ExactValue& b) { return compare(a, b) == Ordering::Less; }
inline bool operator>(const ExactValue& a, const ExactValue& b) { return compare(a, b) == Ordering::Greater; }
inline bool operator<=(const ExactValue& a, const ExactValue& b) { return compare(a, b) != Ordering::Greater; }
inline bool operator>=(const ExactValue& a, const ExactValue& b) { return compare(a, b) != Ordering::Less; }

const char* ordering_name(Ordering o);

}  // namespace nguniv
