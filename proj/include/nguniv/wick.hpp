#pragma once

#include "nguniv/exact.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nguniv {

struct Polynomial {
    std::vector<Rational> coeffs;  // coeffs[j] multiplies x^j

    Polynomial() = default;
    explicit Polynomial(std::vector<Rational> c) : coeffs(std::move(c)) { normalize(); }
    static Polynomial monomial(int n, const Rational& c = 1);

    void normalize();
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    Rational coeff(int j) const { return j < static_cast<int>(coeffs.size()) && j >= 0 ? coeffs[j] : Rational(0); }
    Rational operator()(const Rational& x) const;
    Polynomial derivative() const;
    bool is_zero() const { return coeffs.empty(); }
    bool even() const;
    bool odd() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Rational& s, const Polynomial& a);
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs == b.coeffs; }
    std::string to_string() const;
};

struct MomentSequence {
    std::vector<Rational> m;  // m[0] = 1

    static MomentSequence from_moments(std::vector<Rational> values);
    static MomentSequence point_mass(int order);
    // Centered Gaussian with variance c.
    static MomentSequence gaussian(const Rational& c, int order);
    // Law whose only nonzero cumulants are given (index = order).
    static MomentSequence from_cumulants(const std::vector<Rational>& kappa);
    static MomentSequence poisson(const Rational& lambda, int order);

    int order() const { return static_cast<int>(m.size()) - 1; }
    bool symmetric() const;
    void require(int n) const;
};

using Multiset = std::vector<int>;  // sorted labels
using CumulantTable = std::map<Multiset, Rational>;
using MomentTable = std::map<Multiset, Rational>;

// Every sub-multiset of a multiset, including the empty one.
std::vector<Multiset> sub_multisets(const Multiset& b);
Multiset multiset_difference(const Multiset& b, const Multiset& s);

template <class T>
std::map<Multiset, T> moments_to_cumulants_t(const std::map<Multiset, T>& moments) {
    std::map<Multiset, T> out;
    auto moment = [&](const Multiset& b) -> T {
        if (b.empty()) return T(1);
        auto it = moments.find(b);
        if (it == moments.end()) throw std::invalid_argument("missing sub-moment");
        return it->second;
    };
    std::function<T(const Multiset&)> cumulant = [&](const Multiset& b) -> T {
        auto it = out.find(b);
        if (it != out.end()) return it->second;
        // m(B) = sum over S containing the first position of k(S) m(B \ S)
        const int n = static_cast<int>(b.size());
        std::map<std::pair<Multiset, Multiset>, int> splits;
        for (uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
            Multiset s{b[0]}, rest;
            for (int i = 1; i < n; ++i) ((mask >> (i - 1)) & 1u ? s : rest).push_back(b[i]);
            if (rest.empty()) continue;
            ++splits[{s, rest}];
        }
        T value = moment(b);
        for (const auto& [sr, count] : splits) value -= T(count) * cumulant(sr.first) * moment(sr.second);
        out.emplace(b, value);
        return value;
    };
    for (const auto& [b, v] : moments)
        if (!b.empty()) cumulant(b);
    return out;
}

template <class T>
std::map<Multiset, T> cumulants_to_moments_t(const std::map<Multiset, T>& cumulants, const std::vector<Multiset>& targets) {
    std::map<Multiset, T> out;
    out[{}] = T(1);
    auto cumulant = [&](const Multiset& b) -> T {
        auto it = cumulants.find(b);
        return it == cumulants.end() ? T(0) : it->second;
    };
    std::function<T(const Multiset&)> moment = [&](const Multiset& b) -> T {
        auto it = out.find(b);
        if (it != out.end()) return it->second;
        const int n = static_cast<int>(b.size());
        T value(0);
        for (uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
            Multiset s{b[0]}, rest;
            for (int i = 1; i < n; ++i) ((mask >> (i - 1)) & 1u ? s : rest).push_back(b[i]);
            T c = cumulant(s);
            if (c != T(0)) value += c * moment(rest);
        }
        out.emplace(b, value);
        return value;
    };
    for (const auto& b : targets) moment(b);
    return out;
}

CumulantTable moments_to_cumulants(const MomentTable& moments, bool symmetric = false);
// Moments of every key of the table and of all their sub-multisets.
MomentTable cumulants_to_moments(const CumulantTable& table);
MomentTable cumulants_to_moments(const CumulantTable& table, const std::vector<Multiset>& targets);

// Univariate helpers: index = order.
std::vector<Rational> moment_to_cumulant_sequence(const MomentSequence& mu);

// All set partitions of {0..n-1} as block lists.
std::vector<std::vector<std::vector<int>>> set_partitions(int n);

struct WickTerm {
    uint32_t subset;  // positions of A kept inside the Wick product
    Rational coefficient;
};
// X_A = sum_B coefficient(B) :X_B:, keyed by position bitmask over A.
std::vector<WickTerm> wick_expand(const Multiset& a, const CumulantTable& cumulants);

Polynomial wick_polynomial(int n, const MomentSequence& mu);
Polynomial averaged_potential(const Polynomial& v, const MomentSequence& mu);

struct PolynomialFamily {
    Polynomial value;   // V_0
    Polynomial dtheta;  // dV_theta/dtheta at 0
};

struct PitchforkReport {
    std::vector<Rational> a_hat;  // a_hat[j] multiplies x^{2j+1} in <V>'
    Rational a_hat0_prime;
    Rational fourth_derivative;   // d^4<V>/dx^4 at 0, equal to 6 a_hat[1]
    bool verdict = false;
    std::vector<std::string> reasons;
};

PitchforkReport check_pitchfork(const PolynomialFamily& v, const MomentSequence& mu, bool strict = true);

using Pair = std::pair<int, int>;
using Pairing = std::vector<Pair>;  // sorted multiset of (k_j, l_j)

std::vector<Pairing> enumerate_pairings(int k, int l);
BigInt pairing_multiplicity(const Pairing& pi, int k, int l);
std::string pairing_to_string(const Pairing& pi);
Pairing parse_pairing(const std::string& text);
bool is_pairwise(const Pairing& pi);

BigInt binomial(int n, int k);
BigInt factorial(int n);

// Keys (a,b) index C_{a,b}; lambdas[0] is lambda_1.
Rational mass_counterterm(const std::vector<Rational>& lambdas, const std::map<std::pair<int, int>, Rational>& constants);
double mass_counterterm(const std::vector<double>& lambdas, const std::map<std::pair<int, int>, double>& constants);

double theta_schedule(double a1_hat, double a0_prime_hat, double c_log, double eps);

// a + b*log(1/eps)
struct LogLinear {
    Rational constant;
    Rational log_coeff;
};

struct CancellationReport {
    LogLinear lambda0;           // leading part of lambda_0 under the schedule
    bool log_cancels = false;
};
// Symbolic bookkeeping of eps^{-1} a0(theta) - C_eps with C_{2,2} = c_log log(1/eps) + c0.
CancellationReport symbolic_cancellation(const Rational& a1_hat, const Rational& a0_prime, const Rational& c_log,
                                         const Rational& c0);

}  // namespace nguniv
