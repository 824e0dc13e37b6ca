#include "nguniv/wick.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nguniv {

Polynomial Polynomial::monomial(int n, const Rational& c) {
    std::vector<Rational> v(n + 1, Rational(0));
    v[n] = c;
    return Polynomial(std::move(v));
}

void Polynomial::normalize() {
    while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
}

Rational Polynomial::operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    std::vector<Rational> d;
    for (size_t j = 1; j < coeffs.size(); ++j) d.push_back(coeffs[j] * static_cast<long long>(j));
    return Polynomial(std::move(d));
}

bool Polynomial::even() const {
    for (size_t j = 1; j < coeffs.size(); j += 2)
        if (coeffs[j] != 0) return false;
    return true;
}

bool Polynomial::odd() const {
    for (size_t j = 0; j < coeffs.size(); j += 2)
        if (coeffs[j] != 0) return false;
    return true;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Rational> c(std::max(a.coeffs.size(), b.coeffs.size()), Rational(0));
    for (size_t i = 0; i < a.coeffs.size(); ++i) c[i] += a.coeffs[i];
    for (size_t i = 0; i < b.coeffs.size(); ++i) c[i] += b.coeffs[i];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + Rational(-1) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> c(a.coeffs.size() + b.coeffs.size() - 1, Rational(0));
    for (size_t i = 0; i < a.coeffs.size(); ++i)
        for (size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
    return Polynomial(std::move(c));
}

Polynomial operator*(const Rational& s, const Polynomial& a) {
    std::vector<Rational> c = a.coeffs;
    for (auto& x : c) x *= s;
    return Polynomial(std::move(c));
}

std::string Polynomial::to_string() const {
    if (coeffs.empty()) return "0";
    std::string out;
    for (int j = degree(); j >= 0; --j) {
        const Rational& c = coeffs[j];
        if (c == 0) continue;
        bool neg = c < 0;
        Rational a = neg ? Rational(-c) : c;
        std::string body;
        if (j == 0 || a != 1) body = rational_to_string(a);
        if (j > 0) {
            if (!body.empty()) body += "*";
            body += "x";
            if (j > 1) body += "^" + std::to_string(j);
        }
        if (out.empty())
            out = (neg ? "-" : "") + body;
        else
            out += (neg ? " - " : " + ") + body;
    }
    return out;
}

MomentSequence MomentSequence::from_moments(std::vector<Rational> values) {
    if (values.empty() || values[0] != 1) throw std::invalid_argument("moment sequence needs m0 = 1");
    return MomentSequence{std::move(values)};
}

MomentSequence MomentSequence::point_mass(int order) {
    std::vector<Rational> m(order + 1, Rational(0));
    m[0] = 1;
    return MomentSequence{m};
}

MomentSequence MomentSequence::from_cumulants(const std::vector<Rational>& kappa) {
    // m_n = sum_{j=1}^{n} C(n-1, j-1) kappa_j m_{n-j}
    int order = static_cast<int>(kappa.size()) - 1;
    std::vector<Rational> m(order + 1, Rational(0));
    m[0] = 1;
    for (int n = 1; n <= order; ++n)
        for (int j = 1; j <= n; ++j) m[n] += Rational(binomial(n - 1, j - 1)) * kappa[j] * m[n - j];
    return MomentSequence{m};
}

MomentSequence MomentSequence::gaussian(const Rational& c, int order) {
    std::vector<Rational> kappa(std::max(order, 2) + 1, Rational(0));
    kappa[2] = c;
    auto mu = from_cumulants(kappa);
    mu.m.resize(order + 1);
    return mu;
}

MomentSequence MomentSequence::poisson(const Rational& lambda, int order) {
    std::vector<Rational> kappa(order + 1, lambda);
    kappa[0] = 0;
    return from_cumulants(kappa);
}

bool MomentSequence::symmetric() const {
    for (size_t j = 1; j < m.size(); j += 2)
        if (m[j] != 0) return false;
    return true;
}

void MomentSequence::require(int n) const {
    if (order() < n) throw std::invalid_argument("insufficient moments: need order " + std::to_string(n));
}

std::vector<Multiset> sub_multisets(const Multiset& b) {
    std::set<Multiset> out;
    const int n = static_cast<int>(b.size());
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        Multiset s;
        for (int i = 0; i < n; ++i)
            if ((mask >> i) & 1u) s.push_back(b[i]);
        out.insert(s);
    }
    return {out.begin(), out.end()};
}

Multiset multiset_difference(const Multiset& b, const Multiset& s) {
    Multiset out;
    std::set_difference(b.begin(), b.end(), s.begin(), s.end(), std::back_inserter(out));
    return out;
}

CumulantTable moments_to_cumulants(const MomentTable& moments, bool symmetric) {
    auto out = moments_to_cumulants_t<Rational>(moments);
    if (symmetric)
        for (auto& [b, v] : out)
            if (b.size() % 2 == 1) v = 0;
    return out;
}

MomentTable cumulants_to_moments(const CumulantTable& table) {
    std::vector<Multiset> targets;
    for (const auto& [b, v] : table)
        for (auto& s : sub_multisets(b)) targets.push_back(s);
    return cumulants_to_moments(table, targets);
}

MomentTable cumulants_to_moments(const CumulantTable& table, const std::vector<Multiset>& targets) {
    auto all = cumulants_to_moments_t<Rational>(table, targets);
    MomentTable out{{Multiset{}, Rational(1)}};
    for (const auto& t : targets) out[t] = all.at(t);
    return out;
}

std::vector<Rational> moment_to_cumulant_sequence(const MomentSequence& mu) {
    MomentTable table;
    for (int n = 1; n <= mu.order(); ++n) table[Multiset(n, 0)] = mu.m[n];
    auto c = moments_to_cumulants(table);
    std::vector<Rational> out(mu.order() + 1, Rational(0));
    for (int n = 1; n <= mu.order(); ++n) out[n] = c.at(Multiset(n, 0));
    return out;
}

std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
    std::vector<std::vector<std::vector<int>>> out;
    if (n == 0) {
        out.push_back({});
        return out;
    }
    std::vector<int> rgs(n, 0);
    std::function<void(int, int)> rec = [&](int i, int blocks) {
        if (i == n) {
            std::vector<std::vector<int>> p(blocks);
            for (int j = 0; j < n; ++j) p[rgs[j]].push_back(j);
            out.push_back(std::move(p));
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            rgs[i] = b;
            rec(i + 1, std::max(blocks, b + 1));
        }
    };
    rgs[0] = 0;
    rec(1, 1);
    return out;
}

std::vector<WickTerm> wick_expand(const Multiset& a, const CumulantTable& cumulants) {
    const int n = static_cast<int>(a.size());
    std::vector<WickTerm> out;
    auto cumulant = [&](const Multiset& b) -> Rational {
        auto it = cumulants.find(b);
        return it == cumulants.end() ? Rational(0) : it->second;
    };
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> rest;
        for (int i = 0; i < n; ++i)
            if (!((mask >> i) & 1u)) rest.push_back(a[i]);
        Rational coeff = 0;
        for (const auto& p : set_partitions(static_cast<int>(rest.size()))) {
            Rational term = 1;
            for (const auto& block : p) {
                Multiset lab;
                for (int j : block) lab.push_back(rest[j]);
                std::sort(lab.begin(), lab.end());
                term *= cumulant(lab);
                if (term == 0) break;
            }
            coeff += term;
        }
        out.push_back({mask, coeff});
    }
    return out;
}

Polynomial wick_polynomial(int n, const MomentSequence& mu) {
    if (n < 0) throw std::invalid_argument("negative Wick order");
    mu.require(n);
    // 1/M(t) = sum w_j t^j / j!
    std::vector<Rational> w(n + 1, Rational(0));
    w[0] = 1;
    for (int j = 1; j <= n; ++j) {
        Rational acc = 0;
        for (int i = 1; i <= j; ++i) acc += Rational(binomial(j, i)) * mu.m[i] * w[j - i];
        w[j] = -acc;
    }
    std::vector<Rational> c(n + 1, Rational(0));
    for (int j = 0; j <= n; ++j) c[j] = Rational(binomial(n, j)) * w[n - j];
    return Polynomial(std::move(c));
}

Polynomial averaged_potential(const Polynomial& v, const MomentSequence& mu) {
    if (v.is_zero()) return {};
    mu.require(v.degree());
    std::vector<Rational> c(v.coeffs.size(), Rational(0));
    for (int i = 0; i <= v.degree(); ++i)
        for (int j = 0; j <= i; ++j) c[j] += v.coeffs[i] * Rational(binomial(i, j)) * mu.m[i - j];
    return Polynomial(std::move(c));
}

PitchforkReport check_pitchfork(const PolynomialFamily& v, const MomentSequence& mu, bool strict) {
    if (strict) {
        if (!v.value.even() || !v.dtheta.even()) throw std::invalid_argument("potential is not symmetric");
        if (!mu.symmetric()) throw std::invalid_argument("law is not symmetric");
    }
    PitchforkReport r;
    Polynomial d0 = averaged_potential(v.value, mu).derivative();
    Polynomial d1 = averaged_potential(v.dtheta, mu).derivative();
    for (int j = 1; j <= d0.degree(); j += 2) r.a_hat.push_back(d0.coeff(j));
    if (r.a_hat.empty()) r.a_hat.push_back(0);
    while (r.a_hat.size() < 2) r.a_hat.push_back(0);
    // constant term of <V>' would break the odd form; surface it
    if (d0.coeff(0) != 0) r.reasons.push_back("averaged derivative has a constant term");
    r.a_hat0_prime = d1.coeff(1);
    r.fourth_derivative = 6 * r.a_hat[1];
    bool ok = true;
    if (!(r.a_hat[1] > 0)) {
        ok = false;
        r.reasons.push_back("a_hat_1 is not positive");
    }
    if (r.a_hat[0] != 0) {
        ok = false;
        r.reasons.push_back("a_hat_0 is not zero");
    }
    if (!(r.a_hat0_prime < 0)) {
        ok = false;
        r.reasons.push_back("a_hat_0' is not negative");
    }
    r.verdict = ok && d0.coeff(0) == 0;
    return r;
}

BigInt factorial(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

BigInt binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt r = 1;
    for (int i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

std::vector<Pairing> enumerate_pairings(int k, int l) {
    std::vector<Pairing> out;
    if (k < 1 || l < 1) return out;
    std::vector<Pair> cand;
    for (int a = 1; a <= k; ++a)
        for (int b = 1; b <= l; ++b) cand.push_back({a, b});
    // non-decreasing sequences over cand give each multiset once
    Pairing cur;
    std::function<void(size_t, int, int)> rec = [&](size_t start, int rk, int rl) {
        if (rk == 0 && rl == 0) {
            out.push_back(cur);
            return;
        }
        for (size_t i = start; i < cand.size(); ++i) {
            auto [a, b] = cand[i];
            if (a > rk || b > rl) continue;
            cur.push_back(cand[i]);
            rec(i, rk - a, rl - b);
            cur.pop_back();
        }
    };
    rec(0, k, l);
    return out;
}

BigInt pairing_multiplicity(const Pairing& pi, int k, int l) {
    int sk = 0, sl = 0;
    for (auto [a, b] : pi) {
        sk += a;
        sl += b;
    }
    if (sk != k || sl != l) throw std::invalid_argument("pairing does not match (k, l)");
    BigInt num = factorial(k) * factorial(l);
    BigInt den = 1;
    for (auto [a, b] : pi) den *= factorial(a) * factorial(b);
    std::map<Pair, int> reps;
    for (const auto& p : pi) ++reps[p];
    for (const auto& [p, c] : reps) den *= factorial(c);
    return num / den;
}

std::string pairing_to_string(const Pairing& pi) {
    std::string s = "{";
    for (size_t i = 0; i < pi.size(); ++i) {
        if (i) s += ",";
        s += "(" + std::to_string(pi[i].first) + "," + std::to_string(pi[i].second) + ")";
    }
    return s + "}";
}

Pairing parse_pairing(const std::string& text) {
    Pairing out;
    size_t i = 0;
    while ((i = text.find('(', i)) != std::string::npos) {
        size_t j = text.find(')', i);
        if (j == std::string::npos) throw std::invalid_argument("bad pairing: " + text);
        std::string body = text.substr(i + 1, j - i - 1);
        auto comma = body.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("bad pairing: " + text);
        out.push_back({std::stoi(body.substr(0, comma)), std::stoi(body.substr(comma + 1))});
        i = j + 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_pairwise(const Pairing& pi) {
    return !pi.empty() && std::all_of(pi.begin(), pi.end(), [](const Pair& p) { return p == Pair{1, 1}; });
}

namespace {
template <class T>
T counterterm_impl(const std::vector<T>& lambdas, const std::map<std::pair<int, int>, T>& constants) {
    T total(0);
    const int m = static_cast<int>(lambdas.size());
    auto get = [&](int a, int b) -> T {
        auto it = constants.find({a, b});
        if (it == constants.end())
            throw std::invalid_argument("missing constant C_{" + std::to_string(a) + "," + std::to_string(b) + "}");
        return it->second;
    };
    for (int k = 1; k <= m; ++k)
        for (int l = 1; l <= m; ++l) {
            T lk = lambdas[k - 1], ll = lambdas[l - 1];
            if (lk == T(0) || ll == T(0)) continue;
            T c1 = get(2 * k - 1, 2 * l + 1);
            T c2 = get(2 * k, 2 * l);
            total += lk * ll * (T((2 * k + 1) * (2 * k)) * c1 + T((2 * k + 1) * (2 * l + 1)) * c2);
        }
    return total;
}
}  // namespace

Rational mass_counterterm(const std::vector<Rational>& lambdas, const std::map<std::pair<int, int>, Rational>& constants) {
    return counterterm_impl(lambdas, constants);
}

double mass_counterterm(const std::vector<double>& lambdas, const std::map<std::pair<int, int>, double>& constants) {
    return counterterm_impl(lambdas, constants);
}

double theta_schedule(double a1_hat, double a0_prime_hat, double c_log, double eps) {
    if (a0_prime_hat == 0) throw std::domain_error("a_hat_0' = 0: pitchfork assumption violated");
    if (!(eps > 0 && eps < 1)) throw std::domain_error("eps must lie in (0,1)");
    return 9.0 * a1_hat * a1_hat * c_log / a0_prime_hat * eps * std::fabs(std::log(eps));
}

CancellationReport symbolic_cancellation(const Rational& a1_hat, const Rational& a0_prime, const Rational& c_log,
                                         const Rational& c0) {
    if (a0_prime == 0) throw std::domain_error("a_hat_0' = 0: pitchfork assumption violated");
    // theta = t * eps * log(1/eps), so eps^{-1} a0'(theta) = a0' t log(1/eps)
    Rational t = 9 * a1_hat * a1_hat * c_log / a0_prime;
    LogLinear forcing{0, a0_prime * t};
    std::map<std::pair<int, int>, Rational> log_part{{{1, 3}, 0}, {{2, 2}, c_log}};
    std::map<std::pair<int, int>, Rational> const_part{{{1, 3}, 0}, {{2, 2}, c0}};
    std::vector<Rational> lambdas{a1_hat};
    CancellationReport r;
    r.lambda0.log_coeff = forcing.log_coeff - mass_counterterm(lambdas, log_part);
    r.lambda0.constant = forcing.constant - mass_counterterm(lambdas, const_part);
    r.log_cancels = r.lambda0.log_coeff == 0;
    return r;
}

}  // namespace nguniv
