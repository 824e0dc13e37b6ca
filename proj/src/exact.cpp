#include "nguniv/exact.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace nguniv {

Rational parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty rational");
    auto slash = s.find('/');
    auto check_int = [](const std::string& t) {
        size_t i = (t.size() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
        if (i >= t.size()) throw std::invalid_argument("bad integer: " + t);
        for (; i < t.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(t[i]))) throw std::invalid_argument("bad integer: " + t);
    };
    auto to_int = [](std::string t) {
        if (!t.empty() && t[0] == '+') t.erase(0, 1);
        return BigInt(t);
    };
    if (slash == std::string::npos) {
        check_int(s);
        return Rational(to_int(s));
    }
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    check_int(num);
    check_int(den);
    BigInt d = to_int(den);
    if (d == 0) throw std::invalid_argument("zero denominator");
    return Rational(to_int(num), d);
}

std::string rational_to_string(const Rational& q) {
    std::ostringstream os;
    os << numerator(q);
    if (denominator(q) != 1) os << "/" << denominator(q);
    return os.str();
}

double rational_to_double(const Rational& q) { return q.convert_to<double>(); }

ExactValue& ExactValue::operator+=(const ExactValue& o) {
    q_ += o.q_;
    kappa_ += o.kappa_;
    delta_ += o.delta_;
    return *this;
}

ExactValue& ExactValue::operator-=(const ExactValue& o) {
    q_ -= o.q_;
    kappa_ -= o.kappa_;
    delta_ -= o.delta_;
    return *this;
}

ExactValue& ExactValue::operator*=(long long s) {
    q_ *= s;
    kappa_ *= s;
    delta_ *= s;
    return *this;
}

ExactValue ExactValue::scaled(const Rational& s) const {
    auto scale_int = [&](long long c) -> long long {
        Rational r = Rational(c) * s;
        if (denominator(r) != 1) throw std::domain_error("infinitesimal coefficient is not an integer after scaling");
        return numerator(r).convert_to<long long>();
    };
    return {q_ * s, scale_int(kappa_), scale_int(delta_)};
}

double ExactValue::evaluate(double kappa, double delta) const {
    return rational_to_double(q_) + kappa * static_cast<double>(kappa_) + delta * static_cast<double>(delta_);
}

std::string ExactValue::to_string() const {
    std::string out;
    bool has_q = q_ != 0 || (kappa_ == 0 && delta_ == 0);
    if (has_q) out = rational_to_string(q_);
    auto term = [&](long long c, const char* name) {
        if (c == 0) return;
        long long a = c < 0 ? -c : c;
        std::string body = (a == 1 ? std::string() : std::to_string(a) + "*") + name;
        if (out.empty())
            out = (c < 0 ? "-" : "") + body;
        else
            out += (c < 0 ? " - " : " + ") + body;
    };
    term(kappa_, "kappa");
    term(delta_, "delta");
    return out;
}

ExactValue ExactValue::parse(const std::string& text) {
    // Accepts sums of terms "q", "m*kappa", "kappa", "n*delta" separated by + or -.
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty value");
    ExactValue result;
    size_t i = 0;
    while (i < s.size()) {
        int sign = 1;
        if (s[i] == '+' || s[i] == '-') {
            sign = s[i] == '-' ? -1 : 1;
            ++i;
        }
        size_t j = i;
        while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
        std::string tok = s.substr(i, j - i);
        if (tok.empty()) throw std::invalid_argument("bad value: " + text);
        auto star = tok.find('*');
        std::string coeff = star == std::string::npos ? "" : tok.substr(0, star);
        std::string name = star == std::string::npos ? tok : tok.substr(star + 1);
        if (name == "kappa" || name == "delta") {
            long long c = coeff.empty() ? 1 : std::stoll(coeff);
            if (name == "kappa")
                result += kappa(sign * c);
            else
                result += delta(sign * c);
        } else {
            if (star != std::string::npos) throw std::invalid_argument("bad value: " + text);
            Rational q = parse_rational(tok);
            result += ExactValue(sign > 0 ? q : Rational(-q));
        }
        i = j;
    }
    return result;
}

namespace {
int sgn(long long v) { return (v > 0) - (v < 0); }
Ordering from_sign(int s) { return s < 0 ? Ordering::Less : (s > 0 ? Ordering::Greater : Ordering::Equal); }
}  // namespace

CompareResult compare_detailed(const ExactValue& a, const ExactValue& b) {
    if (a.rational_part() != b.rational_part())
        return {a.rational_part() < b.rational_part() ? Ordering::Less : Ordering::Greater, false};
    int sd = sgn(a.delta_coeff() - b.delta_coeff());
    int sk = sgn(a.kappa_coeff() - b.kappa_coeff());
    if (sd != 0) return {from_sign(sd), sk != 0 && sk != sd};
    return {from_sign(sk), false};
}

Ordering compare(const ExactValue& a, const ExactValue& b) { return compare_detailed(a, b).order; }

ExactValue sum(const std::vector<ExactValue>& values) {
    ExactValue total;
    for (const auto& v : values) total += v;
    return total;
}

const char* ordering_name(Ordering o) {
    switch (o) {
        case Ordering::Less: return "Less";
        case Ordering::Equal: return "Equal";
        case Ordering::Greater: return "Greater";
    }
    return "?";
}

}  // namespace nguniv
