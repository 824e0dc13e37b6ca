#include "nguniv/symbols.hpp"

#include "nguniv/wick.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <stdexcept>

namespace nguniv {

int parabolic_degree(const MultiIndex& k) { return 2 * k[0] + k[1] + k[2] + k[3]; }

namespace {

Symbol finish(SymbolNode node) {
    switch (node.kind) {
        case SymbolKind::Xi: node.key = "Xi"; break;
        case SymbolKind::Monomial:
            node.key = "X^(" + std::to_string(node.index[0]) + "," + std::to_string(node.index[1]) + "," +
                       std::to_string(node.index[2]) + "," + std::to_string(node.index[3]) + ")";
            break;
        case SymbolKind::Integ: node.key = "I(" + node.children[0]->key + ")"; break;
        case SymbolKind::Eps: node.key = "E^" + std::to_string(node.power) + "(" + node.children[0]->key + ")"; break;
        case SymbolKind::Product:
            for (size_t i = 0; i < node.children.size(); ++i) {
                if (i) node.key += "*";
                node.key += node.children[i]->key;
            }
            break;
    }
    return std::make_shared<const SymbolNode>(std::move(node));
}

}  // namespace

Symbol make_xi() {
    static const Symbol xi = finish(SymbolNode{});
    return xi;
}

Symbol make_monomial(const MultiIndex& k) {
    for (int c : k)
        if (c < 0) throw std::invalid_argument("negative multi-index");
    SymbolNode n;
    n.kind = SymbolKind::Monomial;
    n.index = k;
    return finish(std::move(n));
}

Symbol make_one() {
    static const Symbol one = make_monomial({0, 0, 0, 0});
    return one;
}

Symbol make_integ(const Symbol& child) {
    SymbolNode n;
    n.kind = SymbolKind::Integ;
    n.children = {child};
    return finish(std::move(n));
}

Symbol make_eps(int power, const Symbol& child) {
    if (power < 0) throw std::invalid_argument("E power must be a non-negative integer");
    if (power == 0) return child;
    if (child->kind == SymbolKind::Eps) return make_eps(power + child->power, child->children[0]);
    SymbolNode n;
    n.kind = SymbolKind::Eps;
    n.power = power;
    n.children = {child};
    return finish(std::move(n));
}

std::vector<Symbol> factors_of(const Symbol& s) {
    if (s->kind == SymbolKind::Product) return s->children;
    if (is_one(s)) return {};
    return {s};
}

Symbol make_product(const std::vector<Symbol>& factors) {
    std::vector<Symbol> flat;
    MultiIndex mono{0, 0, 0, 0};
    for (const auto& f : factors)
        for (const auto& g : factors_of(f)) {
            if (g->kind == SymbolKind::Monomial) {
                for (int i = 0; i < 4; ++i) mono[i] += g->index[i];
            } else {
                flat.push_back(g);
            }
        }
    if (parabolic_degree(mono) > 0) flat.push_back(make_monomial(mono));
    if (flat.empty()) return make_one();
    if (flat.size() == 1) return flat[0];
    std::sort(flat.begin(), flat.end(), SymbolLess{});
    SymbolNode n;
    n.kind = SymbolKind::Product;
    n.children = std::move(flat);
    return finish(std::move(n));
}

Symbol make_psi() {
    static const Symbol psi = make_integ(make_xi());
    return psi;
}

Symbol psi_power(int n) {
    return make_product(std::vector<Symbol>(static_cast<size_t>(std::max(n, 0)), make_psi()));
}

bool symbol_equal(const Symbol& a, const Symbol& b) { return a->key == b->key; }
bool is_one(const Symbol& s) { return s->kind == SymbolKind::Monomial && parabolic_degree(s->index) == 0; }
bool is_psi(const Symbol& s) { return s->kind == SymbolKind::Integ && s->children[0]->kind == SymbolKind::Xi; }

ExactValue homogeneity(const Symbol& s) {
    switch (s->kind) {
        case SymbolKind::Xi: return ExactValue::frac(-5, 2) + ExactValue::kappa(-1);
        case SymbolKind::Monomial: return ExactValue(parabolic_degree(s->index));
        case SymbolKind::Integ: return homogeneity(s->children[0]) + ExactValue(2);
        case SymbolKind::Eps: return homogeneity(s->children[0]) + ExactValue(s->power);
        case SymbolKind::Product: {
            ExactValue h;
            for (const auto& c : s->children) h += homogeneity(c);
            return h;
        }
    }
    return {};
}

const std::string& to_string(const Symbol& s) { return s->key; }

std::string pretty(const Symbol& s) {
    switch (s->kind) {
        case SymbolKind::Xi: return "Xi";
        case SymbolKind::Monomial: {
            const auto& k = s->index;
            if (parabolic_degree(k) == 0) return "1";
            int nz = 0, which = 0;
            for (int i = 0; i < 4; ++i)
                if (k[i]) {
                    ++nz;
                    which = i;
                }
            if (nz == 1) {
                std::string b = "X_" + std::to_string(which);
                return k[which] == 1 ? b : b + "^" + std::to_string(k[which]);
            }
            return s->key;
        }
        case SymbolKind::Integ: return is_psi(s) ? "Psi" : "I(" + pretty(s->children[0]) + ")";
        case SymbolKind::Eps:
            return (s->power == 1 ? std::string("E") : "E^" + std::to_string(s->power)) + "(" + pretty(s->children[0]) +
                   ")";
        case SymbolKind::Product: {
            std::string out;
            const auto& ch = s->children;
            for (size_t i = 0; i < ch.size();) {
                size_t j = i;
                while (j < ch.size() && ch[j]->key == ch[i]->key) ++j;
                if (!out.empty()) out += "*";
                out += pretty(ch[i]);
                if (j - i > 1) out += "^" + std::to_string(j - i);
                i = j;
            }
            return out;
        }
    }
    return s->key;
}

namespace {

class Parser {
public:
    explicit Parser(const std::string& t) {
        for (char c : t)
            if (!std::isspace(static_cast<unsigned char>(c))) s_ += c;
    }

    Symbol parse() {
        Symbol r = expr();
        if (i_ != s_.size()) fail("trailing input");
        return r;
    }

private:
    std::string s_;
    size_t i_ = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw std::invalid_argument("cannot parse symbol '" + s_ + "': " + why + " at " + std::to_string(i_));
    }
    bool eat(const std::string& tok) {
        if (s_.compare(i_, tok.size(), tok) == 0) {
            i_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(const std::string& tok) {
        if (!eat(tok)) fail("expected '" + tok + "'");
    }
    int integer() {
        size_t j = i_;
        while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
        if (j == i_) fail("expected integer");
        int v = std::stoi(s_.substr(i_, j - i_));
        i_ = j;
        return v;
    }
    Symbol expr() {
        std::vector<Symbol> fs{factor()};
        while (eat("*")) fs.push_back(factor());
        return make_product(fs);
    }
    Symbol factor() {
        Symbol a = atom();
        // X^( is consumed by atom, so a remaining '^' is a power
        if (eat("^")) {
            int n = integer();
            return make_product(std::vector<Symbol>(static_cast<size_t>(n), a));
        }
        return a;
    }
    Symbol atom() {
        if (eat("Xi")) return make_xi();
        if (eat("Psi")) return make_psi();
        if (eat("1")) return make_one();
        if (eat("X^(")) {
            MultiIndex k{};
            for (int j = 0; j < 4; ++j) {
                if (j) expect(",");
                k[j] = integer();
            }
            expect(")");
            return make_monomial(k);
        }
        if (eat("X_")) {
            int i = integer();
            if (i > 3) fail("coordinate index out of range");
            MultiIndex k{};
            k[i] = 1;
            return make_monomial(k);
        }
        if (eat("I(")) {
            Symbol c = expr();
            expect(")");
            return make_integ(c);
        }
        if (eat("E")) {
            int p = 1;
            if (eat("^")) p = integer();
            if (p < 1) fail("E power must be positive");
            expect("(");
            Symbol c = expr();
            expect(")");
            return make_eps(p, c);
        }
        if (eat("(")) {
            Symbol c = expr();
            expect(")");
            return c;
        }
        fail("unexpected token");
    }
};

}  // namespace

Symbol parse_symbol(const std::string& text) { return Parser(text).parse(); }

Symbol family_one(int k, int n) {
    if (k < 1 || n < 0 || n > 3 || 2 * k + 1 - n < 0) throw std::invalid_argument("invalid first family index");
    return make_eps(k - 1, psi_power(2 * k + 1 - n));
}

bool family_two_valid(int k, int l) { return k >= 1 && l >= 2 && !(k % 2 == 1 && l % 2 == 0); }

Symbol family_two(int k, int l) {
    if (!family_two_valid(k, l)) throw std::invalid_argument("invalid second family index");
    Symbol inner = make_eps(l / 2 - 1, psi_power(l));
    return make_eps((k - 1) / 2, make_product({psi_power(k), make_integ(inner)}));
}

ExactValue family_one_homogeneity(int k, int n) {
    return ExactValue(Rational(n - 3, 2), -(2 * k + 1 - n), 0);
}

ExactValue family_two_homogeneity(int k, int l) {
    // floor((k-1)/2) + floor(l/2) - (k+l)(1/2 + kappa) + 1
    Rational q = Rational((k - 1) / 2 + l / 2 + 1) - Rational(k + l, 2);
    return ExactValue(q, -(k + l), 0);
}

SymbolShape recognize(const Symbol& s) {
    SymbolShape out;
    int p = 0;
    Symbol body = s;
    if (body->kind == SymbolKind::Eps) {
        p = body->power;
        body = body->children[0];
    }
    auto fs = factors_of(body);
    int psis = 0;
    std::vector<Symbol> rest;
    for (const auto& f : fs) (is_psi(f) ? (void)++psis : rest.push_back(f));
    int k = p + 1;
    if (rest.empty()) {
        int n = 2 * k + 1 - psis;
        if (n >= 0 && n <= 3 && psis > 0) {
            out.family = SymbolShape::First;
            out.k = k;
            out.n = n;
        }
        return out;
    }
    if (rest.size() != 1) return out;
    const Symbol& r = rest[0];
    if (r->kind == SymbolKind::Monomial) {
        int deg = parabolic_degree(r->index);
        if (deg == 1 && r->index[0] == 0 && psis == 2 * k) {
            out.family = SymbolShape::MonomialPsi;
            out.k = k;
            for (int i = 1; i < 4; ++i)
                if (r->index[i]) out.coordinate = i;
        }
        return out;
    }
    if (r->kind != SymbolKind::Integ || psis < 1) return out;
    Symbol inner = r->children[0];
    int q = 0;
    if (inner->kind == SymbolKind::Eps) {
        q = inner->power;
        inner = inner->children[0];
    }
    auto ifs = factors_of(inner);
    if (ifs.empty() || !std::all_of(ifs.begin(), ifs.end(), is_psi)) return out;
    int i = static_cast<int>(ifs.size());
    if (!family_two_valid(psis, i)) return out;
    if (p != (psis - 1) / 2 || q != i / 2 - 1) return out;
    out.family = SymbolShape::Second;
    out.k = psis;
    out.l = i;
    out.delta_tau = (psis + i) % 2;
    return out;
}

std::vector<GeneratedSymbol> generate_symbols(int m, const ExactValue& cap) {
    if (m < 1) throw std::invalid_argument("generate_symbols requires m >= 1");
    std::map<std::string, GeneratedSymbol> all;
    auto add = [&](const Symbol& s, bool u) -> bool {
        auto [it, fresh] = all.try_emplace(s->key, GeneratedSymbol{s, homogeneity(s)});
        bool& flag = u ? it->second.in_u : it->second.in_v;
        bool changed = !flag;
        flag = true;
        return fresh || changed;
    };
    // monomial seeds
    const Rational& cq = cap.rational_part();
    int maxdeg = std::max(0, static_cast<int>(BigInt(numerator(cq) / denominator(cq)).convert_to<long long>()) + 1);
    for (int a = 0; 2 * a <= maxdeg; ++a)
        for (int b = 0; b <= maxdeg; ++b)
            for (int c = 0; c <= maxdeg; ++c)
                for (int d = 0; d <= maxdeg; ++d) {
                    MultiIndex k{a, b, c, d};
                    if (ExactValue(parabolic_degree(k)) < cap) add(make_monomial(k), true);
                }
    add(make_xi(), false);

    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<GeneratedSymbol> u, v;
        for (const auto& [key, g] : all) {
            if (g.in_u && !is_one(g.symbol)) u.push_back(g);
            if (g.in_v) v.push_back(g);
        }
        for (const auto& g : v) {
            Symbol t = make_integ(g.symbol);
            if (homogeneity(t) < cap) changed |= add(t, true);
        }
        std::sort(u.begin(), u.end(), [](const GeneratedSymbol& a, const GeneratedSymbol& b) {
            auto o = compare(a.homogeneity, b.homogeneity);
            return o == Ordering::Equal ? a.symbol->key < b.symbol->key : o == Ordering::Less;
        });
        for (int k = 1; k <= m; ++k) {
            const int slots = 2 * k + 1;
            std::vector<Symbol> cur;
            std::function<void(size_t, ExactValue)> rec = [&](size_t start, ExactValue partial) {
                ExactValue h = partial + ExactValue(k - 1);
                if (h < cap) changed |= add(make_eps(k - 1, make_product(cur)), false);
                if (static_cast<int>(cur.size()) == slots) return;
                for (size_t i = start; i < u.size(); ++i) {
                    // u is sorted, so u[i] bounds every later factor from below
                    ExactValue lo = u[i].homogeneity;
                    ExactValue worst = h + lo;
                    if (lo < ExactValue(0)) worst += lo * (slots - static_cast<int>(cur.size()) - 1);
                    if (!(worst < cap)) {
                        if (!(lo < ExactValue(0))) break;
                        continue;
                    }
                    cur.push_back(u[i].symbol);
                    rec(i, partial + lo);
                    cur.pop_back();
                }
            };
            rec(0, ExactValue(0));
        }
    }
    std::vector<GeneratedSymbol> out;
    for (auto& [key, g] : all) out.push_back(g);
    std::sort(out.begin(), out.end(), [](const GeneratedSymbol& a, const GeneratedSymbol& b) {
        auto o = compare(a.homogeneity, b.homogeneity);
        return o == Ordering::Equal ? a.symbol->key < b.symbol->key : o == Ordering::Less;
    });
    return out;
}

void add_term(SymbolCombination& c, const Symbol& s, const Rational& coeff) {
    if (coeff == 0) return;
    auto it = c.find(s);
    if (it == c.end()) {
        c.emplace(s, coeff);
        return;
    }
    it->second += coeff;
    if (it->second == 0) c.erase(it);
}

bool same(const SymbolCombination& a, const SymbolCombination& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
        if (ia->first->key != ib->first->key || ia->second != ib->second) return false;
    return true;
}

SymbolCombination multiply(const SymbolCombination& a, const SymbolCombination& b) {
    SymbolCombination out;
    for (const auto& [sa, ca] : a)
        for (const auto& [sb, cb] : b) add_term(out, make_product({sa, sb}), ca * cb);
    return out;
}

std::string to_string(const SymbolCombination& c) {
    if (c.empty()) return "0";
    std::string out;
    for (const auto& [s, q] : c) {
        bool neg = q < 0;
        Rational a = neg ? Rational(-q) : q;
        std::string body = (a == 1 ? std::string() : rational_to_string(a) + "*") + pretty(s);
        if (out.empty())
            out = (neg ? "-" : "") + body;
        else
            out += (neg ? " - " : " + ") + body;
    }
    return out;
}

namespace {

SymbolCombination map_linear(const SymbolCombination& c, const std::function<Symbol(const Symbol&)>& f) {
    SymbolCombination out;
    for (const auto& [s, q] : c) add_term(out, f(s), q);
    return out;
}

SymbolCombination wick_rec(const Symbol& s, const MomentSequence& mu) {
    SymbolCombination out;
    if (s->kind == SymbolKind::Xi || s->kind == SymbolKind::Monomial) {
        add_term(out, s, 1);
        return out;
    }
    if (s->kind == SymbolKind::Integ && !is_psi(s))
        return map_linear(wick_rec(s->children[0], mu), [](const Symbol& t) { return make_integ(t); });
    if (s->kind == SymbolKind::Eps) {
        int p = s->power;
        return map_linear(wick_rec(s->children[0], mu), [p](const Symbol& t) { return make_eps(p, t); });
    }
    // Psi or a product: the maximal Psi^n factor becomes W_n(Psi)
    int n = 0;
    std::vector<Symbol> others;
    for (const auto& f : factors_of(s)) (is_psi(f) ? (void)++n : others.push_back(f));
    Polynomial w = wick_polynomial(n, mu);
    for (int j = 0; j <= w.degree(); ++j) add_term(out, psi_power(j), w.coeff(j));
    for (const auto& f : others) out = multiply(out, wick_rec(f, mu));
    return out;
}

}  // namespace

SymbolCombination apply_wick_renorm(const Symbol& tau, const MomentSequence& mu) { return wick_rec(tau, mu); }

SymbolCombination apply_generator(int a, int b, const Symbol& tau) {
    SymbolCombination out;
    SymbolShape sh = recognize(tau);
    if (sh.family != SymbolShape::Second) return out;
    const int j = sh.k, i = sh.l;
    const int K = (j - 1) / 2 + 1, L = i / 2;
    if (a == 2 * K && b == 2 * L) {
        if (j == 2 * K && i == 2 * L) add_term(out, make_one(), 1);
        if (j == 2 * K && i == 2 * L + 1) add_term(out, make_psi(), 2 * L + 1);
    } else if (a == 2 * K - 1 && b == 2 * L + 1) {
        if (j == 2 * K - 1 && i == 2 * L + 1) add_term(out, make_one(), 1);
        if (j == 2 * K && i == 2 * L + 1) add_term(out, make_psi(), 2 * K);
    }
    return out;
}

SymbolCombination apply_mass_renorm(const Symbol& tau, const ConstantMap& constants) {
    SymbolCombination out;
    add_term(out, tau, 1);
    for (const auto& [ab, c] : constants)
        for (const auto& [s, q] : apply_generator(ab.first, ab.second, tau)) add_term(out, s, -c * q);
    return out;
}

SymbolCombination apply_mass_renorm(const SymbolCombination& tau, const ConstantMap& constants) {
    SymbolCombination out;
    for (const auto& [s, q] : tau)
        for (const auto& [t, r] : apply_mass_renorm(s, constants)) add_term(out, t, q * r);
    return out;
}

}  // namespace nguniv
