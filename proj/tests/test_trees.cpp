#include "doctest.h"

#include "nguniv/symbols.hpp"
#include "nguniv/wick.hpp"

#include <set>

using namespace nguniv;

namespace {

std::set<std::string> keys_of(const std::vector<GeneratedSymbol>& gs) {
    std::set<std::string> out;
    for (const auto& g : gs) out.insert(g.symbol->key);
    return out;
}

// Naive closure: products of exactly 2k+1 elements of U (unit included), no
// pruning inside the enumeration, repeated until nothing changes.
std::set<std::string> naive_closure(int m, const ExactValue& cap) {
    std::map<std::string, Symbol> u, v;
    for (const MultiIndex& k : {MultiIndex{0, 0, 0, 0}, MultiIndex{0, 1, 0, 0}, MultiIndex{0, 0, 1, 0},
                                MultiIndex{0, 0, 0, 1}}) {
        auto s = make_monomial(k);
        if (homogeneity(s) < cap) u[s->key] = s;
    }
    v[make_xi()->key] = make_xi();
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [key, t] : std::map<std::string, Symbol>(v)) {
            auto s = make_integ(t);
            if (homogeneity(s) < cap && !u.count(s->key)) {
                u[s->key] = s;
                changed = true;
            }
        }
        std::vector<Symbol> ul;
        for (const auto& [key, s] : u) ul.push_back(s);
        for (int k = 1; k <= m; ++k) {
            std::vector<size_t> idx(2 * k + 1, 0);
            while (true) {
                std::vector<Symbol> fs;
                for (size_t i : idx) fs.push_back(ul[i]);
                auto s = make_eps(k - 1, make_product(fs));
                if (homogeneity(s) < cap && !v.count(s->key)) {
                    v[s->key] = s;
                    changed = true;
                }
                int p = static_cast<int>(idx.size()) - 1;
                while (p >= 0 && idx[p] == ul.size() - 1) --p;
                if (p < 0) break;
                ++idx[p];
                for (size_t q = p + 1; q < idx.size(); ++q) idx[q] = idx[p];
            }
        }
    }
    std::set<std::string> out;
    for (const auto& [k, s] : u) out.insert(k);
    for (const auto& [k, s] : v) out.insert(k);
    return out;
}

}  // namespace

TEST_CASE("parabolic degree") {
    CHECK(parabolic_degree({1, 0, 0, 0}) == 2);
    CHECK(parabolic_degree({0, 0, 0, 0}) == 0);
    CHECK(parabolic_degree({1, 1, 1, 1}) == 5);
}

TEST_CASE("canonical form and parsing") {
    auto a = parse_symbol("Psi^2*I(Psi^3)");
    auto b = parse_symbol("I(I(Xi)*I(Xi)*I(Xi))*I(Xi)*I(Xi)");
    CHECK(symbol_equal(a, b));
    CHECK(to_string(a) == "I(I(Xi)*I(Xi)*I(Xi))*I(Xi)*I(Xi)");
    CHECK(pretty(a) == "I(Psi^3)*Psi^2");
    CHECK(symbol_equal(parse_symbol("E(Psi^5)"), parse_symbol("E^1(I(Xi)^5)")));
    CHECK(symbol_equal(parse_symbol("X_1*X_1"), make_monomial({0, 2, 0, 0})));
    CHECK(is_one(parse_symbol("1*1")));
    CHECK(symbol_equal(parse_symbol("Psi*1"), make_psi()));
    CHECK_THROWS(parse_symbol("Psi^"));
    CHECK_THROWS(parse_symbol("E^0(Psi)"));
    CHECK_THROWS(parse_symbol("Foo"));
    for (const auto& g : generate_symbols(2)) {
        CHECK(symbol_equal(parse_symbol(to_string(g.symbol)), g.symbol));
        CHECK(symbol_equal(parse_symbol(pretty(g.symbol)), g.symbol));
    }
}

TEST_CASE("homogeneity examples") {
    CHECK(homogeneity(make_xi()).to_string() == "-5/2 - kappa");
    for (int k = 1; k <= 6; ++k)
        for (int n = 0; n <= 3; ++n) {
            auto h = homogeneity(family_one(k, n));
            CHECK(h == family_one_homogeneity(k, n));
            CHECK(h == ExactValue(Rational(n - 3, 2), -(2 * k + 1 - n), 0));
        }
    CHECK(homogeneity(family_two(2, 3)).to_string() == "-1/2 - 5*kappa");
    CHECK(family_two_homogeneity(2, 3).to_string() == "-1/2 - 5*kappa");
    CHECK(homogeneity(parse_symbol("I(Xi)")).to_string() == "-1/2 - kappa");
}

TEST_CASE("generated set for m = 1") {
    auto gs = generate_symbols(1);
    auto ks = keys_of(gs);
    for (const char* s : {"Psi", "Psi^2", "Psi^3", "Psi^2*I(Psi^3)", "Psi*I(Psi^3)", "Psi^2*I(Psi^2)", "Xi",
                          "X_1*Psi^2", "I(Psi^3)", "I(Psi^2)", "1"})
        CHECK_MESSAGE(ks.count(to_string(parse_symbol(s))) == 1, s);
    CHECK(ks.count(to_string(parse_symbol("Psi*I(Psi^2)"))) == 1);
    for (const auto& g : gs) CHECK(g.homogeneity < ExactValue::frac(3, 2));
    for (const auto& g : gs)
        if (is_psi(g.symbol)) CHECK((g.in_u && g.in_v));
    CHECK_THROWS(generate_symbols(0));
}

TEST_CASE("generated set for m = 2") {
    auto ks = keys_of(generate_symbols(2));
    CHECK(ks.count(to_string(parse_symbol("E(Psi^5)"))) == 1);
    CHECK(ks.count(to_string(parse_symbol("E(Psi^4*I(E(Psi^5)))"))) == 1);
    CHECK(ks.count("Xi") == 1);
}

TEST_CASE("closure agrees with the naive oracle") {
    auto cap = ExactValue::frac(3, 2);
    CHECK(keys_of(generate_symbols(1, cap)) == naive_closure(1, cap));
    CHECK(keys_of(generate_symbols(2, cap)) == naive_closure(2, cap));
    CHECK(keys_of(generate_symbols(1, ExactValue(1))) == naive_closure(1, ExactValue(1)));
}

TEST_CASE("output is rule closed") {
    auto cap = ExactValue::frac(3, 2);
    auto gs = generate_symbols(2, cap);
    auto ks = keys_of(gs);
    std::vector<Symbol> u;
    for (const auto& g : gs) {
        if (g.in_u) u.push_back(g.symbol);
        if (g.in_v) {
            auto s = make_integ(g.symbol);
            if (homogeneity(s) < cap) CHECK(ks.count(s->key));
        }
    }
    for (const auto& a : u)
        for (const auto& b : u)
            for (const auto& c : u) {
                auto s = make_product({a, b, c});
                if (homogeneity(s) < cap) CHECK(ks.count(s->key));
            }
}

TEST_CASE("negative symbols match the closed forms") {
    auto gs = generate_symbols(6);
    std::set<std::string> expected;
    for (int k = 1; k <= 6; ++k)
        for (int n = 0; n <= 3; ++n)
            if (!(k == 1 && n == 3)) expected.insert(family_one(k, n)->key);
    for (int k = 1; k <= 12; ++k)
        for (int l = 2; l <= 13; ++l)
            if (family_two_valid(k, l) && (k - 1) / 2 + 1 <= 6 && l / 2 <= 6) expected.insert(family_two(k, l)->key);
    std::set<std::string> extra;
    for (int k = 1; k <= 6; ++k)
        for (int i = 1; i <= 3; ++i) {
            MultiIndex x{0, 0, 0, 0};
            x[i] = 1;
            extra.insert(make_eps(k - 1, make_product({make_monomial(x), psi_power(2 * k)}))->key);
        }
    std::set<std::string> negative, flagged;
    for (const auto& g : gs) {
        auto sh = recognize(g.symbol);
        if (sh.family == SymbolShape::First) CHECK(g.homogeneity == family_one_homogeneity(sh.k, sh.n));
        if (sh.family == SymbolShape::Second) CHECK(g.homogeneity == family_two_homogeneity(sh.k, sh.l));
        if (g.homogeneity < ExactValue(0) && g.symbol->kind != SymbolKind::Xi) {
            if (sh.family == SymbolShape::MonomialPsi)
                flagged.insert(g.symbol->key);
            else
                negative.insert(g.symbol->key);
        }
    }
    CHECK(negative == expected);
    // E^{k-1}(X_i Psi^{2k}) has homogeneity -2k kappa and sits outside both families
    CHECK(flagged == extra);
}

TEST_CASE("Wick renormalisation") {
    Rational c(5, 3);
    auto g = MomentSequence::gaussian(c, 8);
    auto r = apply_wick_renorm(psi_power(2), g);
    SymbolCombination want;
    add_term(want, psi_power(2), 1);
    add_term(want, make_one(), -c);
    CHECK(same(r, want));
    auto xi = apply_wick_renorm(make_xi(), g);
    CHECK(xi.size() == 1);
    CHECK(xi.begin()->first->key == "Xi");

    auto t = apply_wick_renorm(parse_symbol("Psi^2*I(Psi^2)"), g);
    SymbolCombination w2;
    add_term(w2, psi_power(2), 1);
    add_term(w2, make_one(), -c);
    SymbolCombination iw2;
    for (const auto& [s, q] : w2) add_term(iw2, make_integ(s), q);
    CHECK(same(t, multiply(w2, iw2)));
    CHECK(t.size() == 4);
    CHECK(t.at(parse_symbol("I(1)")) == c * c);

    auto d = MomentSequence::point_mass(16);
    for (const auto& gs : generate_symbols(2)) {
        auto id = apply_wick_renorm(gs.symbol, d);
        REQUIRE(id.size() == 1);
        CHECK(symbol_equal(id.begin()->first, gs.symbol));
        CHECK(id.begin()->second == 1);
    }
}

TEST_CASE("Wick shadow averages back to powers") {
    auto mu = MomentSequence::from_cumulants({0, 0, Rational(2, 3), 0, Rational(-1, 5), 0, Rational(3), 0, 1});
    for (int n = 0; n <= 8; ++n) {
        auto comb = apply_wick_renorm(psi_power(n), mu);
        std::vector<Rational> coeffs(n + 1, Rational(0));
        for (const auto& [s, q] : comb) coeffs[factors_of(s).size()] += q;
        CHECK(averaged_potential(Polynomial(coeffs), mu) == Polynomial::monomial(n));
    }
}

TEST_CASE("mass renormalisation") {
    Rational a(3, 7), b(-2, 5);
    auto t22 = parse_symbol("Psi^2*I(Psi^2)");
    auto r = apply_mass_renorm(t22, ConstantMap{{{2, 2}, a}});
    SymbolCombination want;
    add_term(want, t22, 1);
    add_term(want, make_one(), -a);
    CHECK(same(r, want));

    auto t23 = parse_symbol("Psi^2*I(Psi^3)");
    auto r2 = apply_mass_renorm(t23, ConstantMap{{{2, 2}, a}, {{1, 3}, b}});
    SymbolCombination want2;
    add_term(want2, t23, 1);
    add_term(want2, make_psi(), -3 * a - 2 * b);
    CHECK(same(r2, want2));

    auto xi = apply_mass_renorm(make_xi(), ConstantMap{{{2, 2}, a}});
    CHECK(xi.size() == 1);

    auto t13 = parse_symbol("Psi*I(Psi^3)");
    CHECK(apply_generator(1, 3, t13).at(make_one()) == 1);
    auto big = family_two(4, 5);
    CHECK(apply_generator(4, 4, big).at(make_psi()) == 5);
    CHECK(apply_generator(3, 5, big).at(make_psi()) == 4);
}

TEST_CASE("generators are nilpotent on the generated set") {
    std::vector<std::pair<int, int>> gens;
    for (int K = 1; K <= 3; ++K)
        for (int L = 1; L <= 3; ++L) {
            gens.push_back({2 * K, 2 * L});
            gens.push_back({2 * K - 1, 2 * L + 1});
        }
    for (const auto& g : generate_symbols(3)) {
        for (auto [a, b] : gens) {
            auto once = apply_generator(a, b, g.symbol);
            for (const auto& [s, q] : once)
                for (auto [c, d] : gens) CHECK(apply_generator(c, d, s).empty());
        }
    }
}
