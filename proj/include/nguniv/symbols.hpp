#pragma once

#include "nguniv/exact.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nguniv {

using MultiIndex = std::array<int, 4>;

int parabolic_degree(const MultiIndex& k);

enum class SymbolKind { Xi, Monomial, Integ, Eps, Product };

struct SymbolNode;
using Symbol = std::shared_ptr<const SymbolNode>;

struct SymbolNode {
    SymbolKind kind = SymbolKind::Xi;
    MultiIndex index{0, 0, 0, 0};  // Monomial
    int power = 0;                 // Eps
    std::vector<Symbol> children;  // Integ/Eps: one child; Product: >= 2 sorted factors
    std::string key;               // canonical serialization
};

struct SymbolLess {
    bool operator()(const Symbol& a, const Symbol& b) const { return a->key < b->key; }
};

Symbol make_xi();
Symbol make_monomial(const MultiIndex& k);
Symbol make_one();
Symbol make_integ(const Symbol& child);
// E^0(tau) is tau itself.
Symbol make_eps(int power, const Symbol& child);
Symbol make_product(const std::vector<Symbol>& factors);
Symbol make_psi();
Symbol psi_power(int n);

bool symbol_equal(const Symbol& a, const Symbol& b);
bool is_one(const Symbol& s);
bool is_psi(const Symbol& s);

// Flattened factor list (a non-product is its own single factor; 1 is empty).
std::vector<Symbol> factors_of(const Symbol& s);

ExactValue homogeneity(const Symbol& s);

// Canonical grammar: Xi, X^(k0,k1,k2,k3), I(...), E^k(...), factors joined by '*'.
const std::string& to_string(const Symbol& s);
// Shorthand rendering: 1, Psi^n, X_i, E(...).
std::string pretty(const Symbol& s);
// Accepts the canonical grammar plus the shorthands above and powers a^n.
Symbol parse_symbol(const std::string& text);

// Closed-form families of negative symbols.
Symbol family_one(int k, int n);        // E^{k-1} Psi^{2k+1-n}
Symbol family_two(int k, int l);        // E^{floor((k-1)/2)}(Psi^k I(E^{floor(l/2)-1} Psi^l))
ExactValue family_one_homogeneity(int k, int n);
ExactValue family_two_homogeneity(int k, int l);
bool family_two_valid(int k, int l);

struct SymbolShape {
    enum Family { None, First, Second, MonomialPsi } family = None;
    int k = 0, n = 0, l = 0;
    int coordinate = 0;  // MonomialPsi: E^{k-1}(X_i Psi^{2k})
    int delta_tau = 0;   // parity of k+l for Second
};
SymbolShape recognize(const Symbol& s);

struct GeneratedSymbol {
    Symbol symbol;
    ExactValue homogeneity;
    bool in_u = false;
    bool in_v = false;
};

// Closure of the production rules pruned to homogeneity < cap, sorted by
// homogeneity then key.
std::vector<GeneratedSymbol> generate_symbols(int m, const ExactValue& cap = ExactValue::frac(3, 2));

using SymbolCombination = std::map<Symbol, Rational, SymbolLess>;

void add_term(SymbolCombination& c, const Symbol& s, const Rational& coeff);
bool same(const SymbolCombination& a, const SymbolCombination& b);
SymbolCombination multiply(const SymbolCombination& a, const SymbolCombination& b);
std::string to_string(const SymbolCombination& c);

struct MomentSequence;

SymbolCombination apply_wick_renorm(const Symbol& tau, const MomentSequence& mu);

using ConstantMap = std::map<std::pair<int, int>, Rational>;

// Generator L_{a,b} applied to tau; zero off its domain.
SymbolCombination apply_generator(int a, int b, const Symbol& tau);
SymbolCombination apply_mass_renorm(const Symbol& tau, const ConstantMap& constants);
SymbolCombination apply_mass_renorm(const SymbolCombination& tau, const ConstantMap& constants);

}  // namespace nguniv
