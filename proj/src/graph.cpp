#include "nguniv/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nguniv {

namespace {

ExactValue piece() { return ExactValue(Rational(1, 2), 0, -1); }
ExactValue three() { return ExactValue(3); }

bool is_internal(VertexRole r) {
    return r == VertexRole::Internal || r == VertexRole::ContractedNoise || r == VertexRole::VStarLower ||
           r == VertexRole::VStarUpper;
}

// Multisets of pairs (a, b), a + b even and >= 2, summing to (ka, lb).
// straddle: both components >= 1.
std::vector<Pairing> even_patterns(int ka, int lb, bool straddle) {
    std::vector<Pair> cands;
    for (int a = 0; a <= ka; ++a)
        for (int b = 0; b <= lb; ++b) {
            if ((a + b) % 2 || a + b < 2) continue;
            if (straddle && (a == 0 || b == 0)) continue;
            cands.emplace_back(a, b);
        }
    std::vector<Pairing> out;
    Pairing cur;
    std::function<void(size_t, int, int)> rec = [&](size_t from, int ra, int rb) {
        if (ra == 0 && rb == 0) {
            out.push_back(cur);
            return;
        }
        for (size_t i = from; i < cands.size(); ++i) {
            auto [a, b] = cands[i];
            if (a > ra || b > rb) continue;
            cur.push_back(cands[i]);
            rec(i, ra - a, rb - b);
            cur.pop_back();
        }
    };
    rec(0, ka, lb);
    return out;
}

BigInt pattern_count(const Pairing& pi, int ka, int lb) {
    BigInt num = factorial(ka) * factorial(lb), den = 1;
    for (auto [a, b] : pi) den *= factorial(a) * factorial(b);
    for (size_t i = 0; i < pi.size();) {
        size_t j = i;
        while (j < pi.size() && pi[j] == pi[i]) ++j;
        den *= factorial(static_cast<int>(j - i));
        i = j;
    }
    return num / den;
}

// Adds cumulant blocks of pi with legs into the upper (second component) and lower vertex.
void add_blocks(LabelledGraph& g, const Pairing& pi, int upper, int lower) {
    for (auto [a, b] : pi) {
        HyperEdge h;
        for (int i = 0; i < b; ++i) {
            int v = g.add_vertex(VertexRole::ContractedNoise);
            g.add_edge(v, upper, three(), 0, EdgeKind::Kernel, LegGroup::P);
            g.edges.back().smoothed = true;
            h.vertices.push_back(v);
        }
        for (int i = 0; i < a; ++i) {
            int v = g.add_vertex(VertexRole::ContractedNoise);
            g.add_edge(v, lower, three(), 0, EdgeKind::Kernel, LegGroup::Q);
            g.edges.back().smoothed = true;
            h.vertices.push_back(v);
        }
        g.hyper.push_back(h);
    }
}

void add_legs(LabelledGraph& g, int count, int target, LegGroup grp) {
    for (int i = 0; i < count; ++i) {
        int v = g.add_vertex(VertexRole::ExternalNoise);
        g.add_edge(v, target, three(), 0, EdgeKind::Kernel, grp);
        g.edges.back().smoothed = true;
    }
}

void reduce_edge(Edge& e) {
    e.degree -= piece();
    e.epsilon_exponent += piece();
}

// Keeps the listed vertices, renumbering; drops edges touching removed ones.
LabelledGraph renumber(const LabelledGraph& g, const std::vector<bool>& keep) {
    LabelledGraph out;
    out.prefactor = g.prefactor;
    out.pieces = g.pieces;
    out.allocated = g.allocated;
    out.prov = g.prov;
    std::vector<int> map(g.vertices.size(), -1);
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (keep[i]) map[i] = out.add_vertex(g.vertices[i].role);
    for (const auto& e : g.edges) {
        if (map[e.tail] < 0 || map[e.head] < 0) continue;
        Edge f = e;
        f.tail = map[e.tail];
        f.head = map[e.head];
        out.edges.push_back(f);
    }
    for (const auto& h : g.hyper) {
        HyperEdge nh;
        bool ok = true;
        for (int v : h.vertices) {
            if (map[v] < 0) ok = false;
            nh.vertices.push_back(map[v]);
        }
        if (ok) out.hyper.push_back(nh);
    }
    return out;
}

}  // namespace

const char* role_name(VertexRole r) {
    switch (r) {
        case VertexRole::Root0: return "Root0";
        case VertexRole::VStarLower: return "VStarLower";
        case VertexRole::VStarUpper: return "VStarUpper";
        case VertexRole::Internal: return "Internal";
        case VertexRole::ExternalNoise: return "ExternalNoise";
        case VertexRole::ContractedNoise: return "ContractedNoise";
    }
    return "?";
}

const char* kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::Kernel: return "Kernel";
        case EdgeKind::BarredKernel: return "BarredKernel";
        case EdgeKind::WavedKernel: return "WavedKernel";
        case EdgeKind::TestFunction: return "TestFunction";
    }
    return "?";
}

int LabelledGraph::add_vertex(VertexRole r) {
    int id = static_cast<int>(vertices.size());
    vertices.push_back({id, r});
    return id;
}

int LabelledGraph::add_edge(int tail, int head, ExactValue degree, int renorm, EdgeKind kind, LegGroup g) {
    Edge e;
    e.tail = tail;
    e.head = head;
    e.degree = std::move(degree);
    e.renorm = renorm;
    e.kind = kind;
    e.group = g;
    edges.push_back(e);
    return static_cast<int>(edges.size()) - 1;
}

int LabelledGraph::root() const {
    for (const auto& v : vertices)
        if (v.role == VertexRole::Root0) return v.id;
    throw std::logic_error("graph without root");
}

int LabelledGraph::lower() const {
    for (const auto& v : vertices)
        if (v.role == VertexRole::VStarLower) return v.id;
    return -1;
}

int LabelledGraph::upper() const {
    for (const auto& v : vertices)
        if (v.role == VertexRole::VStarUpper) return v.id;
    return -1;
}

std::string LabelledGraph::id() const {
    std::ostringstream os;
    switch (prov.kind) {
        case Provenance::FirstOrder: os << "first:k" << prov.k << ":n" << prov.n_first; break;
        case Provenance::SecondOrder:
            os << "second:k" << prov.k << ":l" << prov.l << ":p" << prov.p << ":q" << prov.q << ":n" << prov.n << ":"
               << pairing_to_string(prov.pairing);
            break;
        case Provenance::Constant:
            os << "constant:k" << prov.k << ":l" << prov.l << ":p" << prov.p << ":q" << prov.q << ":"
               << pairing_to_string(prov.pairing);
            break;
        default: os << (prov.source.empty() ? "synthetic" : prov.source);
    }
    return os.str();
}

LabelledGraph first_order_graph(int k, int n) {
    if (k < 1 || n < 0 || n > 3 || 2 * k + 1 - n < 1) throw std::invalid_argument("first_order_graph: need k >= 1, 0 <= n <= 3");
    LabelledGraph g;
    int root = g.add_vertex(VertexRole::Root0);
    int v = g.add_vertex(VertexRole::VStarLower);
    g.add_edge(v, root, ExactValue(0), 0, EdgeKind::TestFunction);
    add_legs(g, 2 * k + 1 - n, v, LegGroup::Q);
    g.prefactor = ExactValue(k - 1);
    g.pieces = 2 * k - 2;
    g.prov.kind = Provenance::FirstOrder;
    g.prov.k = k;
    g.prov.n_first = n;
    g.prov.source = "E^" + std::to_string(k - 1) + "(Psi^" + std::to_string(2 * k + 1 - n) + ")";
    return g;
}

bool second_order_valid(int k, int l) { return k >= 1 && l >= 2 && !(k % 2 == 1 && l % 2 == 0); }

std::vector<ChaosTerm> second_order_chaos_terms(int k, int l, bool canonical) {
    if (!second_order_valid(k, l)) throw std::invalid_argument("second_order_chaos_terms: invalid (k, l) combination");
    const int dt = (k + l) % 2;
    std::vector<ChaosTerm> out;
    for (int pp = 0; pp <= l; ++pp)
        for (int qq = 0; qq <= k; ++qq) {
            if ((pp + qq) % 2) continue;
            for (const auto& pi : even_patterns(qq, pp, !canonical)) {
                ChaosTerm t;
                t.p = l - pp;
                t.q = k - qq;
                t.n = pp + qq;
                t.pairing = pi;
                t.multiplicity = binomial(l, pp) * binomial(k, qq) * pattern_count(pi, qq, pp);
                LabelledGraph& g = t.graph;
                int root = g.add_vertex(VertexRole::Root0);
                int up = g.add_vertex(VertexRole::VStarUpper);
                int lo = g.add_vertex(VertexRole::VStarLower);
                g.add_edge(up, lo, three(), 1, EdgeKind::BarredKernel);
                g.add_edge(lo, root, ExactValue(0), 0, EdgeKind::TestFunction);
                add_legs(g, t.p, up, LegGroup::P);
                add_legs(g, t.q, lo, LegGroup::Q);
                add_blocks(g, pi, up, lo);
                g.prefactor = ExactValue(Rational(k + l - 4 - dt, 2));
                g.pieces = k + l - 4 - dt;
                auto& pr = g.prov;
                pr.kind = Provenance::SecondOrder;
                pr.k = k;
                pr.l = l;
                pr.p = t.p;
                pr.q = t.q;
                pr.n = t.n;
                pr.p_prime = pp;
                pr.q_prime = qq;
                pr.pairing = pi;
                pr.multiplicity = t.multiplicity;
                pr.delta_tau = dt;
                pr.source = "E^" + std::to_string((k - 1) / 2) + "(Psi^" + std::to_string(k) + "*I(E^" +
                            std::to_string(l / 2 - 1) + "(Psi^" + std::to_string(l) + ")))";
                out.push_back(std::move(t));
            }
        }
    return out;
}

LabelledGraph allocate_epsilon(const LabelledGraph& g) {
    if (g.allocated) return g;
    LabelledGraph out = g;
    auto assign = [&](LegGroup grp, int count) {
        if (count < 0) throw std::invalid_argument("allocate_epsilon: negative piece count");
        // contracted legs first
        for (int pass = 0; pass < 2 && count > 0; ++pass)
            for (auto& e : out.edges) {
                if (count == 0) break;
                if (e.group != grp) continue;
                bool contracted = out.vertices[e.tail].role == VertexRole::ContractedNoise;
                if (contracted != (pass == 0)) continue;
                reduce_edge(e);
                --count;
            }
        if (count > 0) throw std::invalid_argument("allocate_epsilon: more pieces than legs");
    };
    if (g.prov.kind == Provenance::FirstOrder) {
        assign(LegGroup::Q, g.pieces);
    } else if (g.prov.kind == Provenance::SecondOrder) {
        const auto& p = g.prov;
        int pside = p.p + p.p_prime - 2 - (p.l % 2 == 1);
        int qside = p.q + p.q_prime - 1 - (p.k % 2 == 0);
        if (pside < 0 || qside < 0) throw std::invalid_argument("allocate_epsilon: negative piece count");
        if (pside + qside != g.pieces) throw std::logic_error("allocate_epsilon: piece split mismatch");
        assign(LegGroup::P, pside);
        assign(LegGroup::Q, qside);
    } else {
        throw std::invalid_argument("allocate_epsilon: graph not produced by a family constructor");
    }
    out.prefactor -= piece() * g.pieces;
    out.pieces = 0;
    out.allocated = true;
    return out;
}

ExactValue graph_homogeneity(const LabelledGraph& g) {
    ExactValue alpha;
    for (const auto& v : g.vertices) {
        if (v.role == VertexRole::ExternalNoise) alpha += ExactValue::frac(5, 2);
        else if (is_internal(v.role) && v.role != VertexRole::VStarLower) alpha += ExactValue(5);
    }
    for (const auto& e : g.edges)
        if (e.kind != EdgeKind::TestFunction) alpha -= e.degree;
    for (const auto& h : g.hyper) alpha -= h.degree();
    return alpha;
}

LabelledGraph collapse_cumulant(const LabelledGraph& g, size_t hyper_index) {
    if (hyper_index >= g.hyper.size()) throw std::out_of_range("collapse_cumulant: no such hyper-edge");
    LabelledGraph h = g;
    const auto members = g.hyper[hyper_index].vertices;
    const int n = static_cast<int>(members.size());
    h.hyper.erase(h.hyper.begin() + static_cast<long>(hyper_index));
    int x = h.add_vertex(VertexRole::Internal);
    std::vector<bool> keep(h.vertices.size(), true);
    for (int v : members) keep[v] = false;
    for (auto& e : h.edges) {
        bool hit = false;
        if (!keep[e.tail]) e.tail = x, hit = true;
        if (!keep[e.head]) e.head = x, hit = true;
        if (hit) e.smoothed = true;
    }
    h.prefactor += ExactValue(Rational(5 * n - 10, 2));
    return renumber(h, keep);
}

LabelledGraph combine_parallel(const LabelledGraph& g) {
    LabelledGraph out = g;
    out.edges.clear();
    std::map<std::pair<int, int>, size_t> seen;
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::Kernel || e.renorm != 0) {
            out.edges.push_back(e);
            continue;
        }
        auto key = std::minmax(e.tail, e.head);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen[key] = out.edges.size();
            out.edges.push_back(e);
            continue;
        }
        Edge& f = out.edges[it->second];
        f.degree += e.degree;
        f.epsilon_exponent += e.epsilon_exponent;
        f.smoothed = f.smoothed || e.smoothed;
        if (f.group != e.group) f.group = LegGroup::None;
    }
    return out;
}

LabelledGraph merge_kernels(const LabelledGraph& g, int v) {
    if (v < 0 || v >= static_cast<int>(g.vertices.size())) throw std::out_of_range("merge_kernels: no such vertex");
    auto role = g.vertices[v].role;
    if (role != VertexRole::Internal && role != VertexRole::ContractedNoise)
        throw std::invalid_argument("merge_kernels: vertex is not internal");
    for (const auto& h : g.hyper)
        if (std::find(h.vertices.begin(), h.vertices.end(), v) != h.vertices.end())
            throw std::invalid_argument("merge_kernels: vertex belongs to a hyper-edge");
    std::vector<size_t> inc;
    for (size_t i = 0; i < g.edges.size(); ++i)
        if (g.edges[i].tail == v || g.edges[i].head == v) inc.push_back(i);
    if (inc.size() != 2) throw std::invalid_argument("merge_kernels: valence is not 2");
    const Edge& a = g.edges[inc[0]];
    const Edge& b = g.edges[inc[1]];
    if (a.kind != EdgeKind::Kernel || b.kind != EdgeKind::Kernel || a.renorm != 0 || b.renorm != 0)
        throw std::invalid_argument("merge_kernels: only plain kernels can be merged");
    int u = a.tail == v ? a.head : a.tail;
    int w = b.tail == v ? b.head : b.tail;
    LabelledGraph h = g;
    Edge m;
    m.tail = u;
    m.head = w;
    m.degree = a.degree + b.degree - ExactValue(5);
    m.epsilon_exponent = a.epsilon_exponent + b.epsilon_exponent;
    m.smoothed = a.smoothed || b.smoothed;
    h.edges.erase(h.edges.begin() + static_cast<long>(inc[1]));
    h.edges.erase(h.edges.begin() + static_cast<long>(inc[0]));
    h.edges.push_back(m);
    std::vector<bool> keep(h.vertices.size(), true);
    keep[v] = false;
    return renumber(h, keep);
}

LabelledGraph absorb_epsilon(const LabelledGraph& g, size_t edge_index, const ExactValue& amount) {
    if (edge_index >= g.edges.size()) throw std::out_of_range("absorb_epsilon: no such edge");
    if (amount.is_zero()) return g;
    if (amount < ExactValue(0)) throw std::invalid_argument("absorb_epsilon: negative amount");
    if (amount > g.prefactor) throw std::invalid_argument("absorb_epsilon: amount exceeds prefactor");
    if (!g.edges[edge_index].smoothed) throw std::invalid_argument("absorb_epsilon: edge is not eps-smoothed");
    LabelledGraph h = g;
    h.edges[edge_index].degree -= amount;
    h.edges[edge_index].epsilon_exponent += amount;
    h.prefactor -= amount;
    return h;
}

LabelledGraph constant_graph(int k, int l, const Pairing& pi, int chaos, ChaosOneVariant variant) {
    if (!second_order_valid(k, l)) throw std::invalid_argument("constant_graph: invalid (k, l) combination");
    if (chaos != 0 && chaos != 1) throw std::invalid_argument("constant_graph: chaos must be 0 or 1");
    if ((k + l) % 2 != chaos) throw std::invalid_argument("constant_graph: chaos order has the wrong parity");
    int kk = k, ll = l;
    if (chaos == 1) (variant == ChaosOneVariant::OuterLeg ? kk : ll) -= 1;
    auto all = even_patterns(kk, ll, true);
    Pairing sorted = pi;
    std::sort(sorted.begin(), sorted.end());
    if (std::find(all.begin(), all.end(), sorted) == all.end())
        throw std::invalid_argument("constant_graph: unrecognized configuration " + pairing_to_string(pi));
    LabelledGraph g;
    int root = g.add_vertex(VertexRole::Root0);
    int up = g.add_vertex(VertexRole::VStarUpper);
    int lo = g.add_vertex(VertexRole::VStarLower);
    // the barred edge minus its subtracted constant leaves a plain kernel to the root
    g.add_edge(up, root, three(), 0, EdgeKind::Kernel);
    g.add_edge(lo, root, ExactValue(0), 0, EdgeKind::TestFunction);
    if (chaos == 1) {
        if (variant == ChaosOneVariant::OuterLeg) add_legs(g, 1, lo, LegGroup::Q);
        else add_legs(g, 1, up, LegGroup::P);
    }
    add_blocks(g, sorted, up, lo);
    const int dt = (k + l) % 2;
    g.prefactor = ExactValue(Rational(k + l - 4 - dt, 2));
    g.prov.kind = Provenance::Constant;
    g.prov.k = k;
    g.prov.l = l;
    g.prov.p = chaos == 1 && variant == ChaosOneVariant::InnerLeg;
    g.prov.q = chaos == 1 && variant == ChaosOneVariant::OuterLeg;
    g.prov.n = kk + ll;
    g.prov.p_prime = ll;
    g.prov.q_prime = kk;
    g.prov.pairing = sorted;
    g.prov.multiplicity = pattern_count(sorted, kk, ll);
    g.prov.delta_tau = dt;
    return g;
}

Divergence classify_divergence(int k, int l, const Pairing& pi, int chaos, ChaosOneVariant variant) {
    LabelledGraph g = constant_graph(k, l, pi, chaos, variant);
    while (!g.hyper.empty()) g = collapse_cumulant(g, 0);
    g = combine_parallel(g);
    for (bool again = true; again;) {
        again = false;
        for (const auto& v : g.vertices) {
            if (v.role != VertexRole::Internal) continue;
            g = combine_parallel(merge_kernels(g, v.id));
            again = true;
            break;
        }
    }
    const int up = g.upper(), lo = g.lower();
    std::optional<size_t> loop;
    for (size_t i = 0; i < g.edges.size(); ++i)
        if (std::minmax(g.edges[i].tail, g.edges[i].head) == std::minmax(up, lo)) loop = i;
    if (!loop) throw std::logic_error("classify_divergence: no loop edge after rewriting");
    Divergence d;
    d.loop_degree = g.edges[*loop].degree;
    const ExactValue two(2);
    if (g.prefactor != d.loop_degree - two) throw std::logic_error("classify_divergence: exponent bookkeeping mismatch");
    if (d.loop_degree < two) throw std::invalid_argument("classify_divergence: unrecognized configuration");
    if (d.loop_degree == two) {
        d.log_divergent = chaos == 0;
        d.theta = ExactValue(0);
    } else {
        // bring the loop down to 2 + delta; what remains in front is theta
        g = absorb_epsilon(g, *loop, d.loop_degree - two - ExactValue::delta());
        d.theta = g.prefactor;
    }
    d.terminal = g;
    return d;
}

std::string to_dot(const LabelledGraph& g) {
    std::ostringstream os;
    os << "digraph \"" << g.id() << "\" {\n";
    os << "  label=\"" << g.id() << "  eps^(" << g.prefactor.to_string() << ")\";\n";
    for (const auto& v : g.vertices) {
        const char* shape = "circle";
        std::string extra;
        switch (v.role) {
            case VertexRole::Root0: shape = "square"; break;
            case VertexRole::VStarLower: shape = "doublecircle"; break;
            case VertexRole::VStarUpper: shape = "circle"; extra = ", style=filled, fillcolor=black, fontcolor=white"; break;
            case VertexRole::Internal: shape = "circle"; break;
            case VertexRole::ExternalNoise: shape = "circle"; extra = ", style=dotted"; break;
            case VertexRole::ContractedNoise: shape = "point"; break;
        }
        os << "  v" << v.id << " [shape=" << shape << ", label=\"" << v.id << "\"" << extra << ", tooltip=\""
           << role_name(v.role) << "\"];\n";
    }
    for (size_t i = 0; i < g.hyper.size(); ++i) {
        os << "  subgraph cluster_h" << i << " {\n    style=filled; color=lightgray; label=\"5n/2="
           << g.hyper[i].degree().to_string() << "\";\n   ";
        for (int v : g.hyper[i].vertices) os << " v" << v << ";";
        os << "\n  }\n";
    }
    for (const auto& e : g.edges) {
        os << "  v" << e.tail << " -> v" << e.head;
        if (e.kind == EdgeKind::TestFunction) {
            os << " [style=dashed, arrowhead=none];\n";
            continue;
        }
        os << " [label=\"(" << e.degree.to_string() << ", " << e.renorm << ")\"";
        if (e.kind == EdgeKind::BarredKernel) os << ", style=bold, arrowhead=teetee";
        if (e.kind == EdgeKind::WavedKernel) os << ", style=dotted";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace nguniv
