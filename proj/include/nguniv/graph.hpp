#pragma once

#include "nguniv/exact.hpp"
#include "nguniv/wick.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nguniv {

enum class VertexRole { Root0, VStarLower, VStarUpper, Internal, ExternalNoise, ContractedNoise };
enum class EdgeKind { Kernel, BarredKernel, WavedKernel, TestFunction };
// Which leg group a noise edge belongs to (P: attached to the upper vertex, Q: to the lower one).
enum class LegGroup { None, P, Q };

const char* role_name(VertexRole r);
const char* kind_name(EdgeKind k);

struct Vertex {
    int id = 0;
    VertexRole role = VertexRole::Internal;
};

struct Edge {
    int tail = 0;  // e_-
    int head = 0;  // e_+
    ExactValue degree;
    int renorm = 0;
    ExactValue epsilon_exponent;
    EdgeKind kind = EdgeKind::Kernel;
    bool smoothed = false;
    LegGroup group = LegGroup::None;
};

struct HyperEdge {
    std::vector<int> vertices;
    ExactValue degree() const { return ExactValue::frac(5 * static_cast<long long>(vertices.size()), 2); }
};

struct Provenance {
    enum Kind { Synthetic, FirstOrder, SecondOrder, Constant } kind = Synthetic;
    std::string source;
    int k = 0, l = 0, n_first = 0;  // n_first: the n of the first family
    int p = 0, q = 0, n = 0, p_prime = 0, q_prime = 0;
    Pairing pairing;
    BigInt multiplicity = 1;
    int delta_tau = 0;
};

struct LabelledGraph {
    std::vector<Vertex> vertices;  // vertices[i].id == i
    std::vector<Edge> edges;
    std::vector<HyperEdge> hyper;
    ExactValue prefactor;  // exponent of eps in front of the graph
    int pieces = 0;        // number of (1/2 - delta) pieces still to allocate
    bool allocated = false;
    Provenance prov;

    int add_vertex(VertexRole r);
    int add_edge(int tail, int head, ExactValue degree, int renorm, EdgeKind kind, LegGroup g = LegGroup::None);
    int root() const;
    int lower() const;  // v_star (test-function endpoint)
    int upper() const;  // -1 if absent
    std::string id() const;
};

LabelledGraph first_order_graph(int k, int n);

struct ChaosTerm {
    int p = 0, q = 0, n = 0;
    Pairing pairing;
    BigInt multiplicity;
    LabelledGraph graph;
};

// canonical = true keeps within-side blocks (odd blocks are always dropped).
std::vector<ChaosTerm> second_order_chaos_terms(int k, int l, bool canonical = false);
bool second_order_valid(int k, int l);

LabelledGraph allocate_epsilon(const LabelledGraph& g);

ExactValue graph_homogeneity(const LabelledGraph& g);

struct Violation {
    int condition = 0;
    std::vector<int> subset;
    ExactValue lhs, rhs;
};

struct CheckReport {
    bool pass = true;
    std::vector<Violation> violations;
    long long subsets_checked = 0;
    bool barred_bumped = false;
};

enum class BarredBump { Auto, On, Off };

struct CheckOptions {
    int vertex_limit = 22;
    BarredBump barred = BarredBump::Auto;  // treat the barred edge as 3+delta (Auto: l = 2, n = 0)
    int threads = 0;                       // 0: NGUNIV_THREADS or 1
    size_t max_violations = 0;             // 0: keep all
};

CheckReport check_assumption_bruteforce(const LabelledGraph& g, const CheckOptions& opt = {});
CheckReport check_assumption_reduced(const LabelledGraph& g, const CheckOptions& opt = {});

// Rewrites. All return new graphs.
LabelledGraph collapse_cumulant(const LabelledGraph& g, size_t hyper_index);
LabelledGraph combine_parallel(const LabelledGraph& g);
LabelledGraph merge_kernels(const LabelledGraph& g, int v);
LabelledGraph absorb_epsilon(const LabelledGraph& g, size_t edge_index, const ExactValue& amount);

enum class ChaosOneVariant { OuterLeg, InnerLeg };  // external leg on the lower / upper vertex

struct Divergence {
    bool log_divergent = false;
    ExactValue theta;
    ExactValue loop_degree;
    LabelledGraph terminal;
};

// Mass-renormalised constant graph for the contraction pattern pi.
LabelledGraph constant_graph(int k, int l, const Pairing& pi, int chaos, ChaosOneVariant variant = ChaosOneVariant::OuterLeg);
Divergence classify_divergence(int k, int l, const Pairing& pi, int chaos,
                               ChaosOneVariant variant = ChaosOneVariant::OuterLeg);

std::string to_dot(const LabelledGraph& g);

}  // namespace nguniv
