#include "nguniv/graph.hpp"

#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace nguniv {

namespace {

// a + b*delta + c*kappa with the rational part scaled by a common denominator.
struct Lin {
    long long r = 0, d = 0, k = 0;
    Lin& operator+=(const Lin& o) {
        r += o.r, d += o.d, k += o.k;
        return *this;
    }
};

// Same priority as compare(): rational part, then delta, then kappa.
int cmp(const Lin& a, const Lin& b) {
    if (a.r != b.r) return a.r < b.r ? -1 : 1;
    if (a.d != b.d) return a.d < b.d ? -1 : 1;
    if (a.k != b.k) return a.k < b.k ? -1 : 1;
    return 0;
}

struct E2 {
    uint32_t tail, head;
    Lin a;
    int r;
};

struct EH {
    uint32_t mask;
    Lin a;
};

class Evaluator {
public:
    Evaluator(const LabelledGraph& g, bool bump) {
        const size_t n = g.vertices.size();
        long long den = 2;
        auto lcm = [](long long x, long long y) {
            long long a = x, b = y;
            while (b) {
                long long t = a % b;
                a = b;
                b = t;
            }
            return x / a * y;
        };
        for (const auto& e : g.edges) den = lcm(den, static_cast<long long>(denominator(e.degree.rational_part())));
        den_ = den;
        for (size_t i = 0; i < n; ++i) {
            auto r = g.vertices[i].role;
            if (r == VertexRole::Root0) root_ = 1u << i;
            else if (r == VertexRole::ExternalNoise) ex_ |= 1u << i;
            else in_ |= 1u << i;
            if (r == VertexRole::VStarLower) lower_ = 1u << i;
        }
        for (const auto& e : g.edges) {
            if (e.kind == EdgeKind::TestFunction) continue;
            ExactValue a = e.degree;
            if (bump && e.kind == EdgeKind::BarredKernel) a += ExactValue::delta();
            E2 x{1u << e.tail, 1u << e.head, lin(a), e.renorm};
            edges_.push_back(x);
        }
        for (const auto& h : g.hyper) {
            EH x{0, lin(h.degree())};
            for (int v : h.vertices) x.mask |= 1u << v;
            hyper_.push_back(x);
        }
    }

    Lin lin(const ExactValue& v) const {
        Rational s = v.rational_part() * den_;
        if (denominator(s) != 1) throw std::logic_error("checker: denominator mismatch");
        return {static_cast<long long>(numerator(s)), v.delta_coeff(), v.kappa_coeff()};
    }

    ExactValue back(const Lin& x) const { return ExactValue(Rational(x.r, den_), x.k, x.d); }

    uint32_t root() const { return root_; }
    uint32_t lower() const { return lower_; }

    // Returns true and fills lhs/rhs on violation.
    bool violates(uint32_t s, int cond, Lin& lhs, Lin& rhs) const {
        lhs = Lin{};
        const long long nin = __builtin_popcount(s & in_), nex = __builtin_popcount(s & ex_);
        for (const auto& e : edges_) {
            bool t = s & e.tail, h = s & e.head;
            bool up = e.r > 0 && t && !h, down = e.r > 0 && h && !t;
            if (cond == 2) {
                if (t && h) lhs += e.a;
            } else if (cond == 3) {
                if (t && h) lhs += e.a;
                if (up) lhs += e.a, lhs.r += (e.r - 1) * den_;
                if (down) lhs.r -= e.r * den_;
            } else {
                if ((t || h) && !down) lhs += e.a;
                if (up) lhs.r += e.r * den_;
                if (down) lhs.r -= (e.r - 1) * den_;
            }
        }
        for (const auto& h : hyper_) {
            bool all = (s & h.mask) == h.mask, any = s & h.mask;
            if (cond == 4 ? any : all) lhs += h.a;
        }
        // rhs in units of 1/2, then scaled
        long long half;
        if (cond == 2) half = 10 * nin + 5 * (nex - 1 - (nex == 0));
        else half = 10 * nin + 5 * nex;
        rhs = Lin{half * den_ / 2, 0, 0};
        int c = cmp(lhs, rhs);
        return cond == 4 ? c <= 0 : c >= 0;
    }

private:
    long long den_ = 2;
    uint32_t root_ = 0, in_ = 0, ex_ = 0, lower_ = 0;
    std::vector<E2> edges_;
    std::vector<EH> hyper_;
};

bool want_bump(const LabelledGraph& g, const CheckOptions& opt) {
    if (opt.barred == BarredBump::On) return true;
    if (opt.barred == BarredBump::Off) return false;
    const auto& p = g.prov;
    // l = 2 with nothing contracted: cond 4 at {v*} u P is an equality otherwise
    return p.kind == Provenance::SecondOrder && p.l == 2 && p.n == 0;
}

std::vector<int> members(uint32_t s) {
    std::vector<int> out;
    for (int i = 0; s; ++i, s >>= 1)
        if (s & 1u) out.push_back(i);
    return out;
}

int thread_count(const CheckOptions& opt) {
    if (opt.threads > 0) return opt.threads;
    if (const char* env = std::getenv("NGUNIV_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

void finish(CheckReport& rep, const CheckOptions& opt) {
    if (opt.max_violations && rep.violations.size() > opt.max_violations) rep.violations.resize(opt.max_violations);
    rep.pass = rep.violations.empty();
}

void check_condition_one(const LabelledGraph& g, bool bump, CheckReport& rep) {
    for (const auto& e : g.edges) {
        if (e.kind == EdgeKind::TestFunction) continue;
        ExactValue a = e.degree;
        if (bump && e.kind == EdgeKind::BarredKernel) a += ExactValue::delta();
        ExactValue lhs = a + ExactValue(std::min(e.renorm, 0));
        if (!(lhs < ExactValue(5))) rep.violations.push_back({1, {e.tail, e.head}, lhs, ExactValue(5)});
    }
}

void test_subset(const Evaluator& ev, uint32_t s, std::vector<Violation>& out, long long& count) {
    const int size = __builtin_popcount(s);
    Lin lhs, rhs;
    auto run = [&](int cond) {
        ++count;
        if (ev.violates(s, cond, lhs, rhs)) out.push_back({cond, members(s), ev.back(lhs), ev.back(rhs)});
    };
    if (!(s & ev.root()) && size >= 3) run(2);
    if ((s & ev.root()) && size >= 2) run(3);
    if (s && !(s & (ev.root() | ev.lower()))) run(4);
}

}  // namespace

CheckReport check_assumption_bruteforce(const LabelledGraph& g, const CheckOptions& opt) {
    const size_t n = g.vertices.size();
    if (static_cast<int>(n) > opt.vertex_limit || n > 30)
        throw std::invalid_argument("check_assumption_bruteforce: vertex count " + std::to_string(n) + " exceeds limit " +
                                    std::to_string(opt.vertex_limit));
    const bool bump = want_bump(g, opt);
    Evaluator ev(g, bump);
    CheckReport rep;
    rep.barred_bumped = bump;
    check_condition_one(g, bump, rep);

    const uint64_t total = 1ull << n;
    const int threads = std::max(1, std::min<int>(thread_count(opt), static_cast<int>(total / 4096) + 1));
    std::vector<std::vector<Violation>> parts(threads);
    std::vector<long long> counts(threads, 0);
    auto work = [&](int t) {
        uint64_t lo = total * t / threads, hi = total * (t + 1) / threads;
        for (uint64_t s = lo; s < hi; ++s) test_subset(ev, static_cast<uint32_t>(s), parts[t], counts[t]);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (int t = 0; t < threads; ++t) {
        rep.subsets_checked += counts[t];
        for (auto& v : parts[t]) rep.violations.push_back(std::move(v));
    }
    finish(rep, opt);
    return rep;
}

CheckReport check_assumption_reduced(const LabelledGraph& g, const CheckOptions& opt) {
    const size_t n = g.vertices.size();
    if (n > 28) throw std::invalid_argument("check_assumption_reduced: graph too large");
    const bool bump = want_bump(g, opt);
    Evaluator ev(g, bump);
    CheckReport rep;
    rep.barred_bumped = bump;
    check_condition_one(g, bump, rep);

    const uint32_t root = 1u << g.root();
    uint32_t up = 0, lo = 0, P = 0, Q = 0, N = 0;
    if (g.upper() >= 0) up = 1u << g.upper();
    if (g.lower() >= 0) lo = 1u << g.lower();
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::Kernel) continue;
        auto role = g.vertices[e.tail].role;
        uint32_t bit = 1u << e.tail;
        if (role == VertexRole::ContractedNoise) N |= bit;
        else if (role == VertexRole::ExternalNoise) (e.head == g.upper() ? P : Q) |= bit;
    }

    std::vector<uint32_t> fam2, fam3, fam4;
    if (g.prov.kind == Provenance::FirstOrder) {
        // a single vertex with legs: all-or-nothing on the legs
        for (uint32_t a : {0u, lo})
            for (uint32_t b : {0u, Q}) {
                fam2.push_back(a | b);
                fam3.push_back(root | a | b);
            }
        fam4.push_back(Q);
    } else if (g.prov.kind == Provenance::SecondOrder) {
        for (uint32_t a : {0u, up, up | P})
            for (uint32_t b : {0u, lo, lo | Q})
                for (uint32_t c : {0u, N}) fam2.push_back(a | b | c);
        for (uint32_t a : {0u, up | P})
            for (uint32_t b : {0u, lo | Q})
                for (uint32_t c : {0u, N}) fam3.push_back(root | a | b | c);
        fam4.push_back(up | P | N);
    } else {
        throw std::invalid_argument("check_assumption_reduced: graph outside the recognized shapes");
    }

    Lin lhs, rhs;
    auto run = [&](uint32_t s, int cond) {
        ++rep.subsets_checked;
        if (ev.violates(s, cond, lhs, rhs)) rep.violations.push_back({cond, members(s), ev.back(lhs), ev.back(rhs)});
    };
    std::vector<uint32_t> seen;
    auto fresh = [&](uint32_t s, int cond) {
        uint32_t key = s ^ (static_cast<uint32_t>(cond) << 29);
        for (uint32_t x : seen)
            if (x == key) return false;
        seen.push_back(key);
        return true;
    };
    for (uint32_t s : fam2)
        if (__builtin_popcount(s) >= 3 && fresh(s, 2)) run(s, 2);
    for (uint32_t s : fam3)
        if (__builtin_popcount(s) >= 2 && fresh(s, 3)) run(s, 3);
    for (uint32_t s : fam4)
        if (s && fresh(s, 4)) run(s, 4);
    finish(rep, opt);
    return rep;
}

}  // namespace nguniv
