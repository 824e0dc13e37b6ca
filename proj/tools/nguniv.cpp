#include "nguniv/numerics.hpp"
#include "nguniv/report.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

using namespace nguniv;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string format;
    std::string out;
    int threads = 0;
};

void emit(const Globals& g, const std::string& text) {
    std::cout << text;
    if (!g.out.empty()) {
        std::ofstream f(g.out);
        if (!f) throw UsageError("cannot write " + g.out);
        f << text;
    }
}

void require_format(const std::string& fmt, std::initializer_list<const char*> allowed, const std::string& cmd) {
    for (const char* a : allowed)
        if (fmt == a) return;
    throw UsageError("format " + fmt + " is not available for " + cmd);
}

std::string manifest_line(const char* prefix, const RunManifest& m) { return std::string(prefix) + m.to_json().dump() + "\n"; }

std::string fmt_double(double x) {
    std::ostringstream o;
    o.precision(10);
    o << x;
    return o.str();
}

// "2^-2..2^-6", "2^-3", "0.25,0.125"
std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> out;
    static const std::regex range(R"(\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*)");
    std::smatch m;
    if (std::regex_match(text, m, range)) {
        int a = std::stoi(m[1]), b = std::stoi(m[2]);
        int step = a <= b ? 1 : -1;
        for (int e = a;; e += step) {
            out.push_back(std::ldexp(1.0, e));
            if (e == b) break;
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    static const std::regex power(R"(\s*2\^(-?\d+)\s*)");
    while (std::getline(ss, item, ',')) {
        if (std::regex_match(item, m, power)) {
            out.push_back(std::ldexp(1.0, std::stoi(m[1])));
            continue;
        }
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad eps value: " + item);
        }
    }
    if (out.empty()) throw UsageError("empty eps list");
    for (double e : out)
        if (!(e > 0 && e < 1)) throw UsageError("eps must lie in (0,1)");
    return out;
}

Json double_list(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

// ---------------------------------------------------------------- symbols

int cmd_symbols(const Globals& g, int m, const std::string& cap_text, bool negative_only) {
    require_format(g.format, {"json", "csv"}, "symbols");
    if (m < 1) throw UsageError("--m must be at least 1");
    ExactValue cap = ExactValue::parse(cap_text);
    auto man = RunManifest::begin("symbols");
    man.parameters = {{"m", m}, {"cap", cap.to_string()}, {"negative_only", negative_only}};
    auto all = generate_symbols(m, cap);
    std::vector<GeneratedSymbol> kept;
    for (const auto& s : all) {
        if (negative_only) {
            auto f = recognize(s.symbol).family;
            if (!(s.homogeneity < ExactValue(0)) || f == SymbolShape::None) continue;
        }
        kept.push_back(s);
    }
    man.end();
    std::ostringstream o;
    if (g.format == "json") {
        Json j;
        j["manifest"] = man.to_json();
        Json arr = Json::array();
        for (const auto& s : kept) arr.push_back(symbol_json(s));
        j["symbols"] = arr;
        j["count"] = kept.size();
        o << j.dump(2) << "\n";
    } else {
        o << manifest_line("# manifest: ", man);
        o << "symbol,pretty,homogeneity,family,k,n,l,in_u,in_v\n";
        for (const auto& s : kept) {
            Json j = symbol_json(s);
            auto field = [&](const char* key) { return j.contains(key) ? j[key].dump() : std::string(); };
            std::string fam = j["family"].is_null() ? "" : j["family"].get<std::string>();
            o << csv_field(j["symbol"].get<std::string>()) << "," << csv_field(j["pretty"].get<std::string>()) << ","
              << csv_field(j["homogeneity"].get<std::string>()) << "," << fam << "," << field("k") << "," << field("n")
              << "," << field("l") << "," << (s.in_u ? 1 : 0) << "," << (s.in_v ? 1 : 0) << "\n";
        }
    }
    emit(g, o.str());
    return 0;
}

// ---------------------------------------------------------------- check

struct CheckInput {
    std::string symbol;
    std::vector<int> second;  // k l
    int chaos = -1;
    bool no_mass_renorm = false;
    std::string barred = "auto";
    std::string checker = "both";
};

Json divergence_json(const Divergence& d) {
    Json j;
    j["class"] = d.log_divergent ? "log_divergent" : "finite";
    j["theta"] = exact_json(d.theta);
    j["loop_degree"] = exact_json(d.loop_degree);
    return j;
}

int cmd_check(const Globals& g, const CheckInput& in) {
    require_format(g.format, {"json", "dot"}, "check");
    if (in.symbol.empty() == in.second.empty()) throw UsageError("give exactly one of --symbol or --second-order");
    CheckOptions opt;
    opt.threads = g.threads;
    if (in.barred == "auto")
        opt.barred = BarredBump::Auto;
    else if (in.barred == "on")
        opt.barred = BarredBump::On;
    else if (in.barred == "off")
        opt.barred = BarredBump::Off;
    else
        throw UsageError("--barred must be auto, on or off");
    const bool brute = in.checker != "reduced", reduced = in.checker != "bruteforce";
    if (in.checker != "both" && in.checker != "reduced" && in.checker != "bruteforce")
        throw UsageError("--checker must be both, bruteforce or reduced");

    auto man = RunManifest::begin("check");
    struct Item {
        LabelledGraph graph;
        bool second = false;
        int chaos = 0;
        std::string multiplicity;
    };
    std::vector<Item> items;
    int k = 0, l = 0;
    auto add_second = [&](int kk, int ll) {
        if (!second_order_valid(kk, ll)) throw UsageError("no second order symbol for (k,l) = (" + std::to_string(kk) + "," +
                                                          std::to_string(ll) + ")");
        for (auto& t : second_order_chaos_terms(kk, ll)) {
            int c = t.p + t.q;
            if (in.chaos >= 0 && c != in.chaos) continue;
            items.push_back({t.graph, true, c, t.multiplicity.str()});
        }
    };
    if (!in.symbol.empty()) {
        man.parameters["symbol"] = in.symbol;
        Symbol s;
        try {
            s = parse_symbol(in.symbol);
        } catch (const std::exception& e) {
            throw UsageError(std::string("unknown symbol: ") + e.what());
        }
        auto shape = recognize(s);
        if (shape.family == SymbolShape::First) {
            k = shape.k;
            items.push_back({first_order_graph(shape.k, shape.n), false, 2 * shape.k + 1 - shape.n, "1"});
        } else if (shape.family == SymbolShape::Second) {
            k = shape.k, l = shape.l;
            add_second(shape.k, shape.l);
        } else {
            throw UsageError("unknown symbol: " + in.symbol + " has no graph expansion");
        }
    } else {
        k = in.second[0], l = in.second[1];
        man.parameters["second_order"] = {k, l};
        add_second(k, l);
    }
    man.parameters["chaos"] = in.chaos;
    man.parameters["mass_renorm"] = !in.no_mass_renorm;
    man.parameters["barred"] = in.barred;
    man.parameters["checker"] = in.checker;
    if (items.empty()) throw UsageError("no components selected");

    Json comps = Json::array();
    std::string dot;
    int passed = 0, failed = 0, renormalised = 0;
    bool agreement = true;
    for (const auto& it : items) {
        auto graph = allocate_epsilon(it.graph);
        CheckReport rb, rr;
        if (brute) rb = check_assumption_bruteforce(graph, opt);
        if (reduced) rr = check_assumption_reduced(graph, opt);
        const CheckReport& main = brute ? rb : rr;
        Json c = check_report_json(graph, main);
        c["chaos"] = it.chaos;
        c["multiplicity"] = it.multiplicity;
        c["checker"] = brute ? "bruteforce" : "reduced";
        if (brute && reduced) {
            c["reduced_verdict"] = rr.pass ? "pass" : "fail";
            c["agreement"] = rb.pass == rr.pass;
            agreement = agreement && rb.pass == rr.pass;
        }
        std::string status = main.pass ? "pass" : "fail";
        if (it.second && it.chaos <= 1 && !in.no_mass_renorm) {
            status = "renormalised";
            const auto& p = graph.prov;
            auto variant = p.p == 1 ? ChaosOneVariant::InnerLeg : ChaosOneVariant::OuterLeg;
            try {
                c["divergence"] = divergence_json(classify_divergence(p.k, p.l, p.pairing, it.chaos, variant));
            } catch (const std::exception& e) {
                c["divergence"] = nullptr;
                c["divergence_note"] = e.what();
            }
            ++renormalised;
        } else if (main.pass) {
            ++passed;
        } else {
            ++failed;
        }
        c["status"] = status;
        comps.push_back(c);
        dot += "// " + graph.id() + " status=" + status + "\n" + to_dot(graph) + "\n";
    }
    man.end();
    const bool ok = failed == 0 && agreement;
    std::ostringstream o;
    if (g.format == "json") {
        Json j;
        j["manifest"] = man.to_json();
        j["components"] = comps;
        j["summary"] = {{"components", items.size()},
                        {"passed", passed},
                        {"failed", failed},
                        {"renormalised", renormalised},
                        {"agreement", agreement}};
        j["verdict"] = ok ? "pass" : "fail";
        o << j.dump(2) << "\n";
    } else {
        o << manifest_line("// manifest: ", man) << dot;
    }
    emit(g, o.str());
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- constants

bool even_straddling(const Pairing& pi) {
    for (auto [a, b] : pi)
        if (a < 1 || b < 1 || (a + b) % 2) return false;
    return !pi.empty();
}

int cmd_constants(const Globals& g, const std::string& kl, const std::string& eps_text, const std::string& pairing,
                  double h_ratio) {
    require_format(g.format, {"json", "csv"}, "constants");
    int k = 0, l = 0;
    {
        static const std::regex re(R"(\s*(\d+)\s*,\s*(\d+)\s*)");
        std::smatch m;
        if (!std::regex_match(kl, m, re)) throw UsageError("--kl expects K,L");
        k = std::stoi(m[1]), l = std::stoi(m[2]);
    }
    if (k < 1 || l < 1 || k + l > 8) throw UsageError("(k,l) outside the configured range k,l >= 1, k+l <= 8");
    auto eps = parse_eps_list(eps_text);
    std::vector<Pairing> pis;
    for (const auto& pi : enumerate_pairings(k, l)) {
        if (!even_straddling(pi)) continue;
        if (pairing == "all" || (pairing == "pairwise" && is_pairwise(pi)) || (pairing == "all4" && pi.size() == 1))
            pis.push_back(pi);
    }
    if (pairing != "all" && pairing != "pairwise" && pairing != "all4") {
        Pairing pi;
        try {
            pi = parse_pairing(pairing);
        } catch (const std::exception&) {
            throw UsageError("bad --pairing: " + pairing);
        }
        if (!even_straddling(pi)) throw UsageError("pairing blocks must straddle with even size");
        pis.push_back(pi);
    }
    if (pis.empty()) throw UsageError("no matching zeroth-chaos pairings for (" + kl + ")");

    ConstantConfig cfg;
    cfg.h_ratio = h_ratio;
    auto man = RunManifest::begin("constants");
    man.parameters = {{"k", k}, {"l", l}, {"eps", double_list(eps)}, {"pairing", pairing}, {"h_ratio", h_ratio}};

    std::vector<std::vector<double>> values(pis.size());
    std::vector<double> summed;
    for (double e : eps) {
        ConstantEstimator est(e, cfg);
        double total = 0;
        for (size_t i = 0; i < pis.size(); ++i) {
            values[i].push_back(est.estimate(k, l, pis[i]));
            total += static_cast<double>(pairing_multiplicity(pis[i], k, l).convert_to<long long>()) * values[i].back();
        }
        summed.push_back(total);
    }

    Json fits = Json::array();
    bool agree_all = true;
    auto summarize = [&](const std::string& id, const std::vector<double>& v, bool symbolic_log, const Json& symbolic) {
        Json f;
        f["pairing_id"] = id;
        f["symbolic"] = symbolic;
        f["differences"] = double_list(successive_differences(v));
        if (v.size() >= 4) {
            std::vector<std::pair<double, double>> pts;
            for (size_t i = 0; i < v.size(); ++i) pts.push_back({eps[i], v[i]});
            auto fit = fit_log_divergence(pts);
            f["slope"] = fit.slope;
            f["intercept"] = fit.intercept;
            f["correlation"] = fit.correlation;
            std::string numeric = "unclear";
            if (numeric_log_growth(v) && fit.slope > 0 && fit.correlation >= 0.98)
                numeric = "log_divergent";
            else if (differences_shrink(v, 0.7))
                numeric = "finite";
            f["numeric"] = numeric;
            bool agree = numeric == (symbolic_log ? "log_divergent" : "finite");
            f["agree"] = agree;
            agree_all = agree_all && agree;
        } else {
            f["numeric"] = nullptr;
            f["agree"] = nullptr;
        }
        fits.push_back(f);
    };
    bool any_log = false;
    for (size_t i = 0; i < pis.size(); ++i) {
        auto d = classify_divergence(k, l, pis[i], 0);
        any_log = any_log || d.log_divergent;
        summarize(pairing_to_string(pis[i]), values[i], d.log_divergent, divergence_json(d));
    }
    if (pis.size() > 1) summarize("sum", summed, any_log, Json{{"class", any_log ? "log_divergent" : "finite"}});
    man.end();

    std::ostringstream o;
    if (g.format == "json") {
        Json rows = Json::array();
        for (size_t j = 0; j < eps.size(); ++j)
            for (size_t i = 0; i < pis.size(); ++i)
                rows.push_back({{"eps", eps[j]},
                                {"k", k},
                                {"l", l},
                                {"pairing_id", pairing_to_string(pis[i])},
                                {"estimate", values[i][j]},
                                {"stderr", 0.0}});
        Json j;
        j["manifest"] = man.to_json();
        j["rows"] = rows;
        j["fits"] = fits;
        j["verdict"] = agree_all ? "pass" : "fail";
        o << j.dump(2) << "\n";
    } else {
        o << manifest_line("# manifest: ", man);
        o << "eps,k,l,pairing_id,estimate,stderr\n";
        for (size_t j = 0; j < eps.size(); ++j) {
            for (size_t i = 0; i < pis.size(); ++i)
                o << fmt_double(eps[j]) << "," << k << "," << l << "," << csv_field(pairing_to_string(pis[i])) << ","
                  << fmt_double(values[i][j]) << ",0\n";
            if (pis.size() > 1)
                o << fmt_double(eps[j]) << "," << k << "," << l << ",sum," << fmt_double(summed[j]) << ",0\n";
        }
        for (const auto& f : fits) o << "# fit: " << f.dump() << "\n";
    }
    emit(g, o.str());
    return agree_all ? 0 : 1;
}

// ---------------------------------------------------------------- potential

std::vector<std::string> words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> w;
    for (std::string x; in >> x;) w.push_back(x);
    return w;
}

// "poly c0 c1 ..." or "wick n c [n c ...]" (sum of c W_{n,mu})
Polynomial parse_polynomial(const std::string& key, const std::string& text, const MomentSequence& mu) {
    auto w = words(text);
    if (w.empty()) throw UsageError("missing " + key);
    if (w[0] == "poly") {
        std::vector<Rational> c;
        for (size_t i = 1; i < w.size(); ++i) c.push_back(parse_rational(w[i]));
        return Polynomial(c);
    }
    if (w[0] == "wick") {
        if (w.size() % 2 != 1 || w.size() < 3) throw UsageError(key + ": wick expects pairs n c");
        Polynomial p;
        for (size_t i = 1; i < w.size(); i += 2) p = p + parse_rational(w[i + 1]) * wick_polynomial(std::stoi(w[i]), mu);
        return p;
    }
    throw UsageError(key + ": expected poly or wick");
}

int max_wick_degree(const std::string& text) {
    auto w = words(text);
    int d = 0;
    if (!w.empty() && w[0] == "wick")
        for (size_t i = 1; i < w.size(); i += 2) d = std::max(d, std::stoi(w[i]));
    if (!w.empty() && w[0] == "poly") d = static_cast<int>(w.size()) - 2;
    return d;
}

int cmd_potential(const Globals& g, const std::string& spec_path, bool numeric, const std::string& eps_override) {
    require_format(g.format, {"json", "csv"}, "potential");
    if (spec_path.empty()) throw UsageError("--spec is required");
    auto cfg = KeyValueConfig::load(spec_path);
    auto man = RunManifest::begin("potential");
    for (const auto& [key, v] : cfg.values()) man.parameters[key] = v;
    man.parameters["numeric"] = numeric;

    const int degree = std::max({max_wick_degree(cfg.get("value", "")), max_wick_degree(cfg.get("dtheta", "")), 2});
    auto mu_words = words(cfg.get("mu", "gaussian 1"));
    MomentSequence mu;
    Json mu_json;
    if (mu_words.empty()) throw UsageError("empty mu");
    if (mu_words[0] == "gaussian") {
        Rational c = mu_words.size() > 1 ? parse_rational(mu_words[1]) : Rational(1);
        mu = MomentSequence::gaussian(c, degree);
        mu_json["source"] = "gaussian";
    } else if (mu_words[0] == "moments") {
        std::vector<Rational> m{1};
        for (size_t i = 1; i < mu_words.size(); ++i) m.push_back(parse_rational(mu_words[i]));
        mu = MomentSequence::from_moments(m);
        mu_json["source"] = "moments";
    } else if (mu_words[0] == "psi") {
        double e = cfg.get_double("psi_eps", 0.25);
        int n = static_cast<int>(cfg.get_int("psi_samples", 8));
        uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
        auto lat = LatticeConfig::for_eps(e);
        auto samples = sample_noise_batch(lat, e, seed, n, NoiseModel::Poisson, g.threads);
        for (int i = 0; i < n; ++i) man.seeds.push_back(seed + i);
        auto pm = estimate_psi_moments(samples, 8);
        auto seq = pm.sequence();
        // the law of Psi is symmetric; odd empirical moments are noise
        for (size_t j = 1; j < seq.m.size(); j += 2) seq.m[j] = 0;
        mu = seq;
        mu_json["source"] = "psi";
        mu_json["estimated"] = double_list(pm.m);
        mu_json["stderr"] = double_list(pm.stderr_);
    } else {
        throw UsageError("mu must be gaussian, moments or psi");
    }
    Json mj = Json::array();
    for (const auto& x : mu.m) mj.push_back(rational_to_string(x));
    mu_json["moments"] = mj;

    PolynomialFamily fam{parse_polynomial("value", cfg.get("value", ""), mu),
                         parse_polynomial("dtheta", cfg.get("dtheta", ""), mu)};
    Json j;
    PitchforkReport pf;
    try {
        pf = check_pitchfork(fam, mu, true);
    } catch (const std::invalid_argument& e) {
        man.end();
        j["manifest"] = man.to_json();
        j["verdict"] = "rejected";
        j["reasons"] = Json::array({e.what()});
        std::ostringstream o;
        if (g.format == "json")
            o << j.dump(2) << "\n";
        else
            o << manifest_line("# manifest: ", man) << "# rejected: " << e.what() << "\n";
        emit(g, o.str());
        return 1;
    }
    if (pf.a_hat0_prime == 0) throw UsageError("a_hat_0' = 0: the theta schedule is undefined");
    if (pf.a_hat.size() < 2) throw UsageError("potential has no cubic term in <V>'");

    Json ah = Json::array();
    for (const auto& a : pf.a_hat) ah.push_back(rational_to_string(a));
    j["manifest"] = nullptr;
    j["mu"] = mu_json;
    j["value"] = fam.value.to_string();
    j["dtheta"] = fam.dtheta.to_string();
    j["a_hat"] = ah;
    j["lambdas"] = Json::array();
    for (size_t i = 1; i < pf.a_hat.size(); ++i) j["lambdas"].push_back(rational_to_string(pf.a_hat[i]));
    j["a_hat0_prime"] = rational_to_string(pf.a_hat0_prime);
    j["fourth_derivative"] = rational_to_string(pf.fourth_derivative);
    j["pitchfork"] = pf.verdict;
    j["reasons"] = pf.reasons;

    const Rational a1 = pf.a_hat[1];
    const double a1d = rational_to_double(a1), a0pd = rational_to_double(pf.a_hat0_prime);
    auto eps = parse_eps_list(eps_override.empty() ? cfg.get("eps", "2^-2..2^-6") : eps_override);
    bool cancels = true;
    ScheduleReport sched;
    if (numeric) {
        ConstantConfig cc;
        cc.h_ratio = cfg.get_double("h_ratio", 0.5);
        sched = numeric_schedule(a1d, a0pd, eps, cc);
    } else {
        Rational c_log = parse_rational(cfg.get("c_log", "1")), c0 = parse_rational(cfg.get("c0", "0")),
                 c13 = parse_rational(cfg.get("c13", "0"));
        auto canc = symbolic_cancellation(a1, pf.a_hat0_prime, c_log, c0);
        j["cancellation"] = {{"log_coeff", rational_to_string(canc.lambda0.log_coeff)},
                             {"constant", rational_to_string(canc.lambda0.constant)},
                             {"log_cancels", canc.log_cancels}};
        cancels = canc.log_cancels;
        std::vector<double> c22, c13v;
        for (double e : eps) {
            c22.push_back(rational_to_double(c_log) * std::log(1 / e) + rational_to_double(c0));
            c13v.push_back(rational_to_double(c13));
        }
        sched = schedule_from_constants(a1d, a0pd, rational_to_double(c_log), eps, c22, c13v);
    }
    Json rows = Json::array();
    for (const auto& r : sched.rows)
        rows.push_back({{"eps", r.eps},
                        {"theta", r.theta},
                        {"c22", r.c22},
                        {"c13", r.c13},
                        {"c_eps", r.c_eps},
                        {"lambda0", r.lambda0}});
    j["schedule"] = {{"mode", numeric ? "numeric" : "symbolic"},
                     {"c_log", sched.c_log},
                     {"rows", rows},
                     {"increments", double_list(sched.increments)},
                     {"uncancelled_increment", sched.uncancelled},
                     {"bound", sched.bound},
                     {"bounded", sched.bounded}};
    const bool ok = pf.verdict && cancels && sched.bounded;
    j["verdict"] = ok ? "pass" : "fail";
    man.end();
    j["manifest"] = man.to_json();

    std::ostringstream o;
    if (g.format == "json") {
        o << j.dump(2) << "\n";
    } else {
        o << manifest_line("# manifest: ", man);
        o << "# a_hat: " << j["a_hat"].dump() << "\n# a_hat0_prime: " << j["a_hat0_prime"].get<std::string>()
          << "\n# pitchfork: " << (pf.verdict ? "true" : "false") << "\n";
        if (j.contains("cancellation")) o << "# cancellation: " << j["cancellation"].dump() << "\n";
        o << "eps,theta,c22,c13,c_eps,lambda0,increment\n";
        for (size_t i = 0; i < sched.rows.size(); ++i) {
            const auto& r = sched.rows[i];
            o << fmt_double(r.eps) << "," << fmt_double(r.theta) << "," << fmt_double(r.c22) << "," << fmt_double(r.c13)
              << "," << fmt_double(r.c_eps) << "," << fmt_double(r.lambda0) << ","
              << (i ? fmt_double(sched.increments[i - 1]) : std::string()) << "\n";
        }
        o << "# bound: " << fmt_double(sched.bound) << " bounded: " << (sched.bounded ? "true" : "false") << "\n";
    }
    emit(g, o.str());
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------- noise

std::string offsets_text(const std::vector<Offset>& z) {
    std::string s;
    for (const auto& o : z) {
        if (!s.empty()) s += ";";
        s += std::to_string(o.t) + ":" + std::to_string(o.x[0]) + ":" + std::to_string(o.x[1]) + ":" + std::to_string(o.x[2]);
    }
    return s.empty() ? "0" : s;
}

int cmd_noise(const Globals& g, double eps, double h, int samples, uint64_t seed, int n_time, int n_space, int d,
              const std::string& model_text) {
    require_format(g.format, {"json", "csv"}, "noise");
    NoiseModel model;
    if (model_text == "poisson")
        model = NoiseModel::Poisson;
    else if (model_text == "gaussian")
        model = NoiseModel::Gaussian;
    else
        throw UsageError("--model must be poisson or gaussian");
    if (samples < 2) throw UsageError("--samples must be at least 2");
    LatticeConfig cfg;
    cfg.d = d;
    cfg.n_time = n_time;
    cfg.n_space = n_space;
    cfg.h = h > 0 ? h : eps / 2;
    cfg.validate();
    auto man = RunManifest::begin("noise");
    man.parameters = {{"eps", eps},     {"h", cfg.h}, {"samples", samples}, {"n_time", n_time},
                      {"n_space", n_space}, {"d", d},   {"model", model_text}};
    for (int i = 0; i < samples; ++i) man.seeds.push_back(seed + i);
    auto batch = sample_noise_batch(cfg, eps, seed, samples, model, g.threads);
    auto c = check_noise_contract(batch);
    man.end();

    struct Row {
        std::string kind;
        int order;
        std::string lag;
        Estimate e;
    };
    std::vector<Row> rows;
    rows.push_back({"variance", 2, "0", c.variance});
    for (size_t i = 0; i < c.kappa3.size(); ++i) rows.push_back({"kappa3", 3, offsets_text(c.lags3[i]), c.kappa3[i]});
    rows.push_back({"kappa4", 4, "0;0;0", c.kappa4});
    rows.push_back({"covariance_integral", 2, "window", c.integral});
    for (size_t i = 0; i < c.far.size(); ++i) rows.push_back({"far_covariance", 2, offsets_text({c.far_lags[i]}), c.far[i]});
    const bool positive = c.variance.value > 0;
    const bool gaussian_control = model != NoiseModel::Gaussian || std::abs(c.kappa4.z()) < 4;
    const bool ok = c.pass() && positive && gaussian_control;
    Json verdicts = {{"symmetry", c.symmetric},
                     {"normalisation", c.normalised},
                     {"finite_range", c.finite_range},
                     {"positive_variance", positive}};
    if (model == NoiseModel::Gaussian) verdicts["gaussian_fourth_cumulant"] = gaussian_control;

    std::ostringstream o;
    if (g.format == "json") {
        Json j;
        j["manifest"] = man.to_json();
        Json arr = Json::array();
        for (const auto& r : rows)
            arr.push_back({{"kind", r.kind}, {"order", r.order}, {"lag", r.lag}, {"value", r.e.value}, {"stderr", r.e.stderr_}});
        j["estimates"] = arr;
        j["pooled_points"] = c.pooled_points;
        j["verdicts"] = verdicts;
        j["verdict"] = ok ? "pass" : "fail";
        o << j.dump(2) << "\n";
    } else {
        o << manifest_line("# manifest: ", man);
        o << "kind,order,lag,value,stderr,z\n";
        for (const auto& r : rows)
            o << r.kind << "," << r.order << "," << r.lag << "," << fmt_double(r.e.value) << "," << fmt_double(r.e.stderr_)
              << "," << fmt_double(r.kind == "covariance_integral" ? (r.e.value - 1) / r.e.stderr_ : r.e.z()) << "\n";
        o << "# pooled_points: " << c.pooled_points << "\n# verdicts: " << verdicts.dump() << "\n";
    }
    emit(g, o.str());
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nguniv: power counting, renormalisation constants and noise diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI/TOML file with option defaults");
    Globals g;
    g.format = "json";
    app.add_option("--format", g.format, "json | dot | csv")->check(CLI::IsMember({"json", "dot", "csv"}));
    app.add_option("--out", g.out, "also write the report to this file");
    app.add_option("--threads", g.threads, "worker threads (default: NGUNIV_THREADS or 1)")->check(CLI::NonNegativeNumber);

    int m = 1;
    std::string cap = "3/2";
    bool negative_only = false;
    auto* sym = app.add_subcommand("symbols", "list generated symbols with homogeneities");
    sym->add_option("--m", m, "number of Psi-power production rules")->required();
    sym->add_option("--cap", cap, "homogeneity cap");
    sym->add_flag("--negative-only", negative_only, "keep negative-homogeneity symbols of the expansion families");

    CheckInput ci;
    auto* chk = app.add_subcommand("check", "allocate and run the power-counting checks");
    chk->add_option("--symbol", ci.symbol, "symbol, e.g. \"E(Psi^5)\"");
    chk->add_option("--second-order", ci.second, "K L")->expected(2);
    chk->add_option("--chaos", ci.chaos, "keep components with p+q = c");
    chk->add_flag("--no-mass-renorm", ci.no_mass_renorm, "check p+q <= 1 components as they are");
    chk->add_option("--barred", ci.barred, "auto | on | off");
    chk->add_option("--checker", ci.checker, "both | bruteforce | reduced");

    std::string kl, eps_text = "2^-2..2^-6", pairing = "all";
    double h_ratio = 0.5;
    auto* con = app.add_subcommand("constants", "estimate renormalisation constants and fit their eps dependence");
    con->add_option("--kl", kl, "K,L")->required();
    con->add_option("--eps", eps_text, "2^-a..2^-b or a comma list");
    con->add_option("--pairing", pairing, "all | pairwise | all4 | explicit, e.g. \"(1,1),(1,1)\"");
    con->add_option("--h-ratio", h_ratio, "grid step over eps")->check(CLI::Range(0.01, 1.0));

    std::string spec, pot_eps;
    bool numeric = false;
    auto* pot = app.add_subcommand("potential", "pitchfork check, counterterm and theta schedule");
    pot->add_option("--spec", spec, "key-value file describing V and mu")->required();
    pot->add_flag("--numeric", numeric, "use numerically estimated constants");
    pot->add_option("--eps", pot_eps, "override the eps list");

    double n_eps = 0.25, n_h = 0;
    int n_samples = 32, n_time = 32, n_space = 24, n_d = 3;
    uint64_t seed = 1;
    std::string model = "poisson";
    auto* noi = app.add_subcommand("noise", "sample the noise and test its cumulant contract");
    noi->add_option("--eps", n_eps, "mollification scale");
    noi->add_option("--step", n_h, "lattice step h (default eps/2)");
    noi->add_option("--samples", n_samples, "independent samples");
    noi->add_option("--seed", seed, "base seed; sample i uses seed + i");
    noi->add_option("--n-time", n_time);
    noi->add_option("--n-space", n_space);
    noi->add_option("--d", n_d, "spatial dimension (1 or 3)");
    noi->add_option("--model", model, "poisson | gaussian");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (g.threads > 0) setenv("NGUNIV_THREADS", std::to_string(g.threads).c_str(), 1);

    try {
        if (*sym) return cmd_symbols(g, m, cap, negative_only);
        if (*chk) return cmd_check(g, ci);
        if (*con) return cmd_constants(g, kl, eps_text, pairing, h_ratio);
        if (*pot) return cmd_potential(g, spec, numeric, pot_eps);
        if (*noi) return cmd_noise(g, n_eps, n_h, n_samples, seed, n_time, n_space, n_d, model);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
