#include "nguniv/numerics.hpp"
#include "nguniv/report.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nguniv;

namespace {

std::vector<Rational> rationals(const std::vector<std::string>& v) {
    std::vector<Rational> out;
    for (const auto& s : v) out.push_back(parse_rational(s));
    return out;
}

std::string symbols_json(int m, const std::string& cap, bool negative_only) {
    Json arr = Json::array();
    for (const auto& s : generate_symbols(m, ExactValue::parse(cap))) {
        if (negative_only && (!(s.homogeneity < ExactValue(0)) || recognize(s.symbol).family == SymbolShape::None))
            continue;
        arr.push_back(symbol_json(s));
    }
    return arr.dump();
}

std::string check_json(const LabelledGraph& raw, int chaos) {
    auto g = allocate_epsilon(raw);
    auto b = check_assumption_bruteforce(g);
    auto r = check_assumption_reduced(g);
    Json j = check_report_json(g, b);
    j["reduced_verdict"] = r.pass ? "pass" : "fail";
    j["chaos"] = chaos;
    return j.dump();
}

std::vector<std::string> check_second_order(int k, int l) {
    std::vector<std::string> out;
    for (const auto& t : second_order_chaos_terms(k, l)) out.push_back(check_json(t.graph, t.p + t.q));
    return out;
}

py::dict divergence(int k, int l, const std::string& pairing, int chaos, bool inner_leg) {
    auto d = classify_divergence(k, l, parse_pairing(pairing), chaos,
                                 inner_leg ? ChaosOneVariant::InnerLeg : ChaosOneVariant::OuterLeg);
    py::dict r;
    r["log_divergent"] = d.log_divergent;
    r["theta"] = d.theta.to_string();
    r["loop_degree"] = d.loop_degree.to_string();
    return r;
}

py::dict pitchfork(const std::vector<std::string>& value, const std::vector<std::string>& dtheta,
                   const std::vector<std::string>& moments) {
    std::vector<Rational> m{1};
    for (const auto& x : rationals(moments)) m.push_back(x);
    auto rep = check_pitchfork({Polynomial(rationals(value)), Polynomial(rationals(dtheta))}, MomentSequence::from_moments(m));
    std::vector<std::string> a;
    for (const auto& x : rep.a_hat) a.push_back(rational_to_string(x));
    py::dict r;
    r["a_hat"] = a;
    r["a_hat0_prime"] = rational_to_string(rep.a_hat0_prime);
    r["fourth_derivative"] = rational_to_string(rep.fourth_derivative);
    r["verdict"] = rep.verdict;
    r["reasons"] = rep.reasons;
    return r;
}

py::dict schedule(double a1, double a0p, const std::vector<double>& eps, double h_ratio) {
    ConstantConfig cfg;
    cfg.h_ratio = h_ratio;
    auto rep = numeric_schedule(a1, a0p, eps, cfg);
    std::vector<double> lambda0;
    for (const auto& row : rep.rows) lambda0.push_back(row.lambda0);
    py::dict r;
    r["c_log"] = rep.c_log;
    r["lambda0"] = lambda0;
    r["increments"] = rep.increments;
    r["bound"] = rep.bound;
    r["bounded"] = rep.bounded;
    return r;
}

py::dict noise_contract(double eps, int samples, uint64_t seed, bool gaussian, int n_time, int n_space) {
    auto cfg = LatticeConfig::for_eps(eps, 3, n_time, n_space);
    auto batch = sample_noise_batch(cfg, eps, seed, samples, gaussian ? NoiseModel::Gaussian : NoiseModel::Poisson);
    auto c = check_noise_contract(batch);
    std::vector<double> z3;
    for (const auto& e : c.kappa3) z3.push_back(e.z());
    py::dict r;
    r["kappa3_z"] = z3;
    r["variance"] = c.variance.value;
    r["kappa4"] = py::make_tuple(c.kappa4.value, c.kappa4.stderr_);
    r["integral"] = py::make_tuple(c.integral.value, c.integral.stderr_);
    r["pooled_points"] = c.pooled_points;
    r["symmetric"] = c.symmetric;
    r["normalised"] = c.normalised;
    r["finite_range"] = c.finite_range;
    return r;
}

}  // namespace

PYBIND11_MODULE(_nguniv, m) {
    m.doc() = "nguniv core bindings";
    m.attr("__version__") = NGUNIV_VERSION;

    m.def("homogeneity", [](const std::string& s) { return homogeneity(parse_symbol(s)).to_string(); });
    m.def("pretty", [](const std::string& s) { return pretty(parse_symbol(s)); });
    m.def("symbols_json", &symbols_json, py::arg("m"), py::arg("cap") = "3/2", py::arg("negative_only") = false);

    m.def("pairings", [](int k, int l) {
        std::vector<std::pair<std::string, long long>> out;
        for (const auto& p : enumerate_pairings(k, l))
            out.push_back({pairing_to_string(p), pairing_multiplicity(p, k, l).convert_to<long long>()});
        return out;
    });

    m.def("check_first_order_json", [](int k, int n) { return check_json(first_order_graph(k, n), 2 * k + 1 - n); });
    m.def("check_second_order_json", &check_second_order);
    m.def("classify_divergence", &divergence, py::arg("k"), py::arg("l"), py::arg("pairing"), py::arg("chaos"),
          py::arg("inner_leg") = false);

    m.def("wick_polynomial", [](int n, const std::vector<std::string>& moments) {
        std::vector<Rational> mm{1};
        for (const auto& x : rationals(moments)) mm.push_back(x);
        std::vector<std::string> out;
        for (const auto& c : wick_polynomial(n, MomentSequence::from_moments(mm)).coeffs) out.push_back(rational_to_string(c));
        return out;
    });
    m.def("check_pitchfork", &pitchfork, py::arg("value"), py::arg("dtheta"), py::arg("moments"));
    m.def("symbolic_cancellation", [](const std::string& a1, const std::string& a0p, const std::string& cl,
                                      const std::string& c0) {
        auto r = symbolic_cancellation(parse_rational(a1), parse_rational(a0p), parse_rational(cl), parse_rational(c0));
        return py::make_tuple(rational_to_string(r.lambda0.log_coeff), rational_to_string(r.lambda0.constant),
                              r.log_cancels);
    });

    m.def("estimate_constant", [](int k, int l, const std::string& pairing, double eps, double h_ratio) {
        ConstantConfig cfg;
        cfg.h_ratio = h_ratio;
        return estimate_constant(k, l, parse_pairing(pairing), eps, cfg);
    }, py::arg("k"), py::arg("l"), py::arg("pairing"), py::arg("eps"), py::arg("h_ratio") = 0.5);
    m.def("fit_log_divergence", [](const std::vector<std::pair<double, double>>& pts) {
        auto f = fit_log_divergence(pts);
        return py::make_tuple(f.slope, f.intercept, f.correlation);
    });
    m.def("numeric_schedule", &schedule, py::arg("a1_hat"), py::arg("a0_prime"), py::arg("eps"),
          py::arg("h_ratio") = 0.5);
    m.def("noise_contract", &noise_contract, py::arg("eps") = 0.25, py::arg("samples") = 8, py::arg("seed") = 1,
          py::arg("gaussian") = false, py::arg("n_time") = 32, py::arg("n_space") = 24);
}
