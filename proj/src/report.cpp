#include "nguniv/report.hpp"

#include <boost/version.hpp>
#include <fftw3.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nguniv {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json versions_json() {
    Json v;
    v["nguniv"] = NGUNIV_VERSION;
    v["boost"] = BOOST_LIB_VERSION;
    v["fftw"] = std::string(fftw_version);
    v["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    return v;
}

RunManifest RunManifest::begin(const std::string& command) {
    RunManifest m;
    m.command = command;
    m.started = utc_timestamp();
    return m;
}

void RunManifest::end() { finished = utc_timestamp(); }

Json RunManifest::to_json() const {
    Json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["seeds"] = seeds;
    j["versions"] = versions_json();
    j["started"] = started;
    j["finished"] = finished.empty() ? utc_timestamp() : finished;
    return j;
}

Json exact_json(const ExactValue& v) { return v.to_string(); }

Json pairing_json(const Pairing& pi) {
    Json a = Json::array();
    for (auto [k, l] : pi) a.push_back(Json::array({k, l}));
    return a;
}

Json provenance_json(const Provenance& p) {
    Json j;
    switch (p.kind) {
        case Provenance::Synthetic: j["kind"] = "synthetic"; break;
        case Provenance::FirstOrder: j["kind"] = "first_order"; break;
        case Provenance::SecondOrder: j["kind"] = "second_order"; break;
        case Provenance::Constant: j["kind"] = "constant"; break;
    }
    if (!p.source.empty()) j["source"] = p.source;
    j["k"] = p.k;
    if (p.kind == Provenance::FirstOrder) {
        j["n"] = p.n_first;
    } else if (p.kind != Provenance::Synthetic) {
        j["l"] = p.l;
        j["p"] = p.p;
        j["q"] = p.q;
        j["n"] = p.n;
        j["p_prime"] = p.p_prime;
        j["q_prime"] = p.q_prime;
        j["pairing"] = pairing_to_string(p.pairing);
        j["multiplicity"] = p.multiplicity.str();
        j["delta_tau"] = p.delta_tau;
    }
    return j;
}

Json violation_json(const Violation& v) {
    Json j;
    j["condition"] = v.condition;
    j["subset"] = v.subset;
    j["lhs"] = exact_json(v.lhs);
    j["rhs"] = exact_json(v.rhs);
    return j;
}

Json check_report_json(const LabelledGraph& g, const CheckReport& r) {
    Json j;
    j["graph_id"] = g.id();
    j["provenance"] = provenance_json(g.prov);
    j["alpha"] = exact_json(graph_homogeneity(g));
    j["verdict"] = r.pass ? "pass" : "fail";
    Json vs = Json::array();
    for (const auto& v : r.violations) vs.push_back(violation_json(v));
    j["violations"] = vs;
    j["subsets_checked"] = r.subsets_checked;
    j["barred_bumped"] = r.barred_bumped;
    return j;
}

Json symbol_json(const GeneratedSymbol& s) {
    Json j;
    j["symbol"] = to_string(s.symbol);
    j["pretty"] = pretty(s.symbol);
    j["homogeneity"] = exact_json(s.homogeneity);
    auto shape = recognize(s.symbol);
    switch (shape.family) {
        case SymbolShape::First:
            j["family"] = "first";
            j["k"] = shape.k;
            j["n"] = shape.n;
            break;
        case SymbolShape::Second:
            j["family"] = "second";
            j["k"] = shape.k;
            j["l"] = shape.l;
            break;
        case SymbolShape::MonomialPsi:
            j["family"] = "monomial_psi";
            j["k"] = shape.k;
            break;
        default: j["family"] = nullptr;
    }
    j["in_u"] = s.in_u;
    j["in_v"] = s.in_v;
    return j;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig c;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(no) + ": empty key");
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t used = 0;
        double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
    }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        size_t used = 0;
        long long v = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace nguniv
