#pragma once

#include "nguniv/graph.hpp"
#include "nguniv/symbols.hpp"

#include "json.hpp"

#include <map>
#include <string>
#include <vector>

namespace nguniv {

using Json = nlohmann::ordered_json;

struct RunManifest {
    std::string command;
    Json parameters = Json::object();
    std::vector<uint64_t> seeds;
    std::string started, finished;

    static RunManifest begin(const std::string& command);
    void end();
    Json to_json() const;
};

std::string utc_timestamp();
Json versions_json();

Json exact_json(const ExactValue& v);  // always a string
Json pairing_json(const Pairing& pi);
Json provenance_json(const Provenance& p);
Json violation_json(const Violation& v);
// {graph_id, provenance, alpha, verdict, violations}
Json check_report_json(const LabelledGraph& g, const CheckReport& r);
Json symbol_json(const GeneratedSymbol& s);

// Text key-value file: `key = value`, '#' comments.
class KeyValueConfig {
public:
    static KeyValueConfig load(const std::string& path);
    static KeyValueConfig parse(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::string csv_field(const std::string& s);

}  // namespace nguniv
