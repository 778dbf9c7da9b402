#include "evspike/cli/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evspike/errors.hpp"

#if defined(__linux__)
#include <sys/utsname.h>
#include <thread>
#endif

namespace evspike::cli {
namespace {

using nlohmann::json;

json method_to_json(const MethodResult& m) {
    return json{{"method", m.method},     {"seed", m.seed},
                {"n_runs", m.n_runs},     {"dt", m.dt},
                {"wall_seconds", m.wall_seconds}, {"total_spikes", m.total_spikes},
                {"hist", m.hist}};
}

MethodResult method_from_json(const json& j) {
    MethodResult m;
    m.method = j.at("method").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_runs = j.at("n_runs").get<int>();
    m.dt = j.at("dt").get<double>();
    m.wall_seconds = j.at("wall_seconds").get<double>();
    m.total_spikes = j.at("total_spikes").get<long>();
    m.hist = j.at("hist").get<std::vector<std::vector<double>>>();
    return m;
}

}  // namespace

std::string spec_digest_of(const std::string& canonical_spec_text) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a, 64 bit
    for (unsigned char c : canonical_spec_text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string machine_summary() {
#if defined(__linux__)
    utsname u{};
    std::string name = uname(&u) == 0 ? std::string(u.machine) : "unknown";
    return name + " x" + std::to_string(std::thread::hardware_concurrency());
#else
    return "unknown";
#endif
}

std::string SimReport::to_json() const {
    json j;
    j["format_version"] = format_version;
    j["spec_digest"] = spec_digest;
    j["window"] = {{"lo", window_lo}, {"hi", window_hi}, {"bin_width", bin_width}};
    j["neuron_ids"] = neuron_ids;
    j["methods"] = json::array();
    for (const auto& m : methods) j["methods"].push_back(method_to_json(m));
    j["ks"] = json::array();
    for (const auto& k : ks)
        j["ks"].push_back(json{{"method_a", k.method_a},
                               {"method_b", k.method_b},
                               {"neuron_id", k.neuron_id},
                               {"value", k.value}});
    j["speedups"] = json::array();
    for (const auto& s : speedups)
        j["speedups"].push_back(json{{"baseline", s.baseline}, {"ratio", s.ratio}});
    j["machine"] = machine;
    return j.dump(2) + "\n";
}

SimReport SimReport::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SpecError("report", std::string("bad JSON: ") + e.what());
    }
    try {
        SimReport r;
        r.format_version = j.at("format_version").get<int>();
        if (r.format_version != 1)
            throw SpecError("report", "unsupported format_version");
        r.spec_digest = j.at("spec_digest").get<std::string>();
        r.window_lo = j.at("window").at("lo").get<double>();
        r.window_hi = j.at("window").at("hi").get<double>();
        r.bin_width = j.at("window").at("bin_width").get<double>();
        r.neuron_ids = j.at("neuron_ids").get<std::vector<int>>();
        for (const auto& m : j.at("methods")) r.methods.push_back(method_from_json(m));
        for (const auto& k : j.at("ks"))
            r.ks.push_back({k.at("method_a").get<std::string>(),
                            k.at("method_b").get<std::string>(),
                            k.at("neuron_id").get<int>(), k.at("value").get<double>()});
        for (const auto& s : j.at("speedups"))
            r.speedups.push_back(
                {s.at("baseline").get<std::string>(), s.at("ratio").get<double>()});
        r.machine = j.at("machine").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw SpecError("report", std::string("missing field: ") + e.what());
    }
}

void SimReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("path", "cannot open " + path + " for writing");
    out << to_json();
}

SimReport SimReport::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("path", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace evspike::cli
