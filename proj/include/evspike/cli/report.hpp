#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evspike::cli {

/* One method's contribution to a report; every number in the report is keyed
 * by (spec digest, seed, method). */
struct MethodResult {
    std::string method;  // "event", "euler", "euler_gobet"
    std::uint64_t seed = 0;
    int n_runs = 0;
    double dt = 0.0;  // 0 for the event-based method
    double wall_seconds = 0.0;
    long total_spikes = 0;
    std::vector<std::vector<double>> hist;  // per neuron, probability per bin

    bool operator==(const MethodResult&) const = default;
};

struct KsEntry {
    std::string method_a, method_b;
    int neuron_id = 0;
    double value = 0.0;

    bool operator==(const KsEntry&) const = default;
};

struct SpeedupEntry {
    std::string baseline;  // method compared against "event"
    double ratio = 0.0;    // baseline wall / event wall

    bool operator==(const SpeedupEntry&) const = default;
};

struct SimReport {
    int format_version = 1;
    std::string spec_digest;  // fnv1a-64 of the canonical spec serialization
    double window_lo = 0.0, window_hi = 0.0, bin_width = 0.0;
    std::vector<int> neuron_ids;
    std::vector<MethodResult> methods;
    std::vector<KsEntry> ks;
    std::vector<SpeedupEntry> speedups;
    std::string machine;  // recorded for context, never asserted

    std::string to_json() const;
    static SimReport from_json(const std::string& text);
    void save(const std::string& path) const;
    static SimReport load(const std::string& path);

    bool operator==(const SimReport&) const = default;
};

std::string spec_digest_of(const std::string& canonical_spec_text);
std::string machine_summary();

}  // namespace evspike::cli
