#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "evspike/models/network.hpp"

namespace evspike::core {

struct SpikeRecord {
    double time;
    int neuron;
    bool operator==(const SpikeRecord&) const = default;
};

struct SpikeTrain {
    std::vector<SpikeRecord> records;  // time-ordered

    void add(double time, int neuron) { records.push_back({time, neuron}); }
    std::size_t size() const { return records.size(); }
    std::vector<double> times_for(int neuron) const;

    void write_csv(std::ostream& out) const;  // "time,neuron_id" lines
    static SpikeTrain read_csv(std::istream& in);
};

/* A spike emitted by `syn.pre` at `emission`, due at the post neuron at
 * `due` = emission + delay. */
struct PendingDelivery {
    double due;
    double emission;
    int syn;  // index into NetworkSpec::synapses
    bool operator==(const PendingDelivery&) const = default;
};

/* Decayed inhibitory displacement still acting on a leaky membrane's mean;
 * contributes w * exp(-(t - at)/tau) to the conditioning transition. */
struct MeanKick {
    double at;
    double w;
    bool operator==(const MeanKick&) const = default;
};

struct CountdownState {
    double T = 0.0;                  // absolute time of the last transition
    std::vector<double> X;           // remaining times; +inf = never within horizon
    std::vector<double> i_s;         // synaptic filter at the scheduled hit (exp models)
    std::vector<double> last_spike;  // -inf before any firing
    int M = 0;                       // columns of H
    std::vector<double> H;           // N x M most recent firing times, row-major
    std::vector<PendingDelivery> pending;

    /* conditioning bookkeeping for excitatory deliveries */
    std::vector<double> anchor_v;  // last exactly-known membrane value...
    std::vector<double> anchor_t;  // ...and when it held
    std::vector<double> anchor_i;  // filter value there (exp models)
    std::vector<std::vector<MeanKick>> kicks;

    /* avalanche guard: events seen at the current absolute instant */
    double guard_time = kNeverTime;
    int guard_count = 0;

    static constexpr double kNeverTime = -1e300;

    int n() const { return static_cast<int>(X.size()); }
    double h_at(int i, int k) const { return H[static_cast<std::size_t>(i) * M + k]; }
    void validate(const models::NetworkSpec& spec) const;
};

/* Versioned plain-text snapshot, restart-exact for the same spec. */
void serialize_state(const CountdownState& st, std::ostream& out);
std::string serialize_state(const CountdownState& st);
CountdownState parse_state(std::istream& in);
CountdownState parse_state_string(const std::string& text);

}  // namespace evspike::core
