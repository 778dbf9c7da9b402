#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evspike/piecewise_input.hpp"

namespace evspike::models {

enum class NeuronModel { PifInstant, LifInstant, PifExpSynapse, LifExpSynapse };

bool model_is_leaky(NeuronModel m);
bool model_has_exp_synapse(NeuronModel m);
const char* model_name(NeuronModel m);
std::optional<NeuronModel> model_from_name(const std::string& name);

enum class KappaKind { Step, ExpRecovery };

/* Post-refractory recovery factor applied to outgoing weights:
 * Step -> 1 past the refractory gap, ExpRecovery -> 1 - exp(-(dt-R)/tau_k). */
struct KappaSpec {
    KappaKind kind = KappaKind::Step;
    double tau_k = 1.0;  // ExpRecovery only

    double factor(double since_last_spike, double refractory) const;
    bool operator==(const KappaSpec&) const = default;
};

struct NeuronSpec {
    int id = 0;
    NeuronModel model = NeuronModel::PifInstant;
    double theta = 1.0;
    double v_reset = 0.0;
    double refractory = 0.0;
    double tau = 1.0;    // membrane timescale, leaky models
    double tau_s = 1.0;  // synaptic filter timescale, exp-synapse models
    double sigma = 1.0;
    double rest_mu = 0.0;  // leak reversal offset, leaky models
    PiecewiseInput input;
    double v0 = 0.0;   // initial membrane value
    double is0 = 0.0;  // initial filter value, exp-synapse models
    KappaSpec kappa;

    void validate() const;
    bool operator==(const NeuronSpec&) const = default;
};

struct SynapseSpec {
    int pre = 0;
    int post = 0;
    double weight = 0.0;
    double delay = 0.0;

    void validate() const;
    bool operator==(const SynapseSpec&) const = default;
};

struct NetworkSpec {
    int format_version = 1;
    double horizon = 10.0;
    std::vector<NeuronSpec> neurons;
    std::vector<SynapseSpec> synapses;

    void validate() const;  // ids unique, synapse endpoints resolve, ...
    const NeuronSpec& neuron(int id) const;
    int index_of(int id) const;
    bool operator==(const NetworkSpec&) const = default;
};

/* How many delayed deliveries per synapse can be simultaneously in flight:
 * floor(delay / post refractory) for refractory targets, else 0 (the engine
 * still queues unboundedly; this is the documented bound for serialization). */
int compute_M(const NetworkSpec& net);

/* Plain-text spec format, one directive per line ('#' comments allowed):
 *   format_version 1
 *   horizon 10
 *   neuron id=0 model=pif_instant theta=1 reset=0 refractory=0 sigma=0.5 \
 *          input=1 [tau=] [tau_s=] [rest_mu=] [v0=] [is0=] [kappa=step|exp:tau]
 *   synapse pre=0 post=1 weight=-0.2 delay=0.05
 * Piecewise input: "t0:v0,t1:v1,..." with t0 == 0.  Errors carry the
 * offending field name. */
NetworkSpec parse_network(std::istream& in);
NetworkSpec parse_network_string(const std::string& text);
NetworkSpec load_network(const std::string& path);

std::string serialize_network(const NetworkSpec& net);

/* Erdos-Renyi directed topology (no self loops), every edge present with
 * probability p and fixed weight/delay; neuron parameters copied from the
 * prototype.  Deterministic in seed. */
NetworkSpec random_network(int n, double p, double weight, double delay,
                           const NeuronSpec& prototype, double horizon,
                           std::uint64_t seed);

}  // namespace evspike::models
