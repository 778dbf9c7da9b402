#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "evspike/core/state.hpp"
#include "evspike/models/network.hpp"
#include "evspike/rng.hpp"

namespace evspike::fpt {
struct ConditionedValueDensity;
}

namespace evspike::core {

struct Event {
    enum class Kind { Fire, Delivery };
    Kind kind;
    double at;            // absolute time
    int neuron = -1;      // Fire: index into spec.neurons
    int pre = -1;         // Delivery: emitting neuron index
    int post = -1;        // Delivery: receiving neuron index
    double emission = 0;  // Delivery: when the spike left pre
    int syn = -1;         // Delivery: index into spec.synapses
};

/* Initial condition and boundary of the additional-wait law after an
 * inhibitory delivery: the wait is the first passage of the neuron's free
 * process from v_start (and filter i_s_start) to theta, with time origin at
 * the moment the neuron would have fired (delivery time + x_star). */
struct PostDeliveryLaw {
    double v_start;
    double i_s_start;
    double theta;
};

PostDeliveryLaw interaction_shift(const models::NeuronSpec& neuron, double w_eff,
                                  double x_star, double i_s_star);

/* A countdown draw: remaining time x and, for exp-synapse models, the filter
 * value carried at that moment. */
struct NextDraw {
    double x;
    double i_s;
};

/* Event-driven simulator for one network spec.  Construction precomputes the
 * per-neuron hitting laws (closed form where available, integral-equation
 * tables otherwise) so that runs only draw from cached distributions; a run
 * never integrates a membrane path. */
class Engine {
public:
    explicit Engine(const models::NetworkSpec& spec);
    ~Engine();
    Engine(Engine&&) noexcept;
    Engine& operator=(Engine&&) noexcept;

    const models::NetworkSpec& spec() const { return spec_; }

    /* v0 empty -> per-neuron v0/is0 from the spec */
    CountdownState init_state(const std::vector<double>& v0, Rng& rng) const;

    /* nullopt = quiescent (every countdown infinite, nothing in flight) */
    std::optional<Event> next_event(const CountdownState& st) const;

    void fire(CountdownState& st, int i, Rng& rng, SpikeTrain& out) const;
    void deliver_spike(CountdownState& st, int pre, int post, double emission,
                       Rng& rng, SpikeTrain& out) const;

    SpikeTrain run(const std::vector<double>& v0, Rng& rng, double horizon) const;

    /* allocation-free variant: st and out keep their capacity across calls */
    void run_reusing(CountdownState& st, const std::vector<double>& v0, Rng& rng,
                     double horizon, SpikeTrain& out) const;

    /* advance an existing state to the horizon, appending spikes */
    void continue_run(CountdownState& st, Rng& rng, double horizon,
                      SpikeTrain& out) const;

    /* law of the next spike for one neuron started at (v_start, i_s_start)
     * with law origin t_origin; nullopt = no hit before t_origin + budget */
    std::optional<NextDraw> draw_countdown(int i, double v_start, double i_s_start,
                                           double t_origin, double budget,
                                           Rng& rng) const;

    double horizon() const { return spec_.horizon; }

private:
    struct NeuronLaws;

    void apply_event(CountdownState& st, const Event& ev, Rng& rng,
                     SpikeTrain& out) const;
    void init_into(CountdownState& st, const std::vector<double>& v0, Rng& rng) const;
    void deliver_on(CountdownState& st, int syn, double emission, Rng& rng,
                    SpikeTrain& out) const;
    void advance_to(CountdownState& st, double t) const;
    void guard_tick(CountdownState& st, double at) const;
    double cond_mean(const CountdownState& st, int i, double t) const;
    fpt::ConditionedValueDensity conditioned_density_at(const CountdownState& st,
                                                        int i, double t) const;
    void excitatory_exp(CountdownState& st, int post, double w_eff, Rng& rng) const;

    models::NetworkSpec spec_;
    std::vector<std::unique_ptr<NeuronLaws>> laws_;
    std::vector<std::vector<int>> out_syn_;  // synapse indices by pre neuron index
};

/* Free-function forms of the chain operations (one-shot Engine inside). */
CountdownState init_state(const models::NetworkSpec& spec,
                          const std::vector<double>& v0, Rng& rng);
Event next_event(const CountdownState& st, const models::NetworkSpec& spec);
void fire(CountdownState& st, int i, const models::NetworkSpec& spec, Rng& rng,
          SpikeTrain& out);
void deliver_spike(CountdownState& st, int pre, int post, double emission,
                   const models::NetworkSpec& spec, Rng& rng, SpikeTrain& out);
SpikeTrain run(const models::NetworkSpec& spec, const std::vector<double>& v0,
               Rng& rng, double horizon);

/* n_runs independent realizations, rng streams derived from master_seed;
 * max_threads 0 = hardware concurrency */
std::vector<SpikeTrain> run_ensemble(const models::NetworkSpec& spec,
                                     std::uint64_t master_seed, int n_runs,
                                     double horizon, int max_threads = 0);

/* Evidence for the chain's Markov property: ensemble `continued` runs through
 * t_snapshot and keeps going; ensemble `restarted` reloads the serialized
 * snapshot of each run and finishes with a fresh rng stream.  Equality in law
 * of the post-snapshot spikes is what the caller tests. */
struct RestartEnsembles {
    std::vector<SpikeTrain> continued;
    std::vector<SpikeTrain> restarted;
};
RestartEnsembles markov_restart_check(const models::NetworkSpec& spec,
                                      std::uint64_t master_seed, double t_snapshot,
                                      int n_runs, int max_threads = 0);

}  // namespace evspike::core
