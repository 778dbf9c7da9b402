#include "evspike/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "evspike/errors.hpp"
#include "evspike/rng.hpp"

namespace evspike::models {
namespace {

/* shortest decimal form that parses back to the same double */
std::string fmt_double(double x) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(const std::string& field, const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || !std::isfinite(v))
        throw SpecError(field, "not a finite number: '" + s + "'");
    return v;
}

int parse_int(const std::string& field, const std::string& s) {
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || s.empty())
        throw SpecError(field, "not an integer: '" + s + "'");
    return static_cast<int>(v);
}

PiecewiseInput parse_input(const std::string& s) {
    if (s.find(':') == std::string::npos) return PiecewiseInput(parse_double("input", s));
    std::vector<double> bp, vals;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto colon = part.find(':');
        if (colon == std::string::npos) throw SpecError("input", "expected t:value, got '" + part + "'");
        bp.push_back(parse_double("input", part.substr(0, colon)));
        vals.push_back(parse_double("input", part.substr(colon + 1)));
    }
    return PiecewiseInput(std::move(bp), std::move(vals));
}

std::string format_input(const PiecewiseInput& in) {
    if (in.is_constant()) return fmt_double(in.values()[0]);
    std::string out;
    for (std::size_t i = 0; i < in.values().size(); ++i) {
        if (i) out += ',';
        out += fmt_double(in.breakpoints()[i]) + ":" + fmt_double(in.values()[i]);
    }
    return out;
}

}  // namespace

bool model_is_leaky(NeuronModel m) {
    return m == NeuronModel::LifInstant || m == NeuronModel::LifExpSynapse;
}

bool model_has_exp_synapse(NeuronModel m) {
    return m == NeuronModel::PifExpSynapse || m == NeuronModel::LifExpSynapse;
}

const char* model_name(NeuronModel m) {
    switch (m) {
        case NeuronModel::PifInstant: return "pif_instant";
        case NeuronModel::LifInstant: return "lif_instant";
        case NeuronModel::PifExpSynapse: return "pif_exp";
        case NeuronModel::LifExpSynapse: return "lif_exp";
    }
    return "?";
}

std::optional<NeuronModel> model_from_name(const std::string& name) {
    if (name == "pif_instant") return NeuronModel::PifInstant;
    if (name == "lif_instant") return NeuronModel::LifInstant;
    if (name == "pif_exp") return NeuronModel::PifExpSynapse;
    if (name == "lif_exp") return NeuronModel::LifExpSynapse;
    return std::nullopt;
}

double KappaSpec::factor(double since_last_spike, double refractory) const {
    if (since_last_spike < refractory) return 0.0;
    if (kind == KappaKind::Step) return 1.0;
    return -std::expm1(-(since_last_spike - refractory) / tau_k);
}

void NeuronSpec::validate() const {
    if (!std::isfinite(theta)) throw SpecError("theta", "must be finite");
    if (!(v_reset < theta)) throw SpecError("reset", "must be below theta");
    if (!(v0 < theta)) throw SpecError("v0", "must be below theta");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw SpecError("sigma", "must be > 0");
    if (!(refractory >= 0.0) || !std::isfinite(refractory))
        throw SpecError("refractory", "must be >= 0");
    if (model_is_leaky(model) && (!(tau > 0.0) || !std::isfinite(tau)))
        throw SpecError("tau", "must be > 0 for leaky models");
    if (model_has_exp_synapse(model)) {
        if (!(tau_s > 0.0) || !std::isfinite(tau_s))
            throw SpecError("tau_s", "must be > 0 for exp-synapse models");
        if (!input.is_constant())
            throw SpecError("input", "exp-synapse models need a constant input");
    }
    if (!std::isfinite(rest_mu)) throw SpecError("rest_mu", "must be finite");
    if (kappa.kind == KappaKind::ExpRecovery && !(kappa.tau_k > 0.0))
        throw SpecError("kappa", "recovery timescale must be > 0");
}

void SynapseSpec::validate() const {
    if (!std::isfinite(weight)) throw SpecError("weight", "must be finite");
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw SpecError("delay", "must be >= 0");
}

void NetworkSpec::validate() const {
    if (format_version != 1) throw SpecError("format_version", "only version 1 is supported");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw SpecError("horizon", "must be > 0");
    if (neurons.empty()) throw SpecError("neuron", "need at least one neuron");
    for (const auto& n : neurons) {
        n.validate();
        int count = 0;
        for (const auto& o : neurons) count += (o.id == n.id);
        if (count != 1) throw SpecError("id", "duplicate neuron id " + std::to_string(n.id));
    }
    bool any_excitatory = false;
    for (const auto& s : synapses) {
        s.validate();
        index_of(s.pre);
        index_of(s.post);
        if (s.weight > 0.0) any_excitatory = true;
    }
    for (const auto& s : synapses) {
        /* delayed spikes from a never-resting emitter can pile up without
         * bound; with excitation in the mix that is the avalanche regime */
        if (s.delay > 0.0 && neuron(s.pre).refractory == 0.0 && any_excitatory)
            throw SpecError("delay",
                            "positive delay with zero emitter refractory in an "
                            "excitatory network");
    }
}

const NeuronSpec& NetworkSpec::neuron(int id) const { return neurons[static_cast<std::size_t>(index_of(id))]; }

int NetworkSpec::index_of(int id) const {
    for (std::size_t i = 0; i < neurons.size(); ++i)
        if (neurons[i].id == id) return static_cast<int>(i);
    throw SpecError("id", "unknown neuron id " + std::to_string(id));
}

int compute_M(const NetworkSpec& net) {
    int m = 0;
    for (const auto& s : net.synapses) {
        if (s.delay <= 0.0) continue;
        double r = net.neuron(s.pre).refractory;
        /* a zero-refractory emitter has no firing-rate bound; 32 slots is the
         * serialization cap (the live queue itself is unbounded) */
        int term = r > 0.0 ? static_cast<int>(std::floor(s.delay / r)) : 32;
        m = std::max(m, term);
    }
    return m;
}

NetworkSpec parse_network(std::istream& in) {
    NetworkSpec net;
    net.neurons.clear();
    net.synapses.clear();
    bool saw_version = false, saw_horizon = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::stringstream ss(line);
        std::string word;
        if (!(ss >> word)) continue;
        auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
        if (word == "format_version") {
            std::string v;
            if (!(ss >> v)) throw SpecError("format_version", "missing value" + where());
            net.format_version = parse_int("format_version", v);
            saw_version = true;
        } else if (word == "horizon") {
            std::string v;
            if (!(ss >> v)) throw SpecError("horizon", "missing value" + where());
            net.horizon = parse_double("horizon", v);
            saw_horizon = true;
        } else if (word == "neuron" || word == "synapse") {
            bool is_neuron = word == "neuron";
            NeuronSpec n;
            SynapseSpec s;
            bool saw_id = false, saw_model = false, saw_pre = false, saw_post = false,
                 saw_w = false;
            std::string kv;
            while (ss >> kv) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw SpecError(word, "expected key=value, got '" + kv + "'" + where());
                std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                if (is_neuron) {
                    if (key == "id") { n.id = parse_int(key, val); saw_id = true; }
                    else if (key == "model") {
                        auto m = model_from_name(val);
                        if (!m) throw SpecError("model", "unknown model '" + val + "'" + where());
                        n.model = *m;
                        saw_model = true;
                    }
                    else if (key == "theta") n.theta = parse_double(key, val);
                    else if (key == "reset") n.v_reset = parse_double(key, val);
                    else if (key == "refractory") n.refractory = parse_double(key, val);
                    else if (key == "sigma") n.sigma = parse_double(key, val);
                    else if (key == "input") n.input = parse_input(val);
                    else if (key == "tau") n.tau = parse_double(key, val);
                    else if (key == "tau_s") n.tau_s = parse_double(key, val);
                    else if (key == "rest_mu") n.rest_mu = parse_double(key, val);
                    else if (key == "v0") n.v0 = parse_double(key, val);
                    else if (key == "is0") n.is0 = parse_double(key, val);
                    else if (key == "kappa") {
                        if (val == "step") n.kappa = {KappaKind::Step, 1.0};
                        else if (val.rfind("exp:", 0) == 0)
                            n.kappa = {KappaKind::ExpRecovery, parse_double("kappa", val.substr(4))};
                        else throw SpecError("kappa", "expected step or exp:tau, got '" + val + "'" + where());
                    }
                    else throw SpecError(key, "unknown neuron key" + where());
                } else {
                    if (key == "pre") { s.pre = parse_int(key, val); saw_pre = true; }
                    else if (key == "post") { s.post = parse_int(key, val); saw_post = true; }
                    else if (key == "weight") { s.weight = parse_double(key, val); saw_w = true; }
                    else if (key == "delay") s.delay = parse_double(key, val);
                    else throw SpecError(key, "unknown synapse key" + where());
                }
            }
            if (is_neuron) {
                if (!saw_id || !saw_model)
                    throw SpecError("neuron", "id and model are required" + where());
                net.neurons.push_back(n);
            } else {
                if (!saw_pre || !saw_post || !saw_w)
                    throw SpecError("synapse", "pre, post and weight are required" + where());
                net.synapses.push_back(s);
            }
        } else {
            throw SpecError(word, "unknown directive" + where());
        }
    }
    if (!saw_version) throw SpecError("format_version", "missing");
    if (!saw_horizon) throw SpecError("horizon", "missing");
    net.validate();
    return net;
}

NetworkSpec parse_network_string(const std::string& text) {
    std::stringstream ss(text);
    return parse_network(ss);
}

NetworkSpec load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SpecError("spec", "cannot open " + path);
    return parse_network(f);
}

std::string serialize_network(const NetworkSpec& net) {
    std::string out = "format_version " + std::to_string(net.format_version) + "\n";
    out += "horizon " + fmt_double(net.horizon) + "\n";
    for (const auto& n : net.neurons) {
        out += "neuron id=" + std::to_string(n.id);
        out += " model=" + std::string(model_name(n.model));
        out += " theta=" + fmt_double(n.theta);
        out += " reset=" + fmt_double(n.v_reset);
        out += " refractory=" + fmt_double(n.refractory);
        out += " sigma=" + fmt_double(n.sigma);
        out += " input=" + format_input(n.input);
        out += " tau=" + fmt_double(n.tau);
        out += " tau_s=" + fmt_double(n.tau_s);
        out += " rest_mu=" + fmt_double(n.rest_mu);
        out += " v0=" + fmt_double(n.v0);
        out += " is0=" + fmt_double(n.is0);
        if (n.kappa.kind == KappaKind::ExpRecovery)
            out += " kappa=exp:" + fmt_double(n.kappa.tau_k);
        out += "\n";
    }
    for (const auto& s : net.synapses) {
        out += "synapse pre=" + std::to_string(s.pre) + " post=" + std::to_string(s.post);
        out += " weight=" + fmt_double(s.weight) + " delay=" + fmt_double(s.delay) + "\n";
    }
    return out;
}

NetworkSpec random_network(int n, double p, double weight, double delay,
                           const NeuronSpec& prototype, double horizon,
                           std::uint64_t seed) {
    if (n < 1) throw SpecError("n", "need >= 1 neurons");
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError("p", "need a probability");
    NetworkSpec net;
    net.horizon = horizon;
    Rng rng(derive_seed(seed, 0));
    for (int i = 0; i < n; ++i) {
        NeuronSpec nn = prototype;
        nn.id = i;
        net.neurons.push_back(nn);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && rng.uniform() < p) net.synapses.push_back({i, j, weight, delay});
    net.validate();
    return net;
}

}  // namespace evspike::models
