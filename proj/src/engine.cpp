#include "evspike/core/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evspike/errors.hpp"
#include "evspike/fpt/conditioned.hpp"
#include "evspike/fpt/dip.hpp"
#include "evspike/fpt/ig.hpp"
#include "evspike/fpt/volterra.hpp"
#include "evspike/parallel.hpp"

namespace evspike::core {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PostDeliveryLaw interaction_shift(const models::NeuronSpec& neuron, double w_eff,
                                  double x_star, double i_s_star) {
    if (!(w_eff < 0.0))
        throw SpecError("w_eff", "inhibitory branch requires w_eff < 0");
    if (!std::isfinite(x_star) || x_star < 0.0)
        throw SpecError("x_star", "remaining countdown must be finite and >= 0");
    PostDeliveryLaw law{neuron.theta, 0.0, neuron.theta};
    switch (neuron.model) {
        case models::NeuronModel::PifInstant:
            law.v_start = neuron.theta + w_eff;
            break;
        case models::NeuronModel::LifInstant:
            law.v_start = neuron.theta + w_eff * std::exp(-x_star / neuron.tau);
            break;
        case models::NeuronModel::PifExpSynapse:
            law.v_start = neuron.theta +
                          w_eff * neuron.tau_s * -std::expm1(-x_star / neuron.tau_s);
            law.i_s_start = i_s_star + w_eff * std::exp(-x_star / neuron.tau_s);
            break;
        case models::NeuronModel::LifExpSynapse: {
            /* filter kick integrated through the leak: (w/tau) e^{-x/tau} S(x),
             * S = (1 - e^{-alpha x})/alpha, alpha = 1/tau_s - 1/tau; the
             * alpha -> 0 limit S -> x covers tau_s = tau */
            double alpha = 1.0 / neuron.tau_s - 1.0 / neuron.tau;
            double s = std::fabs(alpha * x_star) < 1e-8
                           ? x_star * (1.0 - 0.5 * alpha * x_star)
                           : -std::expm1(-alpha * x_star) / alpha;
            law.v_start = neuron.theta +
                          (w_eff / neuron.tau) * std::exp(-x_star / neuron.tau) * s;
            law.i_s_start = i_s_star + w_eff * std::exp(-x_star / neuron.tau_s);
            break;
        }
    }
    return law;
}

struct Engine::NeuronLaws {
    fpt::GaussMarkovSpec gm;
    fpt::DipSpec dip;
    bool exp_model = false;
    bool leaky = false;
    bool const_input = true;
    bool closed_bm = false;  // PIF instantaneous, constant input: pure closed form
    double bm_mu = 0.0;
    double drift_theta = 0.0;
    double hi_u = kInf;  // starts above this use the tangent closed form
    std::unique_ptr<fpt::VolterraSolver> graded;
    fpt::FptFamily family;
    fpt::QuantileLaw reset_law, init_law;
    bool have_cached_laws = false;
    double dip_dt = 1e-3;
};

Engine::Engine(const models::NetworkSpec& spec) : spec_(spec) {
    spec_.validate();
    std::size_t n = spec_.neurons.size();
    out_syn_.assign(n, {});
    for (std::size_t s = 0; s < spec_.synapses.size(); ++s)
        out_syn_[static_cast<std::size_t>(spec_.index_of(spec_.synapses[s].pre))]
            .push_back(static_cast<int>(s));

    laws_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nr = spec_.neurons[i];
        auto law = std::make_unique<NeuronLaws>();
        law->exp_model = models::model_has_exp_synapse(nr.model);
        law->leaky = models::model_is_leaky(nr.model);
        law->const_input = nr.input.is_constant();
        if (law->exp_model) {
            law->dip.leaky = law->leaky;
            law->dip.tau = nr.tau;
            law->dip.tau_s = nr.tau_s;
            law->dip.sigma = nr.sigma;
            law->dip.input = nr.input.values()[0] + (law->leaky ? nr.rest_mu : 0.0);
            law->dip_dt = std::clamp(
                std::min(nr.tau_s, law->leaky ? nr.tau : nr.tau_s) / 64.0, 1e-5, 0.01);
        } else {
            law->gm.kind = law->leaky ? fpt::GmKind::OrnsteinUhlenbeck : fpt::GmKind::Brownian;
            law->gm.tau = nr.tau;
            law->gm.sigma = nr.sigma;
            law->gm.input = nr.input;
            law->gm.rest_mu = nr.rest_mu;
            if (!law->leaky && law->const_input) {
                law->closed_bm = true;
                law->bm_mu = nr.input.values()[0];
            } else if (law->leaky && law->const_input) {
                /* graded time grid: quadratic clustering toward 0 resolves
                 * post-delivery starts that sit just under the threshold */
                int kt = 384;
                std::vector<double> grid(static_cast<std::size_t>(kt) + 1);
                for (int k = 0; k <= kt; ++k) {
                    double f = static_cast<double>(k) / kt;
                    grid[static_cast<std::size_t>(k)] = spec_.horizon * f * f;
                }
                law->graded = std::make_unique<fpt::VolterraSolver>(
                    law->gm, nr.theta, 0.0, std::move(grid));
                law->drift_theta = law->gm.drift(nr.theta, 0.0);
                law->hi_u = nr.theta - 3.0 * law->gm.diffusion() *
                                           std::sqrt(spec_.horizon) / kt;
                double w_min = 0.0;
                for (const auto& s : spec_.synapses)
                    if (spec_.index_of(s.post) == static_cast<int>(i))
                        w_min = std::min(w_min, s.weight);
                if (w_min < 0.0 && nr.theta + w_min < law->hi_u) {
                    law->family = fpt::FptFamily::build(*law->graded, nr.theta + w_min,
                                                        law->hi_u, 128);
                }
                law->reset_law = fpt::QuantileLaw::from_table(law->graded->solve(nr.v_reset));
                law->init_law = fpt::QuantileLaw::from_table(law->graded->solve(nr.v0));
                law->have_cached_laws = true;
            }
        }
        laws_[i] = std::move(law);
    }
}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

std::optional<NextDraw> Engine::draw_countdown(int i, double v_start, double i_s_start,
                                               double t_origin, double budget,
                                               Rng& rng) const {
    const auto& nr = spec_.neurons[static_cast<std::size_t>(i)];
    const auto& law = *laws_[static_cast<std::size_t>(i)];
    if (v_start >= nr.theta) return NextDraw{0.0, i_s_start};
    if (!(budget > 0.0)) return std::nullopt;

    if (law.exp_model) {
        auto hit = fpt::dip_hit_sample(rng, law.dip, v_start, i_s_start, nr.theta,
                                       law.dip_dt, budget);
        if (!hit) return std::nullopt;
        return NextDraw{hit->t, hit->i_s};
    }
    if (law.closed_bm) {
        auto t = fpt::ig_sample(rng, {nr.theta - v_start, law.bm_mu, nr.sigma}, budget);
        if (!t) return std::nullopt;
        return NextDraw{*t, 0.0};
    }
    if (law.leaky && law.const_input) {
        if (v_start >= law.hi_u) {
            /* so close to the threshold that the drift is locally constant */
            auto t = fpt::ig_sample(
                rng, {nr.theta - v_start, law.drift_theta, law.gm.diffusion()}, budget);
            if (!t) return std::nullopt;
            return NextDraw{*t, 0.0};
        }
        if (law.have_cached_laws) {
            if (v_start == nr.v_reset) {
                auto t = law.reset_law.sample(rng, budget);
                if (!t) return std::nullopt;
                return NextDraw{*t, 0.0};
            }
            if (v_start == nr.v0) {
                auto t = law.init_law.sample(rng, budget);
                if (!t) return std::nullopt;
                return NextDraw{*t, 0.0};
            }
            if (!law.family.empty() && v_start >= law.family.lo()) {
                auto t = law.family.sample(rng, v_start, budget);
                if (!t) return std::nullopt;
                return NextDraw{*t, 0.0};
            }
        }
        auto t = fpt::table_sample(rng, law.graded->solve(v_start));
        if (!t || !(*t <= budget)) return std::nullopt;
        return NextDraw{*t, 0.0};
    }
    /* time-inhomogeneous input: solve the hitting law from this origin */
    int k = static_cast<int>(std::clamp(budget / 0.002, 256.0, 2048.0));
    fpt::VolterraSolver solver(law.gm, nr.theta, t_origin, budget / k, budget);
    auto t = fpt::table_sample(rng, solver.solve(v_start));
    if (!t) return std::nullopt;
    return NextDraw{*t, 0.0};
}

void Engine::advance_to(CountdownState& st, double t) const {
    double dt = t - st.T;
    if (dt <= 0.0) return;
    for (double& x : st.X)
        if (x < kInf) x = std::max(0.0, x - dt);
    st.T = t;
}

void Engine::guard_tick(CountdownState& st, double at) const {
    if (at == st.guard_time) {
        if (++st.guard_count > 10 * st.n()) throw AvalancheDetected(at);
    } else {
        st.guard_time = at;
        st.guard_count = 1;
    }
}

void Engine::init_into(CountdownState& st, const std::vector<double>& v0,
                       Rng& rng) const {
    std::size_t n = spec_.neurons.size();
    if (!v0.empty() && v0.size() != n)
        throw SpecError("v0", "length must match the neuron count");
    st.T = 0.0;
    st.M = models::compute_M(spec_);
    st.X.assign(n, kInf);
    st.i_s.assign(n, 0.0);
    st.last_spike.assign(n, -kInf);
    st.anchor_v.assign(n, 0.0);
    st.anchor_t.assign(n, 0.0);
    st.anchor_i.assign(n, 0.0);
    st.kicks.assign(n, {});
    st.pending.clear();
    st.guard_time = CountdownState::kNeverTime;
    st.guard_count = 0;

    double h_init = 0.0;
    for (const auto& s : spec_.synapses)
        h_init = std::min(h_init, -spec_.neuron(s.pre).refractory - s.delay);
    st.H.assign(n * static_cast<std::size_t>(st.M), h_init);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& nr = spec_.neurons[i];
        double v = v0.empty() ? nr.v0 : v0[i];
        double is = nr.is0;
        if (!(v < nr.theta)) throw SpecError("v0", "initial value must be below theta");
        auto draw = draw_countdown(static_cast<int>(i), v, is, 0.0, spec_.horizon, rng);
        st.X[i] = draw ? draw->x : kInf;
        st.i_s[i] = draw ? draw->i_s : 0.0;
        st.anchor_v[i] = v;
        st.anchor_t[i] = 0.0;
        st.anchor_i[i] = is;
    }
}

CountdownState Engine::init_state(const std::vector<double>& v0, Rng& rng) const {
    CountdownState st;
    init_into(st, v0, rng);
    return st;
}

std::optional<Event> Engine::next_event(const CountdownState& st) const {
    int fire_idx = -1;
    double fire_x = kInf;
    for (int i = 0; i < st.n(); ++i) {
        if (st.X[static_cast<std::size_t>(i)] < fire_x) {
            fire_x = st.X[static_cast<std::size_t>(i)];
            fire_idx = i;
        }
    }
    const PendingDelivery* best = nullptr;
    auto key = [this](const PendingDelivery& d) {
        const auto& s = spec_.synapses[static_cast<std::size_t>(d.syn)];
        return std::tuple<double, int, int, double>(d.due, spec_.index_of(s.pre),
                                                    spec_.index_of(s.post), d.emission);
    };
    for (const auto& p : st.pending)
        if (!best || key(p) < key(*best)) best = &p;

    if (best && (fire_idx < 0 || best->due <= st.T + fire_x)) {
        const auto& s = spec_.synapses[static_cast<std::size_t>(best->syn)];
        Event ev{Event::Kind::Delivery, best->due};
        ev.pre = spec_.index_of(s.pre);
        ev.post = spec_.index_of(s.post);
        ev.emission = best->emission;
        ev.syn = best->syn;
        return ev;
    }
    if (fire_idx >= 0 && fire_x < kInf) {
        Event ev{Event::Kind::Fire, st.T + fire_x};
        ev.neuron = fire_idx;
        return ev;
    }
    return std::nullopt;
}

void Engine::fire(CountdownState& st, int i, Rng& rng, SpikeTrain& out) const {
    const auto& nr = spec_.neurons[static_cast<std::size_t>(i)];
    double t = st.T;
    guard_tick(st, t);
    out.add(t, nr.id);
    st.last_spike[static_cast<std::size_t>(i)] = t;
    if (st.M > 0) {
        double* row = st.H.data() + static_cast<std::size_t>(i) * st.M;
        for (int k = 0; k + 1 < st.M; ++k) row[k] = row[k + 1];
        row[st.M - 1] = t;
    }
    for (int syn : out_syn_[static_cast<std::size_t>(i)]) {
        const auto& s = spec_.synapses[static_cast<std::size_t>(syn)];
        st.pending.push_back({t + s.delay, t, syn});
    }

    const auto& law = *laws_[static_cast<std::size_t>(i)];
    double origin = t + nr.refractory;
    double is_after = 0.0;
    if (law.exp_model) {
        /* filter keeps running through the refractory hold */
        double decay = std::exp(-nr.refractory / nr.tau_s);
        double sd = nr.sigma *
                    std::sqrt((1.0 - decay * decay) / (2.0 * nr.tau_s));
        is_after = st.i_s[static_cast<std::size_t>(i)] * decay + sd * rng.normal();
    }
    auto draw = draw_countdown(i, nr.v_reset, is_after, origin, spec_.horizon - origin, rng);
    st.X[static_cast<std::size_t>(i)] = draw ? nr.refractory + draw->x : kInf;
    st.i_s[static_cast<std::size_t>(i)] = draw ? draw->i_s : 0.0;
    st.anchor_v[static_cast<std::size_t>(i)] = nr.v_reset;
    st.anchor_t[static_cast<std::size_t>(i)] = origin;
    st.anchor_i[static_cast<std::size_t>(i)] = is_after;
    st.kicks[static_cast<std::size_t>(i)].clear();
}

void Engine::deliver_spike(CountdownState& st, int pre, int post, double emission,
                           Rng& rng, SpikeTrain& out) const {
    int syn = -1;
    for (int s : out_syn_[static_cast<std::size_t>(pre)]) {
        if (spec_.index_of(spec_.synapses[static_cast<std::size_t>(s)].post) == post) {
            syn = s;
            break;
        }
    }
    if (syn < 0) throw SpecError("synapse", "no synapse between these neurons");
    deliver_on(st, syn, emission, rng, out);
}

void Engine::deliver_on(CountdownState& st, int syn, double emission, Rng& rng,
                        SpikeTrain& out) const {
    (void)out;
    (void)emission;
    int post = spec_.index_of(spec_.synapses[static_cast<std::size_t>(syn)].post);
    const auto& nr = spec_.neurons[static_cast<std::size_t>(post)];
    const auto& law = *laws_[static_cast<std::size_t>(post)];
    double t = st.T;
    guard_tick(st, t);

    double since = t - st.last_spike[static_cast<std::size_t>(post)];
    double w_eff = spec_.synapses[static_cast<std::size_t>(syn)].weight *
                   nr.kappa.factor(since, nr.refractory);
    if (w_eff == 0.0) return;

    std::size_t j = static_cast<std::size_t>(post);
    double x_star = st.X[j];

    if (w_eff < 0.0) {
        if (x_star >= kInf) return;  // inhibition cannot create a spike
        PostDeliveryLaw pl = interaction_shift(nr, w_eff, x_star, st.i_s[j]);
        double origin = t + x_star;
        auto extra = draw_countdown(post, pl.v_start, pl.i_s_start, origin,
                                    spec_.horizon - origin, rng);
        st.X[j] = extra ? x_star + extra->x : kInf;
        st.i_s[j] = extra ? extra->i_s : 0.0;
        if (law.exp_model || law.leaky)
            st.kicks[j].push_back({t, w_eff});
        else
            st.anchor_v[j] += w_eff;  // drift-only membrane: the kick is additive
        return;
    }

    /* excitatory: resample the present state given the scheduled hit, apply
     * the jump, then redraw the remaining wait from the new state */
    if (law.exp_model) {
        excitatory_exp(st, post, w_eff, rng);
        return;
    }
    double u;
    if (x_star >= kInf) {
        /* silent neuron: free Gaussian at t truncated below the threshold */
        double m = cond_mean(st, post, t);
        double sd = std::sqrt(law.gm.variance(t - st.anchor_t[j]));
        double cap = (nr.theta - m) / sd;
        double z;
        int tries = 0;
        do {
            z = rng.normal();
        } while (z >= cap && ++tries < 1024);
        u = tries >= 1024 ? nr.theta - 1e-12 * sd : m + sd * std::min(z, cap);
    } else if (x_star <= 0.0) {
        return;  // fires this very instant; the kick cannot precede it
    } else if (t <= st.anchor_t[j]) {
        u = cond_mean(st, post, t);  // value exactly known at the anchor
    } else {
        try {
            u = conditioned_density_at(st, post, t).sample(rng);
        } catch (const DegenerateConditioning&) {
            /* density underflowed between grid points: either the anchor is so
             * recent that V is pinned at the free mean, or the scheduled hit is
             * so close that V is pinned at the threshold (then +w fires it via
             * the branch below either way) */
            u = std::min(cond_mean(st, post, t), nr.theta);
        }
    }
    double v_new = u + w_eff;
    if (v_new >= nr.theta) {
        st.X[j] = 0.0;  // the loop fires it now, after same-instant deliveries
        st.anchor_v[j] = nr.theta;
        st.anchor_t[j] = t;
        st.kicks[j].clear();
        return;
    }
    auto draw = draw_countdown(post, v_new, 0.0, t, spec_.horizon - t, rng);
    st.X[j] = draw ? draw->x : kInf;
    st.anchor_v[j] = v_new;
    st.anchor_t[j] = t;
    st.kicks[j].clear();
}

/* conditioning transition mean at time t for an instantaneous-model neuron:
 * anchor carried through the free flow plus decayed inhibitory kicks */
double Engine::cond_mean(const CountdownState& st, int i, double t) const {
    std::size_t j = static_cast<std::size_t>(i);
    const auto& law = *laws_[j];
    double m = law.gm.mean(st.anchor_v[j], st.anchor_t[j], t);
    for (const auto& k : st.kicks[j])
        m += k.w * std::exp(-(t - k.at) / spec_.neurons[j].tau);
    return m;
}

fpt::ConditionedValueDensity Engine::conditioned_density_at(const CountdownState& st,
                                                            int i, double t) const {
    std::size_t j = static_cast<std::size_t>(i);
    const auto& law = *laws_[j];
    double hit_time = t + st.X[j];
    double v_last = st.anchor_v[j];
    if (!st.kicks[j].empty()) {
        /* fold the kick offsets into an adjusted anchor value: the transition
         * mean is linear in the start value, so this is exact */
        double target = cond_mean(st, i, t);
        double plain = law.gm.mean(v_last, st.anchor_t[j], t);
        double gain = law.leaky ? std::exp(-(t - st.anchor_t[j]) / spec_.neurons[j].tau)
                                : 1.0;
        v_last += (target - plain) / gain;
    }
    return fpt::conditioned_value_density(law.gm, v_last, st.anchor_t[j], t, hit_time,
                                          spec_.neurons[j].theta);
}

void Engine::excitatory_exp(CountdownState& st, int post, double w_eff, Rng& rng) const {
    std::size_t j = static_cast<std::size_t>(post);
    const auto& nr = spec_.neurons[j];
    const auto& law = *laws_[j];
    double t = st.T;
    double x_star = st.X[j];

    double v_anchor = st.anchor_v[j], i_anchor = st.anchor_i[j];
    double t_anchor = st.anchor_t[j];
    if (!st.kicks[j].empty()) {
        /* shift the anchor pair so the free mean matches the kicked mean:
         * two targets, two knobs, solvable because means are linear */
        double dt_a = t - t_anchor;
        double dv = 0.0, di = 0.0;
        for (const auto& k : st.kicks[j]) {
            double lag = t - k.at;
            di += k.w * std::exp(-lag / nr.tau_s);
            if (law.leaky) {
                double alpha = 1.0 / nr.tau_s - 1.0 / nr.tau;
                double s = std::fabs(alpha * lag) < 1e-8
                               ? lag * (1.0 - 0.5 * alpha * lag)
                               : -std::expm1(-alpha * lag) / alpha;
                dv += (k.w / nr.tau) * std::exp(-lag / nr.tau) * s;
            } else {
                dv += k.w * nr.tau_s * -std::expm1(-lag / nr.tau_s);
            }
        }
        fpt::DipMoments base = fpt::dip_moments(law.dip, 0.0, 0.0, dt_a);
        fpt::DipMoments mv1 = fpt::dip_moments(law.dip, 1.0, 0.0, dt_a);
        fpt::DipMoments mi1 = fpt::dip_moments(law.dip, 0.0, 1.0, dt_a);
        double target_v = base.mean_v + (mv1.mean_v - base.mean_v) * v_anchor +
                          (mi1.mean_v - base.mean_v) * i_anchor + dv;
        double target_i = base.mean_i + (mi1.mean_i - base.mean_i) * i_anchor + di;
        i_anchor = (target_i - base.mean_i) / (mi1.mean_i - base.mean_i);
        v_anchor = (target_v - base.mean_v - (mi1.mean_v - base.mean_v) * i_anchor) /
                   (mv1.mean_v - base.mean_v);
        t_anchor = t - dt_a;
    }

    double v_now, i_now;
    if (x_star >= kInf || !(x_star > 0.0) || !(t > t_anchor)) {
        /* degenerate windows: fall back on the free mean pair */
        fpt::DipMoments m = fpt::dip_moments(law.dip, v_anchor, i_anchor,
                                             std::max(0.0, t - t_anchor));
        v_now = std::min(m.mean_v, nr.theta - 1e-12);
        i_now = m.mean_i;
        if (!(x_star > 0.0) && x_star < kInf) return;  // firing this instant anyway
    } else {
        fpt::ConditionedJointDensity d;
        try {
            d = fpt::conditioned_joint_density(law.dip, v_anchor, i_anchor, t_anchor,
                                               t, t + x_star, nr.theta);
        } catch (const DegenerateConditioning&) {
            /* surrogate density underflowed, typically because the scheduled
             * hit is a hair away (V pinned at the threshold).  A filter kick
             * cannot meaningfully move a hit that close, so keep the schedule
             * and push the kick through the filter, which is linear and
             * deterministic: i_s at the hit gains exactly w decayed over x_star. */
            st.i_s[j] += w_eff * std::exp(-x_star / nr.tau_s);
            st.kicks[j].push_back({t, w_eff});
            return;
        }
        auto vi = d.sample(rng);
        v_now = vi.first;
        i_now = vi.second;
    }
    double i_new = i_now + w_eff;  // the kick lands on the filter, V stays continuous
    auto draw = draw_countdown(post, v_now, i_new, t, spec_.horizon - t, rng);
    st.X[j] = draw ? draw->x : kInf;
    st.i_s[j] = draw ? draw->i_s : 0.0;
    st.anchor_v[j] = v_now;
    st.anchor_i[j] = i_new;
    st.anchor_t[j] = t;
    st.kicks[j].clear();
}

void Engine::apply_event(CountdownState& st, const Event& ev, Rng& rng,
                         SpikeTrain& out) const {
    advance_to(st, ev.at);
    if (ev.kind == Event::Kind::Fire) {
        fire(st, ev.neuron, rng, out);
        return;
    }
    /* pop exactly this pending entry, then apply it */
    for (std::size_t p = 0; p < st.pending.size(); ++p) {
        if (st.pending[p].syn == ev.syn && st.pending[p].due == ev.at &&
            st.pending[p].emission == ev.emission) {
            st.pending.erase(st.pending.begin() + static_cast<std::ptrdiff_t>(p));
            break;
        }
    }
    deliver_on(st, ev.syn, ev.emission, rng, out);
}

void Engine::continue_run(CountdownState& st, Rng& rng, double horizon,
                          SpikeTrain& out) const {
    for (;;) {
        auto ev = next_event(st);
        if (!ev || ev->at > horizon) break;
        apply_event(st, *ev, rng, out);
    }
    advance_to(st, horizon);
}

SpikeTrain Engine::run(const std::vector<double>& v0, Rng& rng, double horizon) const {
    SpikeTrain out;
    CountdownState st = init_state(v0, rng);
    continue_run(st, rng, horizon, out);
    return out;
}

void Engine::run_reusing(CountdownState& st, const std::vector<double>& v0, Rng& rng,
                         double horizon, SpikeTrain& out) const {
    out.records.clear();
    init_into(st, v0, rng);
    continue_run(st, rng, horizon, out);
}

CountdownState init_state(const models::NetworkSpec& spec, const std::vector<double>& v0,
                          Rng& rng) {
    return Engine(spec).init_state(v0, rng);
}

Event next_event(const CountdownState& st, const models::NetworkSpec& spec) {
    auto ev = Engine(spec).next_event(st);
    if (!ev) throw SimulationQuiescent();
    return *ev;
}

void fire(CountdownState& st, int i, const models::NetworkSpec& spec, Rng& rng,
          SpikeTrain& out) {
    Engine(spec).fire(st, i, rng, out);
}

void deliver_spike(CountdownState& st, int pre, int post, double emission,
                   const models::NetworkSpec& spec, Rng& rng, SpikeTrain& out) {
    Engine(spec).deliver_spike(st, pre, post, emission, rng, out);
}

SpikeTrain run(const models::NetworkSpec& spec, const std::vector<double>& v0, Rng& rng,
               double horizon) {
    return Engine(spec).run(v0, rng, horizon);
}

std::vector<SpikeTrain> run_ensemble(const models::NetworkSpec& spec,
                                     std::uint64_t master_seed, int n_runs,
                                     double horizon, int max_threads) {
    Engine engine(spec);
    std::vector<SpikeTrain> out(static_cast<std::size_t>(n_runs));
    parallel_for(
        static_cast<std::size_t>(n_runs),
        [&](std::size_t r) {
            thread_local CountdownState scratch;
            thread_local SpikeTrain train;
            Rng rng(derive_seed(master_seed, r));
            engine.run_reusing(scratch, {}, rng, horizon, train);
            out[r].records = train.records;  // one exact-size allocation per run
        },
        static_cast<unsigned>(max_threads));
    return out;
}

RestartEnsembles markov_restart_check(const models::NetworkSpec& spec,
                                      std::uint64_t master_seed, double t_snapshot,
                                      int n_runs, int max_threads) {
    if (!(t_snapshot >= 0.0) || !(t_snapshot < spec.horizon))
        throw SpecError("t_snapshot", "must lie in [0, horizon)");
    Engine engine(spec);
    RestartEnsembles out;
    out.continued.resize(static_cast<std::size_t>(n_runs));
    out.restarted.resize(static_cast<std::size_t>(n_runs));
    parallel_for(
        static_cast<std::size_t>(n_runs),
        [&](std::size_t r) {
            Rng rng(derive_seed(master_seed, r));
            SpikeTrain pre;
            CountdownState st = engine.init_state({}, rng);
            engine.continue_run(st, rng, t_snapshot, pre);

            /* the restart goes through the serialized form on purpose */
            CountdownState reloaded = parse_state_string(serialize_state(st));
            Rng fresh(derive_seed(master_seed, static_cast<std::uint64_t>(n_runs) + r));

            engine.continue_run(st, rng, spec.horizon, out.continued[r]);
            engine.continue_run(reloaded, fresh, spec.horizon, out.restarted[r]);
        },
        static_cast<unsigned>(max_threads));
    return out;
}

}  // namespace evspike::core
