#include "evspike/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "evspike/cli/stats.hpp"
#include "evspike/core/engine.hpp"
#include "evspike/errors.hpp"
#include "evspike/fpt/volterra.hpp"
#include "evspike/mc/euler.hpp"
#include "evspike/models/network.hpp"

namespace evspike::cli {
namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

long count_spikes(const std::vector<core::SpikeTrain>& trains) {
    long total = 0;
    for (const auto& t : trains) total += static_cast<long>(t.size());
    return total;
}

/* all spike times of one neuron inside [lo, hi), pooled over the ensemble */
std::vector<double> pooled_times(const std::vector<core::SpikeTrain>& trains, int id,
                                 double lo, double hi) {
    std::vector<double> out;
    for (const auto& t : trains)
        for (const auto& r : t.records)
            if (r.neuron == id && r.time >= lo && r.time < hi) out.push_back(r.time);
    return out;
}

/* KS with a convention for degenerate ensembles instead of an exception:
 * both sides silent -> 0 (identical), one side silent -> 1 */
double ks_or_degenerate(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return 1.0;
    return ks_statistic(a, b);
}

std::vector<int> ids_of(const models::NetworkSpec& spec) {
    std::vector<int> ids;
    for (const auto& n : spec.neurons) ids.push_back(n.id);
    return ids;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("path", "cannot open " + path + " for writing");
    out << text;
}

SimReport compare_impl(const std::string& spec_path, std::uint64_t seed, int n_runs,
                       double mc_dt, const std::string& out_dir, int max_threads,
                       bool timed) {
    if (n_runs < 1) throw SpecError("n_runs", "must be >= 1");
    models::NetworkSpec spec = models::load_network(spec_path);
    std::vector<int> ids = ids_of(spec);
    double lo = 0.0, hi = spec.horizon, bw = spec.horizon / 40.0;

    SimReport rep;
    rep.spec_digest = spec_digest_of(models::serialize_network(spec));
    rep.window_lo = lo;
    rep.window_hi = hi;
    rep.bin_width = bw;
    rep.neuron_ids = ids;
    rep.machine = machine_summary();

    struct Ens {
        std::string name;
        double dt;
        std::vector<core::SpikeTrain> trains;
        double wall = 0.0;
    };
    std::vector<Ens> ens;
    {
        auto t0 = std::chrono::steady_clock::now();
        auto trains = core::run_ensemble(spec, seed, n_runs, spec.horizon, max_threads);
        ens.push_back({"event", 0.0, std::move(trains), seconds_since(t0)});
    }
    for (auto scheme : {mc::McScheme::Euler, mc::McScheme::EulerGobet}) {
        mc::McConfig cfg;
        cfg.dt = mc_dt;
        cfg.n_paths = n_runs;
        cfg.scheme = scheme;
        cfg.seed = seed;
        cfg.max_threads = max_threads;
        auto t0 = std::chrono::steady_clock::now();
        auto trains = mc::euler_run(spec, {}, cfg);
        ens.push_back({scheme == mc::McScheme::Euler ? "euler" : "euler_gobet", mc_dt,
                       std::move(trains), seconds_since(t0)});
    }

    for (const auto& e : ens) {
        MethodResult m;
        m.method = e.name;
        m.seed = seed;
        m.n_runs = n_runs;
        m.dt = e.dt;
        m.wall_seconds = timed ? e.wall : 0.0;  // compare stays byte-identical
        m.total_spikes = count_spikes(e.trains);
        m.hist = mc::histogram(e.trains, ids, bw, lo, hi).bins;
        rep.methods.push_back(std::move(m));
    }
    for (std::size_t a = 0; a < ens.size(); ++a)
        for (std::size_t b = a + 1; b < ens.size(); ++b)
            for (int id : ids)
                rep.ks.push_back({ens[a].name, ens[b].name, id,
                                  ks_or_degenerate(pooled_times(ens[a].trains, id, lo, hi),
                                                   pooled_times(ens[b].trains, id, lo, hi))});
    if (timed) {
        for (std::size_t e = 1; e < ens.size(); ++e)
            rep.speedups.push_back({ens[e].name, ens[e].wall / ens[0].wall});
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        rep.save((std::filesystem::path(out_dir) / "report.json").string());
    }
    return rep;
}

}  // namespace

SimulateResult cmd_simulate(const std::string& spec_path, std::uint64_t seed, int n_runs,
                            const std::string& out_dir, int max_threads) {
    if (n_runs < 1) throw SpecError("n_runs", "must be >= 1");
    models::NetworkSpec spec = models::load_network(spec_path);
    auto trains = core::run_ensemble(spec, seed, n_runs, spec.horizon, max_threads);
    std::vector<int> ids = ids_of(spec);

    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);
    SimulateResult res;
    res.total_spikes = count_spikes(trains);

    {
        std::ostringstream csv;
        csv << "run,time,neuron_id\n";
        char buf[64];
        for (std::size_t r = 0; r < trains.size(); ++r)
            for (const auto& rec : trains[r].records) {
                std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", r, rec.time,
                              rec.neuron);
                csv << buf;
            }
        std::string p = (dir / "spikes.csv").string();
        write_text(p, csv.str());
        res.files_written.push_back(p);
    }
    {
        std::ostringstream csv;
        mc::histogram(trains, ids, spec.horizon / 40.0, 0.0, spec.horizon)
            .write_csv(csv);
        std::string p = (dir / "hist.csv").string();
        write_text(p, csv.str());
        res.files_written.push_back(p);
    }
    {
        json j;
        j["spec_digest"] = spec_digest_of(models::serialize_network(spec));
        j["seed"] = seed;
        j["n_runs"] = n_runs;
        j["horizon"] = spec.horizon;
        j["total_spikes"] = res.total_spikes;
        j["neurons"] = json::array();
        for (int id : ids) {
            std::vector<double> isi;
            long count = 0;
            for (const auto& t : trains) {
                auto times = t.times_for(id);
                count += static_cast<long>(times.size());
                for (std::size_t k = 1; k < times.size(); ++k)
                    isi.push_back(times[k] - times[k - 1]);
            }
            json jn;
            jn["id"] = id;
            jn["spikes"] = count;
            jn["isi_mean"] = isi.empty() ? json() : json(mean_of(isi));
            jn["isi_median"] = isi.empty() ? json() : json(median_of(isi));
            j["neurons"].push_back(jn);
        }
        res.summary_json = j.dump(2) + "\n";
        std::string p = (dir / "summary.json").string();
        write_text(p, res.summary_json);
        res.files_written.push_back(p);
    }
    return res;
}

SimReport cmd_compare(const std::string& spec_path, std::uint64_t seed, int n_runs,
                      double mc_dt, const std::string& out_dir, int max_threads) {
    return compare_impl(spec_path, seed, n_runs, mc_dt, out_dir, max_threads, false);
}

SimReport cmd_bench(const std::string& spec_path, std::uint64_t seed, int n_runs,
                    double mc_dt, const std::string& out_dir, int max_threads) {
    return compare_impl(spec_path, seed, n_runs, mc_dt, out_dir, max_threads, true);
}

void cmd_fpt_table(const std::string& spec_path, int neuron_id, double grid_step,
                   double horizon, const std::string& out_path) {
    models::NetworkSpec spec = models::load_network(spec_path);
    const auto& nr = spec.neuron(neuron_id);
    if (models::model_has_exp_synapse(nr.model))
        throw SpecError("model",
                        "fpt-table covers instantaneous-synapse models; "
                        "exp-synapse laws are sampled, not tabulated");
    if (!(grid_step > 0.0) || !(horizon > grid_step))
        throw SpecError("grid", "need 0 < grid_step < horizon");
    fpt::GaussMarkovSpec gm;
    gm.kind = models::model_is_leaky(nr.model) ? fpt::GmKind::OrnsteinUhlenbeck
                                               : fpt::GmKind::Brownian;
    gm.tau = nr.tau;
    gm.sigma = nr.sigma;
    gm.input = nr.input;
    gm.rest_mu = nr.rest_mu;
    fpt::VolterraSolver solver(gm, nr.theta, 0.0, grid_step, horizon);
    std::ostringstream csv;
    solver.solve(nr.v_reset).write_csv(csv);
    write_text(out_path, csv.str());
}

}  // namespace evspike::cli
