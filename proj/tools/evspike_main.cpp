#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evspike/cli/commands.hpp"
#include "evspike/errors.hpp"
#include "evspike/models/network.hpp"

namespace {

using nlohmann::json;

void print_error(const std::string& kind, const std::string& message) {
    json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
}

/* --horizon overrides the spec horizon; commands take a spec path, so the
 * override goes through a canonical re-serialization in a temp file */
struct SpecArg {
    std::string path;
    double horizon = 0.0;  // 0 = keep the spec's own
    std::filesystem::path temp;

    ~SpecArg() {
        if (!temp.empty()) {
            std::error_code ec;
            std::filesystem::remove(temp, ec);
        }
    }
    std::string resolve() {
        if (horizon <= 0.0) return path;
        auto spec = evspike::models::load_network(path);
        spec.horizon = horizon;
        spec.validate();
        temp = std::filesystem::temp_directory_path() /
               ("evspike-spec-" + std::to_string(::getpid()) + ".txt");
        std::ofstream out(temp, std::ios::binary);
        out << evspike::models::serialize_network(spec);
        return temp.string();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-driven simulation of noisy integrate-and-fire networks"};
    app.require_subcommand(1);

    std::string spec_path, out_path;
    std::uint64_t seed = 1;
    int n_runs = 1000;
    double dt = 0.0, horizon = 0.0;
    int neuron_id = -1;

    auto add_common = [&](CLI::App* cmd, bool out_required) {
        cmd->add_option("--spec", spec_path, "network spec file")->required();
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--horizon", horizon, "override the spec horizon");
        auto* o = cmd->add_option("--out", out_path, "output directory");
        if (out_required) o->required();
    };

    CLI::App* sim = app.add_subcommand("simulate", "run seeded realizations, write CSV + summary");
    add_common(sim, true);
    sim->add_option("--runs", n_runs, "number of realizations");

    CLI::App* cmp = app.add_subcommand("compare", "event-based vs time-stepped ensembles, KS per neuron");
    add_common(cmp, false);
    cmp->add_option("--runs", n_runs, "number of realizations");
    cmp->add_option("--dt", dt, "time step for the Euler methods");

    CLI::App* bench = app.add_subcommand("bench", "wall-clock per method at matched runs");
    add_common(bench, false);
    bench->add_option("--runs", n_runs, "number of realizations");
    bench->add_option("--dt", dt, "time step for the Euler methods");

    CLI::App* tab = app.add_subcommand("fpt-table", "dump a neuron's free hitting law to CSV");
    tab->add_option("--spec", spec_path, "network spec file")->required();
    tab->add_option("--neuron", neuron_id, "neuron id (default: first in the spec)");
    tab->add_option("--dt", dt, "density grid step (default horizon/4096)");
    tab->add_option("--horizon", horizon, "table horizon (default: spec horizon)");
    tab->add_option("--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("usage", e.what());
        return app.exit(e);
    }

    try {
        SpecArg spec;
        spec.path = spec_path;
        spec.horizon = horizon;
        if (sim->parsed()) {
            auto res = evspike::cli::cmd_simulate(spec.resolve(), seed, n_runs, out_path);
            std::cout << res.summary_json;
        } else if (cmp->parsed() || bench->parsed()) {
            double step = dt > 0.0 ? dt : (bench->parsed() ? 0.01 : 1e-3);
            auto rep = bench->parsed()
                           ? evspike::cli::cmd_bench(spec.resolve(), seed, n_runs, step,
                                                     out_path)
                           : evspike::cli::cmd_compare(spec.resolve(), seed, n_runs,
                                                       step, out_path);
            std::cout << rep.to_json();
        } else if (tab->parsed()) {
            auto net = evspike::models::load_network(spec_path);
            int id = neuron_id >= 0 ? neuron_id : net.neurons.front().id;
            double h = horizon > 0.0 ? horizon : net.horizon;
            double step = dt > 0.0 ? dt : h / 4096.0;
            evspike::cli::cmd_fpt_table(spec_path, id, step, h, out_path);
            json j;
            j["written"] = out_path;
            std::cout << j.dump() << "\n";
        }
        return 0;
    } catch (const evspike::SpecError& e) {
        print_error("spec_error", e.what());
    } catch (const evspike::AvalancheDetected& e) {
        print_error("avalanche_detected", e.what());
    } catch (const evspike::SolverFailure& e) {
        print_error("solver_failure", e.what());
    } catch (const std::exception& e) {
        print_error("error", e.what());
    }
    return 1;
}
