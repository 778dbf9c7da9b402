#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evspike/cli/report.hpp"

namespace evspike::cli {

/* Batch commands.  All are pure functions of (files, flags, seed): rerunning
 * one writes byte-identical outputs.  Errors surface as exceptions; the CLI
 * front-end maps them to nonzero exits with a JSON error object. */

struct SimulateResult {
    std::vector<std::string> files_written;
    long total_spikes = 0;
    std::string summary_json;
};

/* n_runs realizations -> out_dir/spikes.csv (run,time,neuron_id),
 * out_dir/hist.csv, out_dir/summary.json */
SimulateResult cmd_simulate(const std::string& spec_path, std::uint64_t seed,
                            int n_runs, const std::string& out_dir,
                            int max_threads = 0);

/* event-based vs Euler vs EulerGobet ensembles; per-neuron KS on in-window
 * spike times; report saved under out_dir when given */
SimReport cmd_compare(const std::string& spec_path, std::uint64_t seed, int n_runs,
                      double mc_dt, const std::string& out_dir = "",
                      int max_threads = 0);

/* wall-clock per method at matched n_runs plus the compare statistics */
SimReport cmd_bench(const std::string& spec_path, std::uint64_t seed, int n_runs,
                    double mc_dt, const std::string& out_dir = "",
                    int max_threads = 0);

/* dump one neuron's free-membrane hitting law (from its reset value) */
void cmd_fpt_table(const std::string& spec_path, int neuron_id, double grid_step,
                   double horizon, const std::string& out_path);

}  // namespace evspike::cli
