#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fleetsim/experiment.hpp"
#include "fleetsim/version.hpp"

namespace {

using namespace fleetsim;

struct Overrides {
    std::vector<std::string> methods;
    std::vector<int> vehicles;
    std::vector<std::string> activations;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ExperimentConfig load_config(const std::string& path, const Overrides& ov) {
    ExperimentConfig cfg = ExperimentConfig::from_file(path);
    if (!ov.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : ov.methods) cfg.methods.push_back(parse_method(m));
    }
    if (!ov.vehicles.empty()) cfg.vehicle_counts = ov.vehicles;
    if (!ov.activations.empty()) {
        cfg.activations.clear();
        for (const auto& a : ov.activations) cfg.activations.push_back(parse_activation(a));
    }
    if (ov.seed) cfg.sim.seed = *ov.seed;
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    return cfg;
}

void add_override_flags(CLI::App* cmd, std::string& config_path, Overrides& ov) {
    cmd->add_option("--config", config_path, "experiment config file (JSON)")->required();
    cmd->add_option("--method", ov.methods, "override sweep methods (dfda|fda|pic|none)");
    cmd->add_option("--vehicles", ov.vehicles, "override sweep vehicle counts");
    cmd->add_option("--activation", ov.activations,
                    "override sweep activations (ignore|identity|sigmoid|softplus|relu)");
    cmd->add_option("--seed", ov.seed, "override RNG seed");
    cmd->add_option("--out", ov.out, "override output directory");
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    ExperimentConfig cfg = load_config(config_path, ov);
    std::vector<RunRow> rows = run_experiment(cfg);
    std::printf("%s\n", metrics_csv_header().c_str());
    for (const auto& row : rows) std::printf("%s\n", metrics_csv_row(row, cfg.sim.k).c_str());
    std::printf("wrote %zu run(s) to %s\n", rows.size(), cfg.out_dir.c_str());
    return 0;
}

int cmd_compare(const std::string& config_path, const Overrides& ov) {
    ExperimentConfig cfg = load_config(config_path, ov);
    ComparisonTable table = compare_methods(cfg);
    std::printf("reference: %s\n", table.reference_cell.c_str());
    std::printf("cell,R,rho,kappa,tau_s\n");
    for (const auto& row : table.rows)
        std::printf("%s,%.6f,%.6f,%.6f,%.3f\n", row.cell.c_str(), row.metrics.served_ratio,
                    row.metrics.rho.value_or(0.0), row.metrics.kappa,
                    row.metrics.mean_wait_s.value_or(0.0));
    std::printf("wrote comparison.csv and hourly_r_diff.csv to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_partition(const std::string& config_path, const Overrides& ov, const std::string& at,
                  const std::string& out_path) {
    ExperimentConfig cfg = load_config(config_path, ov);
    cfg.validate();
    RoadGraph g = load_graph_files(cfg.nodes_path, cfg.edges_path, cfg.slot_length_s);
    g.set_l_max(cfg.sim.l_max_m);
    g.set_fallback_speed(cfg.sim.speed_mps);
    TripStore history;
    if (!cfg.history_path.empty()) history = ingest_trips_file(cfg.history_path, g);
    DemandProfile profile(history, g.vertex_count(), cfg.sim.t_f_s, cfg.sim.t_a_s, cfg.sim.t_r_s);

    std::int64_t t = at.empty() ? cfg.sim.start_time : parse_iso8601(at);
    Method method = cfg.methods.front();
    std::vector<double> gaps = all_gaps(profile, g.vertex_count(), t + cfg.sim.t_a_s);

    Partition p;
    switch (method) {
        case Method::Dfda: {
            std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.sim.restarts));
            for (std::size_t i = 0; i < seeds.size(); ++i)
                seeds[i] = mix_seed(cfg.sim.seed, 0xd1daULL, i);
            SearchOptions opts;
            opts.weighted_update = cfg.sim.weighted_update;
            p = multi_restart_search(g, cfg.sim.k, gaps, cfg.activations.front(), seeds, t, opts);
            break;
        }
        case Method::Fda: {
            FdaVedConfig fcfg;
            fcfg.n_max = cfg.sim.fda_n_max > 0
                             ? cfg.sim.fda_n_max
                             : int((g.vertex_count() + std::size_t(cfg.sim.k) - 1) /
                                   std::size_t(cfg.sim.k));
            fcfg.delta_s = double(cfg.sim.delta_s);
            p = fda_ved_partition(g, fcfg, t);
            break;
        }
        case Method::Pic:
            p = pic_partition(g, cfg.sim.k, cfg.sim.seed, t);
            break;
        case Method::None:
            throw ConfigError("partition: method none has no partitioner");
    }

    if (out_path.empty() || out_path == "-") {
        write_partition_csv(p, std::cout);
        std::cout << partition_summary_json(p) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot write " + out_path);
        write_partition_csv(p, out);
        std::ofstream summary(out_path + ".json");
        summary << partition_summary_json(p) << "\n";
        std::printf("wrote %s and %s.json\n", out_path.c_str(), out_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fleetsim: demand-aware vehicle dispatching experiments"};
    app.set_version_flag("--version", fleetsim::kVersion);
    app.require_subcommand(1);

    std::string run_config, cmp_config, part_config;
    Overrides run_ov, cmp_ov, part_ov;
    std::string part_at, part_out;

    CLI::App* run = app.add_subcommand("run", "run the configured experiment sweep");
    add_override_flags(run, run_config, run_ov);

    CLI::App* compare = app.add_subcommand("compare", "compare completed runs side by side");
    add_override_flags(compare, cmp_config, cmp_ov);

    CLI::App* partition =
        app.add_subcommand("partition", "compute one partition and export it as CSV");
    add_override_flags(partition, part_config, part_ov);
    partition->add_option("--at", part_at, "partition time (ISO-8601; default: sim start)");
    partition->add_option("--partition-out", part_out, "output CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(run_config, run_ov);
        if (compare->parsed()) return cmd_compare(cmp_config, cmp_ov);
        if (partition->parsed()) return cmd_partition(part_config, part_ov, part_at, part_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const fleetsim::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
