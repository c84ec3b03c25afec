#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/sim.hpp"
#include "fleetsim/version.hpp"

namespace fleetsim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Versioned key-value experiment description; paths are resolved relative to
// the config file's directory. The sweep axes default to the base sim cell.
struct ExperimentConfig {
    std::string nodes_path;
    std::string edges_path;
    std::string trips_path;
    std::string history_path;  // optional; empty means no demand history
    std::string out_dir = "out";
    std::int64_t slot_length_s = 86400;
    SimConfig sim;
    std::vector<Method> methods;
    std::vector<int> vehicle_counts;
    std::vector<ActivationKind> activations;

    void validate() const {
        if (methods.empty() || vehicle_counts.empty() || activations.empty())
            throw ConfigError("sweep axes must be non-empty");
        if (!fs::exists(nodes_path)) throw ConfigError("missing node file: " + nodes_path);
        if (!fs::exists(edges_path)) throw ConfigError("missing edge file: " + edges_path);
        if (!fs::exists(trips_path)) throw ConfigError("missing trips file: " + trips_path);
        if (!history_path.empty() && !fs::exists(history_path))
            throw ConfigError("missing history file: " + history_path);
        sim.validate();
    }

    json to_json() const {
        json j;
        j["version"] = 1;
        j["graph"] = {{"nodes", nodes_path}, {"edges", edges_path}, {"slot_length_s", slot_length_s}};
        j["trips"] = trips_path;
        j["history"] = history_path;
        j["out_dir"] = out_dir;
        json s;
        s["start"] = format_iso8601(sim.start_time);
        s["horizon_s"] = sim.horizon_s;
        s["vehicles"] = sim.n_vehicles;
        s["k"] = sim.k;
        s["method"] = to_string(sim.method);
        s["activation"] = to_string(sim.activation);
        s["seed"] = sim.seed;
        s["restarts"] = sim.restarts;
        s["delta_s"] = sim.delta_s;
        s["t_r_s"] = sim.t_r_s;
        s["t_f_s"] = sim.t_f_s;
        s["t_a_s"] = sim.t_a_s;
        s["l_max_m"] = sim.l_max_m;
        s["batch_interval_s"] = sim.batch_interval_s;
        s["relocation_interval_s"] = sim.relocation_interval_s;
        s["speed_mps"] = sim.speed_mps;
        s["divertible"] = sim.divertible;
        s["weighted_update"] = sim.weighted_update;
        s["repartition_each_cycle"] = sim.repartition_each_cycle;
        s["fda_n_max"] = sim.fda_n_max;
        j["sim"] = s;
        json sweep;
        json ms = json::array(), vs = json::array(), as = json::array();
        for (Method m : methods) ms.push_back(to_string(m));
        for (int v : vehicle_counts) vs.push_back(v);
        for (ActivationKind a : activations) as.push_back(to_string(a));
        sweep["methods"] = ms;
        sweep["vehicles"] = vs;
        sweep["activations"] = as;
        j["sweep"] = sweep;
        return j;
    }

    std::uint64_t config_hash() const { return fnv1a(to_json().dump()); }

    static ExperimentConfig from_json(const json& j, const fs::path& base_dir) {
        ExperimentConfig cfg;
        if (!j.contains("version") || j.at("version").get<int>() != 1)
            throw ConfigError("config: unsupported or missing version (expected 1)");
        auto resolve = [&](const std::string& p) -> std::string {
            if (p.empty()) return p;
            fs::path path(p);
            return path.is_absolute() ? path.string() : (base_dir / path).string();
        };
        const json& graph = j.at("graph");
        cfg.nodes_path = resolve(graph.at("nodes").get<std::string>());
        cfg.edges_path = resolve(graph.at("edges").get<std::string>());
        cfg.slot_length_s = graph.value("slot_length_s", std::int64_t(86400));
        cfg.trips_path = resolve(j.at("trips").get<std::string>());
        cfg.history_path = resolve(j.value("history", std::string()));
        cfg.out_dir = resolve(j.value("out_dir", std::string("out")));

        const json& s = j.at("sim");
        cfg.sim.start_time = parse_iso8601(s.at("start").get<std::string>());
        cfg.sim.horizon_s = s.at("horizon_s").get<std::int64_t>();
        cfg.sim.n_vehicles = s.at("vehicles").get<int>();
        cfg.sim.k = s.at("k").get<int>();
        cfg.sim.method = parse_method(s.value("method", std::string("dfda")));
        cfg.sim.activation = parse_activation(s.value("activation", std::string("relu")));
        cfg.sim.seed = s.value("seed", std::uint64_t(0));
        cfg.sim.restarts = s.value("restarts", 8);
        cfg.sim.delta_s = s.value("delta_s", std::int64_t(300));
        cfg.sim.t_r_s = s.value("t_r_s", std::int64_t(600));
        cfg.sim.t_f_s = s.value("t_f_s", std::int64_t(600));
        cfg.sim.t_a_s = s.value("t_a_s", std::int64_t(600));
        cfg.sim.l_max_m = s.value("l_max_m", 200.0);
        cfg.sim.batch_interval_s = s.value("batch_interval_s", std::int64_t(60));
        cfg.sim.relocation_interval_s = s.value("relocation_interval_s", std::int64_t(600));
        cfg.sim.speed_mps = s.value("speed_mps", 8.33);
        cfg.sim.divertible = s.value("divertible", true);
        cfg.sim.weighted_update = s.value("weighted_update", true);
        cfg.sim.repartition_each_cycle = s.value("repartition_each_cycle", true);
        cfg.sim.fda_n_max = s.value("fda_n_max", 0);

        if (j.contains("sweep")) {
            const json& sweep = j.at("sweep");
            if (sweep.contains("methods"))
                for (const auto& m : sweep.at("methods")) cfg.methods.push_back(parse_method(m));
            if (sweep.contains("vehicles"))
                for (const auto& v : sweep.at("vehicles")) cfg.vehicle_counts.push_back(v.get<int>());
            if (sweep.contains("activations"))
                for (const auto& a : sweep.at("activations"))
                    cfg.activations.push_back(parse_activation(a));
        }
        if (cfg.methods.empty()) cfg.methods.push_back(cfg.sim.method);
        if (cfg.vehicle_counts.empty()) cfg.vehicle_counts.push_back(cfg.sim.n_vehicles);
        if (cfg.activations.empty()) cfg.activations.push_back(cfg.sim.activation);
        return cfg;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ConfigError("config parse error in " + path + ": " + e.what());
        }
        return from_json(j, fs::path(path).parent_path());
    }
};

inline std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for hashing: " + path);
    std::uint64_t h = kFnvOffset;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a(std::string_view(buf, std::size_t(in.gcount())), h);
    return h;
}

struct RunRow {
    std::string cell;
    Method method = Method::None;
    ActivationKind activation = ActivationKind::Relu;
    int vehicles = 0;
    std::uint64_t seed = 0;
    MetricsReport metrics;
};

inline std::string cell_tag(Method m, ActivationKind a, int vehicles, std::uint64_t seed) {
    return to_string(m) + "_" + to_string(a) + "_v" + std::to_string(vehicles) + "_s" +
           std::to_string(seed);
}

inline std::string metrics_csv_header() {
    return "cell,method,activation,vehicles,k,seed,requests,served,expired,R,VKM,TKM,rho,kappa,"
           "tau_s,flags";
}

inline std::string metrics_csv_row(const RunRow& row, int k) {
    char buf[512];
    std::string rho = row.metrics.rho ? [&] {
        char b[32];
        std::snprintf(b, sizeof(b), "%.6f", *row.metrics.rho);
        return std::string(b);
    }() : std::string();
    std::string tau = row.metrics.mean_wait_s ? [&] {
        char b[32];
        std::snprintf(b, sizeof(b), "%.3f", *row.metrics.mean_wait_s);
        return std::string(b);
    }() : std::string();
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%llu,%d,%d,%d,%.6f,%.6f,%.6f,%s,%.6f,%s,%s",
                  row.cell.c_str(), to_string(row.method).c_str(),
                  to_string(row.activation).c_str(), row.vehicles, k,
                  static_cast<unsigned long long>(row.seed), row.metrics.requests,
                  row.metrics.served, row.metrics.expired, row.metrics.served_ratio,
                  row.metrics.vkm, row.metrics.tkm, rho.c_str(), row.metrics.kappa, tau.c_str(),
                  row.metrics.no_demand ? "no_demand" : "");
    return buf;
}

// One full simulation per sweep cell. Writes metrics.csv, per-cell event logs,
// hourly served-ratio series, per-cycle partition snapshots, and a manifest
// binding the config and input data hashes. Deterministic: no timestamps.
inline std::vector<RunRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    RoadGraph g = load_graph_files(cfg.nodes_path, cfg.edges_path, cfg.slot_length_s);
    g.set_l_max(cfg.sim.l_max_m);
    g.set_fallback_speed(cfg.sim.speed_mps);

    TripStore trips = ingest_trips_file(cfg.trips_path, g);
    TripStore history;
    if (!cfg.history_path.empty()) history = ingest_trips_file(cfg.history_path, g);
    DemandProfile profile(history, g.vertex_count(), cfg.sim.t_f_s, cfg.sim.t_a_s, cfg.sim.t_r_s);

    fs::create_directories(cfg.out_dir);

    json manifest;
    manifest["code_version"] = kVersion;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = to_hex(cfg.config_hash());
    json hashes;
    hashes["nodes"] = to_hex(hash_file(cfg.nodes_path));
    hashes["edges"] = to_hex(hash_file(cfg.edges_path));
    hashes["trips"] = to_hex(hash_file(cfg.trips_path));
    if (!cfg.history_path.empty()) hashes["history"] = to_hex(hash_file(cfg.history_path));
    manifest["data_hashes"] = hashes;
    manifest["seed"] = cfg.sim.seed;
    {
        std::ofstream mf(fs::path(cfg.out_dir) / "manifest.json");
        mf << manifest.dump(2) << "\n";
    }

    std::vector<RunRow> rows;
    std::ofstream metrics_out(fs::path(cfg.out_dir) / "metrics.csv");
    metrics_out << metrics_csv_header() << "\n";

    for (Method method : cfg.methods) {
        for (int vehicles : cfg.vehicle_counts) {
            for (ActivationKind act : cfg.activations) {
                SimConfig sc = cfg.sim;
                sc.method = method;
                sc.n_vehicles = vehicles;
                sc.activation = act;
                Simulation sim(g, profile, sc);
                sim.load_requests(trips);
                RunResult result = sim.run();

                RunRow row;
                row.cell = cell_tag(method, act, vehicles, sc.seed);
                row.method = method;
                row.activation = act;
                row.vehicles = vehicles;
                row.seed = sc.seed;
                row.metrics = result.metrics;
                rows.push_back(row);
                metrics_out << metrics_csv_row(row, sc.k) << "\n";

                fs::path cell_dir = fs::path(cfg.out_dir) / row.cell;
                fs::create_directories(cell_dir);
                {
                    std::ofstream ev(cell_dir / "events.ndjson");
                    ev << to_ndjson(result.events);
                }
                {
                    std::ofstream hr(cell_dir / "hourly_r.csv");
                    hr << "hour,requests,served,R\n";
                    for (const auto& h : result.metrics.hourly) {
                        char b[96];
                        std::snprintf(b, sizeof(b), "%d,%d,%d,%.6f", h.hour, h.requests, h.served,
                                      h.r);
                        hr << b << "\n";
                    }
                }
                if (!result.partitions.empty()) {
                    fs::path pdir = cell_dir / "partitions";
                    fs::create_directories(pdir);
                    for (const auto& snap : result.partitions) {
                        std::string stem = "cycle_" + std::to_string(snap.time);
                        std::ofstream pcsv(pdir / (stem + ".csv"));
                        write_partition_csv(snap.partition, pcsv);
                        std::ofstream pjson(pdir / (stem + ".json"));
                        pjson << partition_summary_json(snap.partition) << "\n";
                    }
                }
            }
        }
    }
    return rows;
}

struct ComparisonTable {
    std::vector<RunRow> rows;
    std::string reference_cell;
    // hour -> (cell -> R difference vs reference)
    std::vector<int> hours;
    std::vector<std::string> cells;
    std::vector<std::vector<double>> r_diff;  // [hour_index][cell_index]
};

namespace detail {

inline std::vector<RunRow> read_metrics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string() + "; run the experiment first");
    CsvTable t = read_csv(in);
    std::vector<RunRow> rows;
    int c_cell = t.column("cell"), c_method = t.column("method"), c_act = t.column("activation");
    int c_veh = t.column("vehicles"), c_seed = t.column("seed");
    int c_requests = t.column("requests"), c_served = t.column("served"),
        c_expired = t.column("expired");
    int c_r = t.column("R"), c_vkm = t.column("VKM"), c_tkm = t.column("TKM");
    int c_rho = t.column("rho"), c_kappa = t.column("kappa"), c_tau = t.column("tau_s");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        std::size_t ln = t.line_no[i];
        RunRow r;
        r.cell = row[std::size_t(c_cell)];
        r.method = parse_method(row[std::size_t(c_method)]);
        r.activation = parse_activation(row[std::size_t(c_act)]);
        r.vehicles = int(parse_int_field(row[std::size_t(c_veh)], ln));
        r.seed = std::uint64_t(parse_int_field(row[std::size_t(c_seed)], ln));
        r.metrics.requests = int(parse_int_field(row[std::size_t(c_requests)], ln));
        r.metrics.served = int(parse_int_field(row[std::size_t(c_served)], ln));
        r.metrics.expired = int(parse_int_field(row[std::size_t(c_expired)], ln));
        r.metrics.served_ratio = parse_double_field(row[std::size_t(c_r)], ln);
        r.metrics.vkm = parse_double_field(row[std::size_t(c_vkm)], ln);
        r.metrics.tkm = parse_double_field(row[std::size_t(c_tkm)], ln);
        if (!row[std::size_t(c_rho)].empty())
            r.metrics.rho = parse_double_field(row[std::size_t(c_rho)], ln);
        r.metrics.kappa = parse_double_field(row[std::size_t(c_kappa)], ln);
        if (!row[std::size_t(c_tau)].empty())
            r.metrics.mean_wait_s = parse_double_field(row[std::size_t(c_tau)], ln);
        r.metrics.n_vehicles = r.vehicles;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace detail

// Side-by-side table over the completed runs in cfg.out_dir, plus per-hour
// served-ratio differences against the reference method ("none" when present,
// the first row's method otherwise). Refuses if the input data files have
// changed since the runs (hash mismatch against the manifest) or if there are
// fewer than two runs.
inline ComparisonTable compare_methods(const ExperimentConfig& cfg) {
    fs::path out(cfg.out_dir);
    std::ifstream mf(out / "manifest.json");
    if (!mf) throw ConfigError("no manifest in " + cfg.out_dir + "; run the experiment first");
    json manifest;
    mf >> manifest;
    const json& hashes = manifest.at("data_hashes");
    auto check = [&](const char* key, const std::string& path) {
        if (path.empty()) return;
        std::string expected = hashes.at(key).get<std::string>();
        std::string actual = to_hex(hash_file(path));
        if (expected != actual)
            throw ConfigError(std::string("data hash mismatch for ") + key +
                              ": runs used a different " + key + " file; refusing to compare");
    };
    check("nodes", cfg.nodes_path);
    check("edges", cfg.edges_path);
    check("trips", cfg.trips_path);
    if (!cfg.history_path.empty()) check("history", cfg.history_path);

    ComparisonTable table;
    table.rows = detail::read_metrics_csv(out / "metrics.csv");
    if (table.rows.size() < 2)
        throw ConfigError("compare_methods needs at least two completed runs");
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        if (table.rows[i].seed != table.rows[0].seed)
            throw ConfigError("compare_methods: runs use different seeds");

    std::size_t ref = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (table.rows[i].method == Method::None) {
            ref = i;
            break;
        }
    table.reference_cell = table.rows[ref].cell;

    // hourly series per cell
    std::vector<std::unordered_map<int, double>> series(table.rows.size());
    std::set<int> hour_set;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        std::ifstream hr(out / table.rows[i].cell / "hourly_r.csv");
        if (!hr) continue;
        CsvTable t = read_csv(hr);
        int c_hour = t.column("hour"), c_r = t.column("R");
        for (std::size_t rix = 0; rix < t.rows.size(); ++rix) {
            int hour = int(parse_int_field(t.rows[rix][std::size_t(c_hour)], t.line_no[rix]));
            series[i][hour] = parse_double_field(t.rows[rix][std::size_t(c_r)], t.line_no[rix]);
            hour_set.insert(hour);
        }
    }
    table.hours.assign(hour_set.begin(), hour_set.end());
    for (const auto& row : table.rows) table.cells.push_back(row.cell);
    for (int hour : table.hours) {
        std::vector<double> diffs;
        double ref_r = series[ref].count(hour) ? series[ref][hour] : 0.0;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            double r = series[i].count(hour) ? series[i][hour] : 0.0;
            diffs.push_back(r - ref_r);
        }
        table.r_diff.push_back(diffs);
    }

    {
        std::ofstream cmp(out / "comparison.csv");
        cmp << "cell,method,activation,vehicles,R,rho,kappa,tau_s,R_minus_ref\n";
        double ref_ratio = table.rows[ref].metrics.served_ratio;
        for (const auto& row : table.rows) {
            char b[256];
            std::snprintf(b, sizeof(b), "%s,%s,%s,%d,%.6f,%.6f,%.6f,%.3f,%.6f", row.cell.c_str(),
                          to_string(row.method).c_str(), to_string(row.activation).c_str(),
                          row.vehicles, row.metrics.served_ratio,
                          row.metrics.rho.value_or(std::numeric_limits<double>::quiet_NaN()),
                          row.metrics.kappa,
                          row.metrics.mean_wait_s.value_or(std::numeric_limits<double>::quiet_NaN()),
                          row.metrics.served_ratio - ref_ratio);
            cmp << b << "\n";
        }
    }
    {
        std::ofstream hd(out / "hourly_r_diff.csv");
        hd << "hour";
        for (const auto& cell : table.cells) hd << "," << cell;
        hd << "\n";
        for (std::size_t hix = 0; hix < table.hours.size(); ++hix) {
            hd << table.hours[hix];
            for (double d : table.r_diff[hix]) {
                char b[32];
                std::snprintf(b, sizeof(b), ",%.6f", d);
                hd << b;
            }
            hd << "\n";
        }
    }
    return table;
}

inline std::vector<EventRecord> parse_ndjson(std::istream& in) {
    std::vector<EventRecord> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        EventRecord e;
        e.time = j.at("t").get<std::int64_t>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        if (j.contains("req")) e.request = j.at("req").get<std::int64_t>();
        if (j.contains("veh")) e.vehicle = j.at("veh").get<int>();
        if (j.contains("node")) e.node = j.at("node").get<VertexId>();
        if (j.contains("km")) e.km = j.at("km").get<double>();
        if (j.contains("wait")) e.wait_s = j.at("wait").get<std::int64_t>();
        events.push_back(e);
    }
    return events;
}

}  // namespace fleetsim
