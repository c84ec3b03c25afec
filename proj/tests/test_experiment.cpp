#include <catch2/catch.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fleetsim/experiment.hpp"
#include "helpers.hpp"

using namespace fleetsim;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string toy_trips_csv() {
    std::string csv = "request_time,pickup_node,dropoff_node\n";
    csv += "2011-01-12T08:00:10,0,1\n";
    csv += "2011-01-12T08:02:30,1,3\n";
    csv += "2011-01-12T08:05:00,2,0\n";
    csv += "2011-01-12T08:12:00,3,2\n";
    csv += "2011-01-12T08:20:40,0,2\n";
    csv += "2011-01-12T08:25:05,1,0\n";
    return csv;
}

std::string toy_history_csv() {
    std::string csv = "request_time,pickup_node,dropoff_node\n";
    for (int m = 0; m < 40; ++m) {
        char row[64];
        std::snprintf(row, sizeof(row), "2011-01-11T08:%02d:00,0,3\n", m);
        csv += row;
    }
    return csv;
}

std::string config_json(const testutil::TempDir& dir, const std::string& methods,
                        const std::string& history_name, const std::string& out_name) {
    std::string j = R"({
  "version": 1,
  "graph": {"nodes": "nodes.csv", "edges": "edges.csv", "slot_length_s": 86400},
  "trips": "trips.csv",
  "history": ")" + history_name + R"(",
  "out_dir": ")" + out_name + R"(",
  "sim": {
    "start": "2011-01-12T08:00:00",
    "horizon_s": 1800,
    "vehicles": 2,
    "k": 2,
    "method": "fda",
    "activation": "relu",
    "seed": 11,
    "restarts": 4,
    "t_a_s": 0
  },
  "sweep": {"methods": [)" + methods + R"(], "vehicles": [2], "activations": ["relu"]}
})";
    return dir.file("config.json", j);
}

void write_toy_inputs(const testutil::TempDir& dir, bool with_history = true) {
    dir.file("nodes.csv", testutil::toy_nodes_csv());
    dir.file("edges.csv", testutil::toy_edges_csv());
    dir.file("trips.csv", toy_trips_csv());
    if (with_history) dir.file("history.csv", toy_history_csv());
}

}  // namespace

TEST_CASE("single-cell experiment writes one row plus a manifest") {
    testutil::TempDir dir("single_cell");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"fda\"", "history.csv", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    std::vector<RunRow> rows = run_experiment(cfg);

    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == Method::Fda);
    CHECK(rows[0].metrics.requests == 6);

    std::string metrics = slurp(dir.sub("out/metrics.csv"));
    CHECK(metrics.find(metrics_csv_header()) == 0);
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 2);  // header + 1 row

    std::string manifest = slurp(dir.sub("out/manifest.json"));
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("data_hashes") != std::string::npos);

    CHECK(std::filesystem::exists(dir.sub("out/" + rows[0].cell + "/events.ndjson")));
    CHECK(std::filesystem::exists(dir.sub("out/" + rows[0].cell + "/hourly_r.csv")));
    CHECK(std::filesystem::exists(dir.sub("out/" + rows[0].cell + "/partitions")));
}

TEST_CASE("method sweep produces comparable rows and a comparison table") {
    testutil::TempDir dir("sweep");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"dfda\", \"none\"", "history.csv", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    std::vector<RunRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 2);

    ComparisonTable table = compare_methods(cfg);
    REQUIRE(table.rows.size() == 2);
    // reference is the 'none' run; its own diff is zero
    CHECK(table.reference_cell.find("none") != std::string::npos);
    std::string cmp = slurp(dir.sub("out/comparison.csv"));
    CHECK(cmp.find("R_minus_ref") != std::string::npos);
    CHECK(std::filesystem::exists(dir.sub("out/hourly_r_diff.csv")));
}

TEST_CASE("identical runs compare with zero differences") {
    testutil::TempDir dir("zero_diff");
    write_toy_inputs(dir);
    // no history: neither method issues relocation orders, so dfda and fda
    // produce byte-identical logs and all difference columns vanish
    std::string cfg_path = config_json(dir, "\"dfda\", \"fda\"", "", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    std::vector<RunRow> rows = run_experiment(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].metrics.served == rows[1].metrics.served);
    CHECK(rows[0].metrics.vkm == rows[1].metrics.vkm);

    ComparisonTable table = compare_methods(cfg);
    for (const auto& hour_diffs : table.r_diff)
        for (double d : hour_diffs) CHECK(d == 0.0);
}

TEST_CASE("comparison is stable under method order permutation") {
    testutil::TempDir dir("permute");
    write_toy_inputs(dir);
    std::string cfg_a = config_json(dir, "\"dfda\", \"none\"", "history.csv", "out_a");
    ExperimentConfig a = ExperimentConfig::from_file(cfg_a);
    run_experiment(a);
    ComparisonTable ta = compare_methods(a);

    std::string cfg_b = config_json(dir, "\"none\", \"dfda\"", "history.csv", "out_b");
    ExperimentConfig b = ExperimentConfig::from_file(cfg_b);
    run_experiment(b);
    ComparisonTable tb = compare_methods(b);

    // the reference is chosen by content (the 'none' run), so per-cell
    // differences are identical whatever the sweep order was
    CHECK(ta.reference_cell == tb.reference_cell);
    auto diff_of = [](const ComparisonTable& t, const std::string& cell) {
        std::map<int, double> out;
        for (std::size_t c = 0; c < t.cells.size(); ++c)
            if (t.cells[c] == cell)
                for (std::size_t h = 0; h < t.hours.size(); ++h)
                    out[t.hours[h]] = t.r_diff[h][c];
        return out;
    };
    for (const auto& cell : ta.cells) CHECK(diff_of(ta, cell) == diff_of(tb, cell));
}

TEST_CASE("comparison refuses when the data files changed after the runs") {
    testutil::TempDir dir("hash_guard");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"dfda\", \"none\"", "history.csv", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    run_experiment(cfg);
    dir.file("trips.csv", toy_trips_csv() + "2011-01-12T08:27:00,2,3\n");
    CHECK_THROWS_AS(compare_methods(cfg), ConfigError);
}

TEST_CASE("missing trips file fails validation with the path in the message") {
    testutil::TempDir dir("missing_trips");
    dir.file("nodes.csv", testutil::toy_nodes_csv());
    dir.file("edges.csv", testutil::toy_edges_csv());
    std::string cfg_path = config_json(dir, "\"fda\"", "", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("trips.csv") != std::string::npos);
    }
}

TEST_CASE("config version is enforced") {
    testutil::TempDir dir("version");
    write_toy_inputs(dir);
    std::string bad = dir.file("bad.json", R"({"version": 2, "graph": {}, "trips": "x"})");
    CHECK_THROWS_AS(ExperimentConfig::from_file(bad), ConfigError);
}

TEST_CASE("every report row is reproducible from the manifest alone") {
    testutil::TempDir dir("repro");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"dfda\"", "history.csv", "out1");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    std::vector<RunRow> first = run_experiment(cfg);

    std::ifstream mf(dir.sub("out1/manifest.json"));
    json manifest;
    mf >> manifest;
    ExperimentConfig again = ExperimentConfig::from_json(manifest.at("config"), dir.path);
    again.out_dir = dir.sub("out2");
    std::vector<RunRow> second = run_experiment(again);

    REQUIRE(first.size() == second.size());
    CHECK(metrics_csv_row(first[0], cfg.sim.k) == metrics_csv_row(second[0], again.sim.k));
    CHECK(slurp(dir.sub("out1/" + first[0].cell + "/events.ndjson")) ==
          slurp(dir.sub("out2/" + second[0].cell + "/events.ndjson")));
}

TEST_CASE("event logs replay through parse_ndjson") {
    testutil::TempDir dir("replay");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"fda\"", "history.csv", "out");
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    std::vector<RunRow> rows = run_experiment(cfg);
    std::ifstream ev(dir.sub("out/" + rows[0].cell + "/events.ndjson"));
    std::vector<EventRecord> replayed = parse_ndjson(ev);
    MetricsReport replay_metrics = compute_metrics(replayed, 2, cfg.sim.start_time);
    CHECK(replay_metrics.requests == rows[0].metrics.requests);
    CHECK(replay_metrics.served == rows[0].metrics.served);
    CHECK(replay_metrics.vkm == Approx(rows[0].metrics.vkm));
    CHECK(replay_metrics.served_ratio == rows[0].metrics.served_ratio);
}

#ifdef FLEETSIM_CLI_PATH
TEST_CASE("CLI run subcommand executes the sweep") {
    testutil::TempDir dir("cli_run");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"fda\", \"none\"", "history.csv", "out");
    std::string cmd = std::string(FLEETSIM_CLI_PATH) + " run --config " + cfg_path +
                      " > " + dir.sub("stdout.txt") + " 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(std::filesystem::exists(dir.sub("out/metrics.csv")));

    std::string cmp_cmd = std::string(FLEETSIM_CLI_PATH) + " compare --config " + cfg_path +
                          " >> " + dir.sub("stdout.txt") + " 2>&1";
    status = std::system(cmp_cmd.c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(std::filesystem::exists(dir.sub("out/comparison.csv")));
}

TEST_CASE("CLI exits with code 2 when the trips file is missing") {
    testutil::TempDir dir("cli_missing");
    dir.file("nodes.csv", testutil::toy_nodes_csv());
    dir.file("edges.csv", testutil::toy_edges_csv());
    std::string cfg_path = config_json(dir, "\"fda\"", "", "out");
    std::string cmd = std::string(FLEETSIM_CLI_PATH) + " run --config " + cfg_path + " > " +
                      dir.sub("stdout.txt") + " 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    CHECK(WEXITSTATUS(status) == 2);
    std::string output = slurp(dir.sub("stdout.txt"));
    CHECK(output.find("trips.csv") != std::string::npos);
}

TEST_CASE("CLI partition subcommand exports the partition CSV") {
    testutil::TempDir dir("cli_partition");
    write_toy_inputs(dir);
    std::string cfg_path = config_json(dir, "\"dfda\"", "history.csv", "out");
    std::string out_csv = dir.sub("partition.csv");
    std::string cmd = std::string(FLEETSIM_CLI_PATH) + " partition --config " + cfg_path +
                      " --partition-out " + out_csv + " > " + dir.sub("stdout.txt") + " 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    CHECK(WEXITSTATUS(status) == 0);
    std::string csv = slurp(out_csv);
    CHECK(csv.rfind("vertex_id,subarea_index,center_id\n", 0) == 0);
    std::string summary = slurp(out_csv + ".json");
    CHECK(summary.find("\"objective\"") != std::string::npos);
}
#endif
