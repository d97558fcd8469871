#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "csight/digest.hpp"
#include "csight/error.hpp"
#include "csight/pipeline.hpp"
#include "csight/synth.hpp"
#include "csight/tsv.hpp"

using namespace csight;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("csight_pipeline_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
    REQUIRE(out.good());
}

// Writes a small labeled-traffic capture and its schedule; returns the paths.
struct Fixture {
    TempDir dir;
    std::string records_path;
    std::string schedule_path;
    std::size_t record_count = 0;

    explicit Fixture(const std::string& tag) : dir(tag) {
        SynthSpec spec;
        spec.normal_flows = 40;
        spec.attack_flows = 12;
        spec.dos_flows = 0;
        spec.seed = 33;
        spec.start_ts = 1000.0;
        spec.duration = 600.0;
        const SynthResult synth = synthesize(spec);
        record_count = synth.records.size();

        records_path = dir.file("capture.tsv");
        schedule_path = dir.file("schedule.csv");
        std::ofstream rec(records_path);
        write_header_tsv(rec, synth.records);
        std::ofstream sched(schedule_path);
        write_schedule_csv(sched, synth.events);
    }
};

PipelineConfig fast_config() {
    PipelineConfig cfg;
    cfg.kernel.cap = 350;
    cfg.kmeans.restarts = 5;
    return cfg;
}

const std::vector<std::string> kAllOutputs = {
    "labeled.tsv",       "capture_meta.json", "flows.csv",
    "flows_merged.csv",  "hist_stddev.csv",   "hist_packets_per_flow.csv",
    "hist_stddev.svg",   "hist_packets_per_flow.svg", "flow_occurrence.csv",
    "coi.csv",           "stddev_detector.json", "embedding.csv",
    "embedding_meta.json", "assignments.csv",  "evaluation.json",
    "manifest.json"};

int cli(const std::string& args) {
    const std::string cmd =
        std::string("\"") + CSIGHT_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("full run writes a consistent artifact set") {
    const Fixture fx("full");
    TempDir out("full_out");
    const PipelineConfig cfg = fast_config();

    const PipelineOutcome outcome =
        run_pipeline(cfg, fx.records_path, fx.schedule_path, out.path.string());

    CHECK(outcome.outputs == kAllOutputs);
    std::set<std::string> on_disk;
    for (const auto& entry : fs::directory_iterator(out.path))
        on_disk.insert(entry.path().filename().string());
    CHECK(on_disk == std::set<std::string>(kAllOutputs.begin(), kAllOutputs.end()));

    CHECK(outcome.capture.record_count == fx.record_count);
    CHECK(outcome.capture.skipped_frames == 0);
    CHECK(outcome.flow_count > 0);
    CHECK(outcome.merged_flow_count > 0);
    CHECK(outcome.merged_flow_count <= outcome.flow_count);
    CHECK(outcome.embedded_points == stride_indices(fx.record_count, cfg.kernel.cap).size());
    CHECK(!outcome.degenerate_truth);
    CHECK(outcome.winning_seed >= cfg.kmeans.seed);
    CHECK(outcome.winning_seed < cfg.kmeans.seed + cfg.kmeans.restarts);

    // The default source clusters every packet.
    CHECK(outcome.confusion.total() == fx.record_count);
    const double rate_sum = outcome.confusion.tp_rate() + outcome.confusion.fp_rate() +
                            outcome.confusion.tn_rate() + outcome.confusion.fn_rate();
    CHECK(rate_sum == doctest::Approx(1.0).epsilon(1e-12));

    const nlohmann::json manifest = nlohmann::json::parse(slurp(out.path / "manifest.json"));
    CHECK(manifest.at("tool").at("name").get<std::string>() == "csight");
    CHECK(manifest.at("tool").at("version").get<std::string>() == "0.1.0");
    CHECK(manifest.at("command").get<std::string>() == "run");
    CHECK(manifest.at("outputs").get<std::vector<std::string>>() == outcome.outputs);
    CHECK(manifest.at("results").at("records").get<std::size_t>() == fx.record_count);
    CHECK(manifest.at("results").at("flows").get<std::size_t>() == outcome.flow_count);
    CHECK(manifest.at("results").at("epsilon").get<double>() > 0.0);

    REQUIRE(manifest.at("inputs").size() == 2);
    const auto& input0 = manifest.at("inputs").at(0);
    CHECK(input0.at("path").get<std::string>() == fx.records_path);
    CHECK(input0.at("bytes").get<std::uint64_t>() == fs::file_size(fx.records_path));
    CHECK(input0.at("fnv1a64").get<std::string>() == file_digest_hex(fx.records_path));
    CHECK(manifest.at("inputs").at(1).at("path").get<std::string>() == fx.schedule_path);

    // The embedded parameters document reloads to the same configuration.
    std::istringstream params(manifest.at("parameters").dump());
    const PipelineConfig reloaded = load_config_json(params);
    CHECK(config_json_string(reloaded) == config_json_string(cfg));

    const nlohmann::json eval = nlohmann::json::parse(slurp(out.path / "evaluation.json"));
    CHECK(!eval.at("degenerate_truth").get<bool>());
    CHECK(eval.at("source").get<std::string>() == "features");
    CHECK(eval.at("evaluated_points").get<std::size_t>() == fx.record_count);
    const auto& counts = eval.at("counts");
    CHECK(counts.at("total").get<std::uint64_t>() == fx.record_count);
    CHECK(counts.at("tp").get<std::uint64_t>() + counts.at("fp").get<std::uint64_t>() +
              counts.at("tn").get<std::uint64_t>() + counts.at("fn").get<std::uint64_t>() ==
          fx.record_count);
    const auto classes = eval.at("cluster_classes").get<std::vector<std::string>>();
    REQUIRE(classes.size() == 2);
    CHECK(classes[0] != classes[1]);
}

TEST_CASE("rerun is byte identical except the manifest timestamp") {
    const Fixture fx("rerun");
    TempDir first("rerun_a");
    TempDir second("rerun_b");
    const PipelineConfig cfg = fast_config();

    run_pipeline(cfg, fx.records_path, fx.schedule_path, first.path.string());
    run_pipeline(cfg, fx.records_path, fx.schedule_path, second.path.string());

    for (const std::string& name : kAllOutputs) {
        CAPTURE(name);
        const std::string a = slurp(first.path / name);
        const std::string b = slurp(second.path / name);
        if (name == "manifest.json") {
            nlohmann::json ja = nlohmann::json::parse(a);
            nlohmann::json jb = nlohmann::json::parse(b);
            ja.erase("generated_at");
            jb.erase("generated_at");
            CHECK(ja.dump() == jb.dump());
        } else {
            CHECK(a == b);
        }
    }
}

TEST_CASE("missing schedule degrades to single class evaluation") {
    const Fixture fx("nosched");
    TempDir out("nosched_out");
    const PipelineConfig cfg = fast_config();

    const PipelineOutcome outcome =
        run_pipeline(cfg, fx.records_path, std::nullopt, out.path.string());

    CHECK(outcome.degenerate_truth);
    CHECK(outcome.winning_seed == cfg.kmeans.seed);
    CHECK(outcome.confusion.tp == 0);
    CHECK(outcome.confusion.fp == 0);
    CHECK(outcome.confusion.fn == 0);
    CHECK(outcome.confusion.tn == fx.record_count);
    CHECK(outcome.confusion.accuracy() == 1.0);

    const nlohmann::json eval = nlohmann::json::parse(slurp(out.path / "evaluation.json"));
    CHECK(eval.at("degenerate_truth").get<bool>());
    CHECK(eval.at("cluster_classes").is_null());
    CHECK(eval.contains("note"));

    const nlohmann::json manifest = nlohmann::json::parse(slurp(out.path / "manifest.json"));
    REQUIRE(manifest.at("inputs").size() == 1);
}

TEST_CASE("failed runs leave no partial artifacts") {
    const Fixture fx("fail");

    {
        TempDir out("fail_sched");
        const std::string bad = fx.dir.file("bad_schedule.csv");
        spit(bad, "only,three,fields\n");
        CHECK_THROWS_AS(
            run_pipeline(fast_config(), fx.records_path, bad, out.path.string()),
            ParseError);
        CHECK(fs::is_empty(out.path));
    }
    {
        TempDir out("fail_input");
        CHECK_THROWS_AS(run_pipeline(fast_config(), fx.dir.file("missing.tsv"), std::nullopt,
                                     out.path.string()),
                        DataError);
        CHECK(fs::is_empty(out.path));
    }
    {
        TempDir out("fail_garbage");
        const std::string garbage = fx.dir.file("garbage.bin");
        spit(garbage, "this is not a capture\nof any kind\n");
        CHECK_THROWS_AS(
            run_pipeline(fast_config(), garbage, std::nullopt, out.path.string()),
            ParseError);
        CHECK(fs::is_empty(out.path));
    }
}

TEST_CASE("alternate clustering sources cover flows and the embedding") {
    const Fixture fx("sources");

    {
        TempDir out("src_flows");
        PipelineConfig cfg = fast_config();
        cfg.kmeans.source = ClusterSource::flows;
        const PipelineOutcome outcome =
            run_pipeline(cfg, fx.records_path, fx.schedule_path, out.path.string());
        CHECK(outcome.confusion.total() == outcome.flow_count);

        const nlohmann::json eval = nlohmann::json::parse(slurp(out.path / "evaluation.json"));
        CHECK(eval.at("source").get<std::string>() == "flows");
        CHECK(eval.at("evaluated_points").get<std::size_t>() == outcome.flow_count);
    }
    {
        TempDir out("src_embed");
        PipelineConfig cfg = fast_config();
        cfg.kmeans.source = ClusterSource::embedding;
        const PipelineOutcome outcome =
            run_pipeline(cfg, fx.records_path, fx.schedule_path, out.path.string());
        CHECK(outcome.confusion.total() == outcome.embedded_points);

        const nlohmann::json eval = nlohmann::json::parse(slurp(out.path / "evaluation.json"));
        CHECK(eval.at("source").get<std::string>() == "embedding");
        CHECK(eval.at("evaluated_points").get<std::size_t>() == outcome.embedded_points);
    }
}

TEST_CASE("flow points carry one row per flow") {
    const Fixture fx("flowpts");
    CaptureMeta meta;
    const std::vector<PacketRecord> records = load_records(fx.records_path, meta);
    CHECK(meta.record_count == fx.record_count);

    const std::vector<FlowStats> flows = aggregate_flows(records, 60.0);
    const PointSet pts = flow_feature_points(flows, Normalization::none);
    REQUIRE(pts.size() == flows.size());
    REQUIRE(pts.dims() == 6);
    for (std::size_t i = 0; i < flows.size(); ++i) {
        CHECK(pts.at(i, 0) == flows[i].first_ts);
        CHECK(pts.at(i, 1) == static_cast<double>(flows[i].src));
        CHECK(pts.at(i, 3) == flows[i].mean_len);
        CHECK(pts.at(i, 5) == static_cast<double>(flows[i].count));
    }

    CHECK_THROWS_AS(flow_feature_points({}, Normalization::none), DataError);
    CHECK_THROWS_AS(flow_feature_points({flows[0]}, Normalization::none), DataError);
}

TEST_CASE("cluster evaluation validates and reports the degenerate path") {
    PointSet pts(4, 1);
    for (std::size_t i = 0; i < 4; ++i) pts.at(i, 0) = static_cast<double>(i);
    KmeansSettings settings;

    CHECK_THROWS_AS(cluster_and_evaluate(pts, {1, 0}, settings), DataError);

    const ClusterEvaluation all_normal = cluster_and_evaluate(pts, {0, 0, 0, 0}, settings);
    CHECK(all_normal.degenerate_truth);
    CHECK(all_normal.confusion.tn == 4);
    CHECK(all_normal.confusion.accuracy() == 1.0);

    const ClusterEvaluation all_attack = cluster_and_evaluate(pts, {1, 1, 1, 1}, settings);
    CHECK(all_attack.degenerate_truth);
    CHECK(all_attack.confusion.tp == 4);

    KmeansSettings bad = settings;
    bad.k = 3;
    CHECK_THROWS_AS(cluster_and_evaluate(pts, {1, 0, 1, 0}, bad), DataError);

    const ClusterEvaluation mixed = cluster_and_evaluate(pts, {1, 1, 0, 0}, settings);
    CHECK(!mixed.degenerate_truth);
    CHECK(mixed.confusion.total() == 4);
}

TEST_CASE("config documents override defaults and reject junk") {
    const auto load = [](const std::string& text) {
        std::istringstream in(text);
        return load_config_json(in);
    };

    const PipelineConfig partial = load(R"({"slice_duration": 30, "kmeans": {"restarts": 3}})");
    CHECK(partial.slice_duration == 30.0);
    CHECK(partial.kmeans.restarts == 3);
    CHECK(partial.stddev_threshold == 50.0);
    CHECK(partial.kernel.cap == 1500);
    CHECK(partial.kmeans.source == ClusterSource::features);

    const PipelineConfig full = load(R"({
        "use_ttl": true,
        "reply_as_attack": true,
        "write_svg": false,
        "coi": {"bin_size_z": 10, "period_y": 100, "threshold": 0.25},
        "kernel": {"epsilon": 2.5, "t": 2, "m": 4, "normalization": "minmax", "cap": 600},
        "kmeans": {"k": 2, "seed": 7, "restarts": 2, "max_iter": 50, "source": "flows"}
    })");
    CHECK(full.use_ttl);
    CHECK(full.reply_as_attack);
    CHECK(!full.write_svg);
    CHECK(full.coi.bin_size_z == 10.0);
    CHECK(full.coi.period_y == 100.0);
    CHECK(full.coi.threshold == 0.25);
    CHECK(full.kernel.epsilon == 2.5);
    CHECK(full.kernel.t == 2);
    CHECK(full.kernel.m == 4);
    CHECK(full.kernel.normalization == Normalization::minmax);
    CHECK(full.kernel.cap == 600);
    CHECK(full.kmeans.seed == 7);
    CHECK(full.kmeans.max_iter == 50);
    CHECK(full.kmeans.source == ClusterSource::flows);

    CHECK(config_json_string(load(config_json_string(PipelineConfig{}))) ==
          config_json_string(PipelineConfig{}));

    CHECK_THROWS_AS(load(R"({"bogus": 1})"), DataError);
    CHECK_THROWS_AS(load(R"({"kernel": {"bogus": 1}})"), DataError);
    CHECK_THROWS_AS(load(R"({"slice_duration": "fast"})"), DataError);
    CHECK_THROWS_AS(load(R"({"kmeans": {"seed": -1}})"), DataError);
    CHECK_THROWS_AS(load(R"({"slice_duration": 0})"), DataError);
    CHECK_THROWS_AS(load(R"({"coi": {"threshold": 1.5}})"), DataError);
    CHECK_THROWS_AS(load(R"({"kernel": {"normalization": "standard"}})"), DataError);
    CHECK_THROWS_AS(load("{nonsense"), DataError);
    CHECK_THROWS_AS(load(R"([1, 2, 3])"), DataError);
}

TEST_CASE("command line reports success, usage and data errors distinctly") {
    TempDir dir("cli");
    const std::string records = dir.file("r.tsv");
    const std::string schedule = dir.file("s.csv");
    const std::string outdir = dir.file("out");

    CHECK(cli("--version") == 0);
    CHECK(cli("--help") == 0);
    CHECK(cli("bogus-subcommand") == 1);
    CHECK(cli("ingest") == 1);
    CHECK(cli("run") == 1);

    CHECK(cli("synth --out-records \"" + records + "\" --out-schedule \"" + schedule +
              "\" --normal 8 --attack 3 --dos 0 --seed 5 --duration 200") == 0);
    CHECK(fs::exists(records));
    CHECK(fs::exists(schedule));

    CHECK(cli("run -i \"" + records + "\" -s \"" + schedule + "\" -d \"" + outdir +
              "\" --cap 200 --restarts 3") == 0);
    CHECK(fs::exists(fs::path(outdir) / "manifest.json"));
    CHECK(fs::exists(fs::path(outdir) / "evaluation.json"));

    // Ingesting a header TSV and writing it back is the identity.
    const std::string copied = dir.file("copy.tsv");
    CHECK(cli("ingest \"" + records + "\" -o \"" + copied + "\"") == 0);
    CHECK(slurp(copied) == slurp(records));

    CHECK(cli("run -i \"" + dir.file("missing.tsv") + "\" -d \"" + outdir + "\"") == 2);

    const std::string bad_config = dir.file("bad.json");
    spit(bad_config, "{nonsense");
    CHECK(cli("run -i \"" + records + "\" -d \"" + outdir + "\" -c \"" + bad_config + "\"") ==
          2);

    const std::string bad_sched = dir.file("bad_sched.csv");
    spit(bad_sched, "a,b\n");
    CHECK(cli("run -i \"" + records + "\" -s \"" + bad_sched + "\" -d \"" + outdir + "\"") ==
          2);
}
