// Command line front end: each subcommand wraps one pipeline stage, `run`
// chains them all. Exit codes: 0 success, 1 usage error, 2 bad data.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csight/config.hpp"
#include "csight/digest.hpp"
#include "csight/error.hpp"
#include "csight/flow.hpp"
#include "csight/manifold.hpp"
#include "csight/pipeline.hpp"
#include "csight/schedule.hpp"
#include "csight/stats.hpp"
#include "csight/synth.hpp"
#include "csight/tsv.hpp"

namespace {

using namespace csight;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::vector<PacketRecord> load_input(const std::string& path, CaptureMeta& meta) {
    return load_records(path, meta);
}

Normalization normalization_from(const std::string& name) {
    const auto parsed = parse_normalization(name);
    if (!parsed) throw DataError("unknown normalization \"" + name + "\"");
    return *parsed;
}

ClusterSource source_from(const std::string& name) {
    const auto parsed = parse_cluster_source(name);
    if (!parsed) throw DataError("unknown cluster source \"" + name + "\"");
    return *parsed;
}

struct IngestArgs {
    std::string input;
    std::string output;
    std::string meta_path;
};

int cmd_ingest(const IngestArgs& a) {
    CaptureMeta meta;
    const std::vector<PacketRecord> records = load_input(a.input, meta);
    {
        auto out = open_out(a.output);
        write_header_tsv(out, records);
    }
    if (!a.meta_path.empty()) {
        auto out = open_out(a.meta_path);
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "{\n  \"records\": %llu,\n  \"skipped_frames\": %llu,\n"
                      "  \"first_ts\": %.6f,\n  \"last_ts\": %.6f\n}\n",
                      static_cast<unsigned long long>(meta.record_count),
                      static_cast<unsigned long long>(meta.skipped_frames), meta.first_ts,
                      meta.last_ts);
        out << buf;
    }
    std::fprintf(stderr, "ingested %llu records (%llu frames skipped)\n",
                 static_cast<unsigned long long>(meta.record_count),
                 static_cast<unsigned long long>(meta.skipped_frames));
    return 0;
}

struct LabelArgs {
    std::string input;
    std::string schedule;
    std::string output;
    double slack = 60.0;
};

int cmd_label(const LabelArgs& a) {
    CaptureMeta meta;
    std::vector<PacketRecord> records = load_input(a.input, meta);
    std::vector<AttackEvent> events;
    {
        auto in = open_in(a.schedule);
        events = parse_attack_schedule(in);
    }
    label_packets(records, events, a.slack);
    auto out = open_out(a.output);
    write_header_tsv(out, records);
    std::uint64_t labeled = 0;
    for (const PacketRecord& r : records)
        if (r.label != Label::normal) ++labeled;
    std::fprintf(stderr, "labeled %llu of %zu records\n",
                 static_cast<unsigned long long>(labeled), records.size());
    return 0;
}

struct FlowArgs {
    std::string input;
    std::string output;
    double slice = 60.0;
    double epoch0 = 0.0;
    bool epoch0_set = false;
    bool merge = false;
};

int cmd_flows(const FlowArgs& a) {
    CaptureMeta meta;
    const std::vector<PacketRecord> records = load_input(a.input, meta);
    std::optional<double> epoch0;
    if (a.epoch0_set) epoch0 = a.epoch0;
    std::vector<FlowStats> flows = aggregate_flows(records, a.slice, epoch0);
    if (a.merge) flows = flow_direction_merge(flows);
    auto out = open_out(a.output);
    write_flow_csv(out, flows);
    std::fprintf(stderr, "%zu flows\n", flows.size());
    return 0;
}

struct StatsArgs {
    std::string input;
    std::string outdir;
    double slice = 60.0;
    double bin_width = 50.0;
    double threshold = 50.0;
    std::uint64_t min_count = 3;
    double coi_z = 3600.0;
    double coi_y = 0.0;
    double coi_threshold = 0.5;
    bool no_svg = false;
};

int cmd_stats(const StatsArgs& a) {
    PipelineConfig cfg;
    cfg.slice_duration = a.slice;
    cfg.hist_bin_width = a.bin_width;
    cfg.stddev_threshold = a.threshold;
    cfg.min_count = a.min_count;
    cfg.coi.bin_size_z = a.coi_z;
    cfg.coi.period_y = a.coi_y;
    cfg.coi.threshold = a.coi_threshold;
    validate_config(cfg);

    CaptureMeta meta;
    const std::vector<PacketRecord> records = load_input(a.input, meta);
    const std::vector<FlowStats> flows = aggregate_flows(records, cfg.slice_duration);

    std::filesystem::create_directories(a.outdir);
    const auto path = [&](const char* name) { return a.outdir + "/" + name; };

    const HistogramPair stddev_hist =
        stddev_histogram(flows, cfg.hist_bin_width, cfg.min_count);
    const HistogramPair packet_hist = packets_per_flow_distribution(flows);
    {
        auto out = open_out(path("hist_stddev.csv"));
        write_histogram_csv(out, stddev_hist);
    }
    {
        auto out = open_out(path("hist_packets_per_flow.csv"));
        write_histogram_csv(out, packet_hist);
    }
    if (!a.no_svg) {
        {
            auto out = open_out(path("hist_stddev.svg"));
            out << histogram_svg(stddev_hist, "Packet length spread per flow",
                                 "length standard deviation (bytes)");
        }
        {
            auto out = open_out(path("hist_packets_per_flow.svg"));
            out << histogram_svg(packet_hist, "Packets per flow",
                                 "packets (power-of-two bins)");
        }
    }
    {
        auto out = open_out(path("flow_occurrence.csv"));
        write_occurrence_csv(out, flow_occurrence_frequency(flows));
    }
    {
        CoiConfig coi_cfg;
        coi_cfg.bin_size_z = cfg.coi.bin_size_z;
        coi_cfg.period_y = cfg.coi.period_y;
        coi_cfg.threshold = cfg.coi.threshold;
        auto out = open_out(path("coi.csv"));
        write_coi_csv(out, coi_scores(records, coi_cfg));
    }
    {
        std::vector<std::uint8_t> truth(flows.size()), pred(flows.size());
        for (std::size_t i = 0; i < flows.size(); ++i) {
            truth[i] = flows[i].label == FlowLabel::attack ? 1 : 0;
            pred[i] = classify_by_stddev(flows[i], cfg.stddev_threshold, cfg.min_count) ==
                              FlowLabel::attack
                          ? 1
                          : 0;
        }
        const ConfusionMatrix cm = evaluate(pred, truth);
        auto out = open_out(path("stddev_detector.json"));
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "{\n  \"threshold\": %.12g,\n  \"min_count\": %llu,\n"
                      "  \"flows\": %zu,\n"
                      "  \"counts\": {\"tp\": %llu, \"fp\": %llu, \"tn\": %llu, \"fn\": %llu},\n"
                      "  \"rates\": {\"tp\": %.12g, \"fp\": %.12g, \"tn\": %.12g, "
                      "\"fn\": %.12g},\n  \"accuracy\": %.12g\n}\n",
                      cfg.stddev_threshold,
                      static_cast<unsigned long long>(cfg.min_count), flows.size(),
                      static_cast<unsigned long long>(cm.tp),
                      static_cast<unsigned long long>(cm.fp),
                      static_cast<unsigned long long>(cm.tn),
                      static_cast<unsigned long long>(cm.fn), cm.tp_rate(), cm.fp_rate(),
                      cm.tn_rate(), cm.fn_rate(), cm.accuracy());
        out << buf;
    }
    std::fprintf(stderr, "stats written to %s\n", a.outdir.c_str());
    return 0;
}

struct EmbedArgs {
    std::string input;
    std::string output;
    std::string meta_path;
    std::string normalization = "zscore";
    double epsilon = 0.0;
    unsigned t = 1;
    std::size_t m = 3;
    std::size_t cap = 1500;
    bool use_ttl = false;
};

int cmd_embed(const EmbedArgs& a) {
    CaptureMeta meta;
    const std::vector<PacketRecord> records = load_input(a.input, meta);
    const Normalization norm = normalization_from(a.normalization);

    const std::vector<std::size_t> idx = stride_indices(records.size(), a.cap);
    std::vector<PacketRecord> subset;
    subset.reserve(idx.size());
    for (const std::size_t i : idx) subset.push_back(records[i]);

    const FeatureBuild features = build_features(subset, norm, a.use_ttl);
    const double epsilon =
        a.epsilon > 0.0 ? a.epsilon : choose_epsilon(features.points);
    const Matrix w = kernel_matrix(features.points, epsilon, a.cap);
    const SpectralDecomposition dec = spectral_decompose(w);
    const Matrix coords = diffusion_embed(dec, a.t, a.m);

    std::vector<Label> labels;
    labels.reserve(subset.size());
    for (const PacketRecord& r : subset) labels.push_back(r.label);
    {
        auto out = open_out(a.output);
        write_embedding_csv(out, coords, idx, labels);
    }
    if (!a.meta_path.empty()) {
        EmbeddingMeta emeta;
        emeta.epsilon = epsilon;
        emeta.t = a.t;
        emeta.m = a.m;
        emeta.normalization = norm;
        emeta.input_records = records.size();
        emeta.embedded_points = subset.size();
        emeta.stride = idx.size() > 1 ? idx[1] - idx[0] : 1;
        emeta.eigenvalues = dec.eigenvalues;
        emeta.simd_lane = simd::lane_name(simd::active_lane());
        auto out = open_out(a.meta_path);
        write_embedding_meta(out, emeta);
    }
    std::fprintf(stderr, "embedded %zu of %zu records (epsilon %.12g, lane %s)\n",
                 subset.size(), records.size(), epsilon,
                 simd::lane_name(simd::active_lane()));
    return 0;
}

struct ClusterArgs {
    std::string input;
    std::string output;
    std::string eval_path;
    std::string source = "features";
    std::string normalization = "zscore";
    std::size_t k = 2;
    std::uint64_t seed = 1;
    std::uint32_t restarts = 10;
    std::uint32_t max_iter = 300;
    double slice = 60.0;
    bool use_ttl = false;
    bool reply_as_attack = false;
};

int cmd_cluster(const ClusterArgs& a) {
    const ClusterSource source = source_from(a.source);
    const Normalization norm = normalization_from(a.normalization);

    PointSet points;
    std::vector<std::size_t> indices;
    std::vector<std::uint8_t> truth;
    switch (source) {
    case ClusterSource::features: {
        CaptureMeta meta;
        const std::vector<PacketRecord> records = load_input(a.input, meta);
        const FeatureBuild features = build_features(records, norm, a.use_ttl);
        points = features.points;
        indices.resize(records.size());
        std::iota(indices.begin(), indices.end(), 0);
        truth = binarize_labels(records, a.reply_as_attack);
        break;
    }
    case ClusterSource::embedding: {
        auto in = open_in(a.input);
        const EmbeddingFile file = parse_embedding_csv(in);
        points = to_point_set(file.coords);
        indices = file.record_indices;
        truth.reserve(file.labels.size());
        for (const Label l : file.labels)
            truth.push_back(l == Label::attack ||
                                    (a.reply_as_attack && l == Label::attack_reply)
                                ? 1
                                : 0);
        break;
    }
    case ClusterSource::flows: {
        CaptureMeta meta;
        const std::vector<PacketRecord> records = load_input(a.input, meta);
        const std::vector<FlowStats> flows = aggregate_flows(records, a.slice);
        points = flow_feature_points(flows, norm);
        indices.resize(flows.size());
        std::iota(indices.begin(), indices.end(), 0);
        truth.resize(flows.size());
        for (std::size_t i = 0; i < flows.size(); ++i)
            truth[i] = flows[i].label == FlowLabel::attack ? 1 : 0;
        break;
    }
    }

    KmeansSettings settings;
    settings.k = a.k;
    settings.seed = a.seed;
    settings.restarts = a.restarts;
    settings.max_iter = a.max_iter;
    settings.source = source;
    const ClusterEvaluation ev = cluster_and_evaluate(points, truth, settings);

    {
        auto out = open_out(a.output);
        write_assignment_csv(out, indices, ev.assignments, ev.predicted, truth);
    }
    if (!a.eval_path.empty()) {
        auto out = open_out(a.eval_path);
        out << evaluation_json_string(ev, source, settings, truth.size());
    }
    std::fprintf(stderr, "clustered %zu points (accuracy %.4f%s)\n", truth.size(),
                 ev.confusion.accuracy(), ev.degenerate_truth ? ", degenerate truth" : "");
    return 0;
}

struct EvaluateArgs {
    std::string input;
    std::string output;
};

int cmd_evaluate(const EvaluateArgs& a) {
    auto in = open_in(a.input);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(1, "empty assignment file");
    std::size_t lineno = 1;
    std::vector<std::uint8_t> predicted, truth;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4) throw ParseError(lineno, "expected 4 comma-separated fields");
        const auto bit = [&](const std::string& s, const char* what) -> std::uint8_t {
            if (s == "0") return 0;
            if (s == "1") return 1;
            throw ParseError(lineno, std::string(what) + " must be 0 or 1");
        };
        predicted.push_back(bit(fields[2], "predicted"));
        truth.push_back(bit(fields[3], "truth"));
    }
    const ConfusionMatrix cm = evaluate(predicted, truth);
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\n  \"evaluated_points\": %zu,\n"
                  "  \"counts\": {\"tp\": %llu, \"fp\": %llu, \"tn\": %llu, \"fn\": %llu},\n"
                  "  \"rates\": {\"tp\": %.12g, \"fp\": %.12g, \"tn\": %.12g, \"fn\": %.12g},\n"
                  "  \"accuracy\": %.12g\n}\n",
                  truth.size(), static_cast<unsigned long long>(cm.tp),
                  static_cast<unsigned long long>(cm.fp),
                  static_cast<unsigned long long>(cm.tn),
                  static_cast<unsigned long long>(cm.fn), cm.tp_rate(), cm.fp_rate(),
                  cm.tn_rate(), cm.fn_rate(), cm.accuracy());
    if (a.output.empty()) {
        std::cout << buf;
    } else {
        auto out = open_out(a.output);
        out << buf;
    }
    return 0;
}

struct SynthArgs {
    std::string out_records;
    std::string out_schedule;
    SynthSpec spec;
};

int cmd_synth(const SynthArgs& a) {
    const SynthResult result = synthesize(a.spec);
    {
        auto out = open_out(a.out_records);
        write_header_tsv(out, result.records);
    }
    {
        auto out = open_out(a.out_schedule);
        write_schedule_csv(out, result.events);
    }
    std::fprintf(stderr, "synthesized %zu records, %zu attack events\n",
                 result.records.size(), result.events.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IP-header traffic analysis: flow statistics, diffusion-map "
                 "embedding and k-means attack detection from pcap or TSV captures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Convert a capture to header TSV");
    ingest->add_option("input", ingest_args.input, "pcap or TSV capture")->required();
    ingest->add_option("-o,--output", ingest_args.output, "output TSV path")->required();
    ingest->add_option("--meta", ingest_args.meta_path, "also write capture metadata JSON");

    LabelArgs label_args;
    auto* label = app.add_subcommand("label", "Apply an attack schedule to a capture");
    label->add_option("-i,--input", label_args.input, "pcap or TSV capture")->required();
    label->add_option("-s,--schedule", label_args.schedule, "attack schedule CSV")->required();
    label->add_option("-o,--output", label_args.output, "output TSV path")->required();
    label->add_option("--slack", label_args.slack, "window slack in seconds");

    FlowArgs flow_args;
    auto* flows = app.add_subcommand("flows", "Aggregate packets into per-slice flows");
    flows->add_option("-i,--input", flow_args.input, "pcap or TSV capture")->required();
    flows->add_option("-o,--output", flow_args.output, "output CSV path")->required();
    flows->add_option("--slice", flow_args.slice, "slice duration in seconds");
    auto* epoch_opt =
        flows->add_option("--epoch0", flow_args.epoch0, "slice epoch (default: first ts)");
    flows->add_flag("--merge", flow_args.merge, "merge opposite directions");

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Write flow statistics artifacts");
    stats->add_option("-i,--input", stats_args.input, "pcap or TSV capture")->required();
    stats->add_option("-d,--outdir", stats_args.outdir, "output directory")->required();
    stats->add_option("--slice", stats_args.slice, "slice duration in seconds");
    stats->add_option("--bin-width", stats_args.bin_width, "stddev histogram bin width");
    stats->add_option("--threshold", stats_args.threshold, "stddev detector threshold");
    stats->add_option("--min-count", stats_args.min_count, "minimum packets per flow");
    stats->add_option("--coi-z", stats_args.coi_z, "community bin size in seconds");
    stats->add_option("--coi-y", stats_args.coi_y, "community period in seconds (0: span)");
    stats->add_option("--coi-threshold", stats_args.coi_threshold, "membership threshold");
    stats->add_flag("--no-svg", stats_args.no_svg, "skip SVG charts");

    EmbedArgs embed_args;
    auto* embed = app.add_subcommand("embed", "Diffusion-map embedding of packet features");
    embed->add_option("-i,--input", embed_args.input, "pcap or TSV capture")->required();
    embed->add_option("-o,--output", embed_args.output, "embedding CSV path")->required();
    embed->add_option("--meta", embed_args.meta_path, "also write embedding metadata JSON");
    embed->add_option("--normalization", embed_args.normalization, "none|zscore|minmax");
    embed->add_option("--epsilon", embed_args.epsilon, "kernel bandwidth (0: median heuristic)");
    embed->add_option("-t,--steps", embed_args.t, "diffusion time");
    embed->add_option("-m,--coords", embed_args.m, "embedding dimensions");
    embed->add_option("--cap", embed_args.cap, "max points (larger inputs are subsampled)");
    embed->add_flag("--use-ttl", embed_args.use_ttl, "include TTL as a feature");

    ClusterArgs cluster_args;
    auto* cluster = app.add_subcommand("cluster", "k-means clustering and evaluation");
    cluster->add_option("-i,--input", cluster_args.input,
                        "capture (features/flows) or embedding CSV (embedding)")
        ->required();
    cluster->add_option("-o,--output", cluster_args.output, "assignment CSV path")->required();
    cluster->add_option("--eval", cluster_args.eval_path, "also write evaluation JSON");
    cluster->add_option("--source", cluster_args.source, "features|embedding|flows");
    cluster->add_option("--normalization", cluster_args.normalization, "none|zscore|minmax");
    cluster->add_option("--k", cluster_args.k, "cluster count");
    cluster->add_option("--seed", cluster_args.seed, "base seed");
    cluster->add_option("--restarts", cluster_args.restarts, "restart count");
    cluster->add_option("--max-iter", cluster_args.max_iter, "iteration cap");
    cluster->add_option("--slice", cluster_args.slice, "slice duration (flows source)");
    cluster->add_flag("--use-ttl", cluster_args.use_ttl, "include TTL (features source)");
    cluster->add_flag("--reply-as-attack", cluster_args.reply_as_attack,
                      "count reverse-direction attack packets as attacks");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix from an assignment CSV");
    evaluate->add_option("-i,--input", eval_args.input, "assignment CSV")->required();
    evaluate->add_option("-o,--output", eval_args.output, "evaluation JSON (default: stdout)");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled capture");
    synth->add_option("--out-records", synth_args.out_records, "output TSV path")->required();
    synth->add_option("--out-schedule", synth_args.out_schedule, "output schedule CSV path")
        ->required();
    synth->add_option("--normal", synth_args.spec.normal_flows, "normal flow count");
    synth->add_option("--attack", synth_args.spec.attack_flows, "attack flow count");
    synth->add_option("--dos", synth_args.spec.dos_flows, "denial-of-service flow count");
    synth->add_option("--len-min", synth_args.spec.normal_len_min, "normal length minimum");
    synth->add_option("--len-max", synth_args.spec.normal_len_max, "normal length maximum");
    synth->add_option("--jitter", synth_args.spec.attack_len_jitter, "attack length jitter");
    synth->add_option("--seed", synth_args.spec.seed, "generator seed");
    synth->add_option("--start", synth_args.spec.start_ts, "capture start timestamp");
    synth->add_option("--duration", synth_args.spec.duration, "capture duration in seconds");

    // `run` starts from the config file (or defaults) and lets flags override
    // individual fields.
    std::string run_input, run_schedule, run_outdir, run_config;
    PipelineConfig run_over;
    std::string run_norm = "zscore", run_source = "features";
    auto* run = app.add_subcommand("run", "Full pipeline into an output directory");
    run->add_option("-i,--input", run_input, "pcap or TSV capture")->required();
    run->add_option("-s,--schedule", run_schedule, "attack schedule CSV");
    run->add_option("-d,--outdir", run_outdir, "output directory")->required();
    run->add_option("-c,--config", run_config, "JSON config file");
    run->add_option("--slice", run_over.slice_duration, "slice duration in seconds");
    run->add_option("--slack", run_over.label_slack, "label window slack in seconds");
    run->add_option("--threshold", run_over.stddev_threshold, "stddev detector threshold");
    run->add_option("--min-count", run_over.min_count, "minimum packets per flow");
    run->add_option("--bin-width", run_over.hist_bin_width, "stddev histogram bin width");
    run->add_flag("--use-ttl", run_over.use_ttl, "include TTL as a feature");
    run->add_flag("--reply-as-attack", run_over.reply_as_attack,
                  "count reverse-direction attack packets as attacks");
    bool run_no_svg = false;
    run->add_flag("--no-svg", run_no_svg, "skip SVG charts");
    run->add_option("--coi-z", run_over.coi.bin_size_z, "community bin size in seconds");
    run->add_option("--coi-y", run_over.coi.period_y, "community period in seconds (0: span)");
    run->add_option("--coi-threshold", run_over.coi.threshold, "membership threshold");
    run->add_option("--epsilon", run_over.kernel.epsilon,
                    "kernel bandwidth (0: median heuristic)");
    run->add_option("--t", run_over.kernel.t, "diffusion time");
    run->add_option("--m", run_over.kernel.m, "embedding dimensions");
    run->add_option("--normalization", run_norm, "none|zscore|minmax");
    run->add_option("--cap", run_over.kernel.cap, "embedding point cap");
    run->add_option("--k", run_over.kmeans.k, "cluster count");
    run->add_option("--seed", run_over.kmeans.seed, "base k-means seed");
    run->add_option("--restarts", run_over.kmeans.restarts, "k-means restarts");
    run->add_option("--max-iter", run_over.kmeans.max_iter, "k-means iteration cap");
    run->add_option("--source", run_source, "clustering input: features|embedding|flows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_args);
        if (label->parsed()) return cmd_label(label_args);
        if (flows->parsed()) {
            flow_args.epoch0_set = epoch_opt->count() > 0;
            return cmd_flows(flow_args);
        }
        if (stats->parsed()) return cmd_stats(stats_args);
        if (embed->parsed()) return cmd_embed(embed_args);
        if (cluster->parsed()) return cmd_cluster(cluster_args);
        if (evaluate->parsed()) return cmd_evaluate(eval_args);
        if (synth->parsed()) return cmd_synth(synth_args);
        if (run->parsed()) {
            PipelineConfig cfg;
            if (!run_config.empty()) {
                auto in = open_in(run_config);
                cfg = load_config_json(in);
            }
            const auto took = [&](const std::string& flag) { return run->count(flag) > 0; };
            if (took("--slice")) cfg.slice_duration = run_over.slice_duration;
            if (took("--slack")) cfg.label_slack = run_over.label_slack;
            if (took("--threshold")) cfg.stddev_threshold = run_over.stddev_threshold;
            if (took("--min-count")) cfg.min_count = run_over.min_count;
            if (took("--bin-width")) cfg.hist_bin_width = run_over.hist_bin_width;
            if (took("--use-ttl")) cfg.use_ttl = run_over.use_ttl;
            if (took("--reply-as-attack")) cfg.reply_as_attack = run_over.reply_as_attack;
            if (took("--no-svg")) cfg.write_svg = false;
            if (took("--coi-z")) cfg.coi.bin_size_z = run_over.coi.bin_size_z;
            if (took("--coi-y")) cfg.coi.period_y = run_over.coi.period_y;
            if (took("--coi-threshold")) cfg.coi.threshold = run_over.coi.threshold;
            if (took("--epsilon")) cfg.kernel.epsilon = run_over.kernel.epsilon;
            if (took("--t")) cfg.kernel.t = run_over.kernel.t;
            if (took("--m")) cfg.kernel.m = run_over.kernel.m;
            if (took("--normalization")) cfg.kernel.normalization = normalization_from(run_norm);
            if (took("--cap")) cfg.kernel.cap = run_over.kernel.cap;
            if (took("--k")) cfg.kmeans.k = run_over.kmeans.k;
            if (took("--seed")) cfg.kmeans.seed = run_over.kmeans.seed;
            if (took("--restarts")) cfg.kmeans.restarts = run_over.kmeans.restarts;
            if (took("--max-iter")) cfg.kmeans.max_iter = run_over.kmeans.max_iter;
            if (took("--source")) cfg.kmeans.source = source_from(run_source);
            validate_config(cfg);

            std::optional<std::string> schedule;
            if (!run_schedule.empty()) schedule = run_schedule;
            const PipelineOutcome outcome = run_pipeline(cfg, run_input, schedule, run_outdir);
            std::fprintf(stderr,
                         "%llu records -> %zu flows, %zu embedded points, accuracy %.4f "
                         "(%zu artifacts in %s)\n",
                         static_cast<unsigned long long>(outcome.capture.record_count),
                         outcome.flow_count, outcome.embedded_points,
                         outcome.confusion.accuracy(), outcome.outputs.size(),
                         run_outdir.c_str());
            return 0;
        }
    } catch (const csight::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
