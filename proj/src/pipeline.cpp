#include "csight/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "csight/digest.hpp"
#include "csight/error.hpp"
#include "csight/pcap.hpp"
#include "csight/schedule.hpp"
#include "csight/stats.hpp"
#include "csight/tsv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace csight {
namespace {

bool looks_like_pcap(std::istream& in) {
    unsigned char head[4];
    in.read(reinterpret_cast<char*>(head), 4);
    const bool got4 = in.gcount() == 4;
    in.clear();
    in.seekg(0);
    if (!got4) return false;
    const bool native = head[0] == 0xa1 && head[1] == 0xb2 && head[2] == 0xc3 && head[3] == 0xd4;
    const bool swapped = head[0] == 0xd4 && head[1] == 0xc3 && head[2] == 0xb2 && head[3] == 0xa1;
    return native || swapped;
}

// Writes one artifact and remembers its path so a failed run can clean up
// after itself.
class Artifacts {
public:
    explicit Artifacts(const std::string& dir) : dir_(dir) {}

    void write(const std::string& name, const std::function<void(std::ostream&)>& body,
               std::vector<std::string>& outputs) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot open " + path.string() + " for writing");
        created_.push_back(path);
        body(out);
        out.flush();
        if (!out) throw DataError("write failed: " + path.string());
        outputs.push_back(name);
    }

    void discard_all() {
        std::error_code ec;
        for (const fs::path& p : created_) fs::remove(p, ec);
    }

private:
    fs::path dir_;
    std::vector<fs::path> created_;
};

std::string iso_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json confusion_json(const ConfusionMatrix& cm) {
    json doc;
    doc["counts"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn},
                     {"total", cm.total()}};
    doc["rates"] = {{"tp", cm.tp_rate()}, {"fp", cm.fp_rate()},
                    {"tn", cm.tn_rate()}, {"fn", cm.fn_rate()}};
    doc["accuracy"] = cm.accuracy();
    return doc;
}

void normalize_dims(PointSet& points, Normalization normalization) {
    if (normalization == Normalization::none) return;
    const std::size_t n = points.size();
    for (std::size_t d = 0; d < points.dims(); ++d) {
        double* x = points.dim(d);
        double offset = 0.0, scale = 0.0;
        if (normalization == Normalization::minmax) {
            double lo = x[0], hi = x[0];
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, x[i]);
                hi = std::max(hi, x[i]);
            }
            offset = lo;
            scale = hi == lo ? 0.0 : 1.0 / (hi - lo);
        } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += x[i];
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
            var /= static_cast<double>(n);
            const double stddev = std::sqrt(var);
            offset = mean;
            scale = stddev == 0.0 ? 0.0 : 1.0 / stddev;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - offset) * scale;
    }
}

} // namespace

std::vector<PacketRecord> load_records(const std::string& path, CaptureMeta& meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<PacketRecord> records;
    if (looks_like_pcap(in)) {
        parse_pcap_stream(in, [&](const PacketRecord& r) { records.push_back(r); }, meta);
    } else {
        records = parse_header_tsv(in);
        meta = meta_of(records);
    }
    return records;
}

PointSet flow_feature_points(const std::vector<FlowStats>& flows, Normalization normalization) {
    if (flows.size() < 2) throw DataError("flow clustering needs at least two flows");
    PointSet pts(flows.size(), 6);
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const FlowStats& f = flows[i];
        pts.at(i, 0) = f.first_ts;
        pts.at(i, 1) = static_cast<double>(f.src);
        pts.at(i, 2) = static_cast<double>(f.dst);
        pts.at(i, 3) = f.mean_len;
        pts.at(i, 4) = f.stddev_len;
        pts.at(i, 5) = static_cast<double>(f.count);
    }
    normalize_dims(pts, normalization);
    return pts;
}

ClusterEvaluation cluster_and_evaluate(const PointSet& points,
                                       const std::vector<std::uint8_t>& truth,
                                       const KmeansSettings& settings) {
    if (points.size() != truth.size())
        throw DataError("clustering: points and truth bits disagree in length");

    ClusterEvaluation ev;
    ev.assignments.assign(truth.size(), 0);
    ev.predicted.assign(truth.size(), 0);

    const std::uint64_t attack_total =
        std::accumulate(truth.begin(), truth.end(), std::uint64_t{0});
    ev.degenerate_truth = truth.empty() || attack_total == 0 || attack_total == truth.size();

    if (ev.degenerate_truth) {
        const std::uint8_t the_class = attack_total == 0 ? 0 : 1;
        std::fill(ev.predicted.begin(), ev.predicted.end(), the_class);
        ev.result.seed = settings.seed;
    } else {
        if (settings.k != 2) throw DataError("evaluation requires k = 2");
        ev.result = kmeans_best(points, settings.k, settings.seed, settings.restarts,
                                settings.max_iter);
        ev.assignments = ev.result.assignments;
        ev.mapping = map_clusters_to_classes(ev.assignments, truth);
        for (std::size_t i = 0; i < ev.assignments.size(); ++i)
            ev.predicted[i] = ev.mapping[ev.assignments[i]] == TrafficClass::attack ? 1 : 0;
    }
    ev.confusion = evaluate(ev.predicted, truth);
    return ev;
}

std::string evaluation_json_string(const ClusterEvaluation& ev, ClusterSource source,
                                   const KmeansSettings& settings,
                                   std::size_t evaluated_points) {
    json doc;
    doc["source"] = cluster_source_name(source);
    doc["evaluated_points"] = evaluated_points;
    doc["k"] = settings.k;
    doc["restarts"] = settings.restarts;
    doc["degenerate_truth"] = ev.degenerate_truth;
    if (ev.degenerate_truth) {
        doc["note"] = "truth has a single class; clustering skipped and that class "
                      "predicted for every point";
        doc["cluster_classes"] = nullptr;
    } else {
        doc["winning_seed"] = ev.result.seed;
        doc["iterations"] = ev.result.iterations;
        doc["inertia"] = ev.result.inertia;
        doc["cluster_classes"] = {traffic_class_name(ev.mapping[0]),
                                  traffic_class_name(ev.mapping[1])};
    }
    doc.update(confusion_json(ev.confusion));
    return doc.dump(2) + "\n";
}

PipelineOutcome run_pipeline(const PipelineConfig& cfg, const std::string& input_path,
                             const std::optional<std::string>& schedule_path,
                             const std::string& outdir) {
    validate_config(cfg);

    fs::create_directories(outdir);
    Artifacts artifacts(outdir);
    PipelineOutcome outcome;

    try {
        std::vector<PacketRecord> records = load_records(input_path, outcome.capture);

        std::vector<AttackEvent> events;
        if (schedule_path) {
            std::ifstream sched(*schedule_path);
            if (!sched) throw DataError("cannot open " + *schedule_path);
            events = parse_attack_schedule(sched);
        }
        label_packets(records, events, cfg.label_slack);

        artifacts.write("labeled.tsv",
                        [&](std::ostream& out) { write_header_tsv(out, records); },
                        outcome.outputs);
        artifacts.write("capture_meta.json",
                        [&](std::ostream& out) {
                            json doc;
                            doc["records"] = outcome.capture.record_count;
                            doc["skipped_frames"] = outcome.capture.skipped_frames;
                            doc["first_ts"] = outcome.capture.first_ts;
                            doc["last_ts"] = outcome.capture.last_ts;
                            out << doc.dump(2) << "\n";
                        },
                        outcome.outputs);

        const std::vector<FlowStats> flows = aggregate_flows(records, cfg.slice_duration);
        const std::vector<FlowStats> merged = flow_direction_merge(flows);
        outcome.flow_count = flows.size();
        outcome.merged_flow_count = merged.size();
        artifacts.write("flows.csv",
                        [&](std::ostream& out) { write_flow_csv(out, flows); },
                        outcome.outputs);
        artifacts.write("flows_merged.csv",
                        [&](std::ostream& out) { write_flow_csv(out, merged); },
                        outcome.outputs);

        const HistogramPair stddev_hist =
            stddev_histogram(flows, cfg.hist_bin_width, cfg.min_count);
        const HistogramPair packet_hist = packets_per_flow_distribution(flows);
        artifacts.write("hist_stddev.csv",
                        [&](std::ostream& out) { write_histogram_csv(out, stddev_hist); },
                        outcome.outputs);
        artifacts.write("hist_packets_per_flow.csv",
                        [&](std::ostream& out) { write_histogram_csv(out, packet_hist); },
                        outcome.outputs);
        if (cfg.write_svg) {
            artifacts.write("hist_stddev.svg",
                            [&](std::ostream& out) {
                                out << histogram_svg(stddev_hist,
                                                     "Packet length spread per flow",
                                                     "length standard deviation (bytes)");
                            },
                            outcome.outputs);
            artifacts.write("hist_packets_per_flow.svg",
                            [&](std::ostream& out) {
                                out << histogram_svg(packet_hist, "Packets per flow",
                                                     "packets (power-of-two bins)");
                            },
                            outcome.outputs);
        }
        artifacts.write("flow_occurrence.csv",
                        [&](std::ostream& out) {
                            write_occurrence_csv(out, flow_occurrence_frequency(flows));
                        },
                        outcome.outputs);

        CoiConfig coi_cfg;
        coi_cfg.bin_size_z = cfg.coi.bin_size_z;
        coi_cfg.period_y = cfg.coi.period_y;
        coi_cfg.threshold = cfg.coi.threshold;
        const CoiResult coi = coi_scores(records, coi_cfg);
        artifacts.write("coi.csv",
                        [&](std::ostream& out) { write_coi_csv(out, coi); },
                        outcome.outputs);

        {
            std::vector<std::uint8_t> flow_truth(flows.size());
            std::vector<std::uint8_t> flow_pred(flows.size());
            for (std::size_t i = 0; i < flows.size(); ++i) {
                flow_truth[i] = flows[i].label == FlowLabel::attack ? 1 : 0;
                flow_pred[i] = classify_by_stddev(flows[i], cfg.stddev_threshold,
                                                  cfg.min_count) == FlowLabel::attack
                                   ? 1
                                   : 0;
            }
            const ConfusionMatrix cm = evaluate(flow_pred, flow_truth);
            artifacts.write("stddev_detector.json",
                            [&](std::ostream& out) {
                                json doc;
                                doc["threshold"] = cfg.stddev_threshold;
                                doc["min_count"] = cfg.min_count;
                                doc["flows"] = flows.size();
                                doc.update(confusion_json(cm));
                                out << doc.dump(2) << "\n";
                            },
                            outcome.outputs);
        }

        // Embedding over a deterministic subsample when the capture exceeds
        // the kernel cap.
        const std::vector<std::size_t> embed_idx =
            stride_indices(records.size(), cfg.kernel.cap);
        std::vector<PacketRecord> embed_records;
        embed_records.reserve(embed_idx.size());
        for (const std::size_t i : embed_idx) embed_records.push_back(records[i]);
        outcome.embedded_points = embed_records.size();

        const FeatureBuild features =
            build_features(embed_records, cfg.kernel.normalization, cfg.use_ttl);
        const double epsilon = cfg.kernel.epsilon > 0.0 ? cfg.kernel.epsilon
                                                        : choose_epsilon(features.points);
        const Matrix w = kernel_matrix(features.points, epsilon, cfg.kernel.cap);
        const SpectralDecomposition dec = spectral_decompose(w);
        const Matrix coords = diffusion_embed(dec, cfg.kernel.t, cfg.kernel.m);

        std::vector<Label> embed_labels;
        embed_labels.reserve(embed_records.size());
        for (const PacketRecord& r : embed_records) embed_labels.push_back(r.label);
        artifacts.write("embedding.csv",
                        [&](std::ostream& out) {
                            write_embedding_csv(out, coords, embed_idx, embed_labels);
                        },
                        outcome.outputs);

        EmbeddingMeta emeta;
        emeta.epsilon = epsilon;
        emeta.t = cfg.kernel.t;
        emeta.m = cfg.kernel.m;
        emeta.normalization = cfg.kernel.normalization;
        emeta.input_records = records.size();
        emeta.embedded_points = embed_records.size();
        emeta.stride = embed_idx.size() > 1 ? embed_idx[1] - embed_idx[0] : 1;
        emeta.eigenvalues = dec.eigenvalues;
        emeta.simd_lane = simd::lane_name(simd::active_lane());
        artifacts.write("embedding_meta.json",
                        [&](std::ostream& out) { write_embedding_meta(out, emeta); },
                        outcome.outputs);

        // Clustering input per source: every packet in feature space, the
        // embedded subsample in diffusion space, or one point per flow.
        PointSet cluster_points;
        std::vector<std::size_t> cluster_indices;
        std::vector<std::uint8_t> truth;
        switch (cfg.kmeans.source) {
        case ClusterSource::features: {
            const FeatureBuild all =
                build_features(records, cfg.kernel.normalization, cfg.use_ttl);
            cluster_points = all.points;
            cluster_indices.resize(records.size());
            std::iota(cluster_indices.begin(), cluster_indices.end(), 0);
            truth = binarize_labels(records, cfg.reply_as_attack);
            break;
        }
        case ClusterSource::embedding: {
            cluster_points = to_point_set(coords);
            cluster_indices = embed_idx;
            truth = binarize_labels(embed_records, cfg.reply_as_attack);
            break;
        }
        case ClusterSource::flows: {
            cluster_points = flow_feature_points(flows, cfg.kernel.normalization);
            cluster_indices.resize(flows.size());
            std::iota(cluster_indices.begin(), cluster_indices.end(), 0);
            truth.resize(flows.size());
            for (std::size_t i = 0; i < flows.size(); ++i)
                truth[i] = flows[i].label == FlowLabel::attack ? 1 : 0;
            break;
        }
        }

        const ClusterEvaluation ev = cluster_and_evaluate(cluster_points, truth, cfg.kmeans);
        outcome.degenerate_truth = ev.degenerate_truth;
        outcome.confusion = ev.confusion;
        outcome.winning_seed = ev.result.seed;

        artifacts.write("assignments.csv",
                        [&](std::ostream& out) {
                            write_assignment_csv(out, cluster_indices, ev.assignments,
                                                 ev.predicted, truth);
                        },
                        outcome.outputs);
        artifacts.write("evaluation.json",
                        [&](std::ostream& out) {
                            out << evaluation_json_string(ev, cfg.kmeans.source, cfg.kmeans,
                                                          truth.size());
                        },
                        outcome.outputs);

        json manifest;
        manifest["generated_at"] = iso_utc_now();
        manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
        manifest["command"] = "run";
        manifest["simd_lane"] = simd::lane_name(simd::active_lane());
        manifest["parameters"] = json::parse(config_json_string(cfg));
        json inputs = json::array();
        const auto input_entry = [](const std::string& path) {
            json e;
            e["path"] = path;
            std::error_code ec;
            const auto bytes = fs::file_size(path, ec);
            e["bytes"] = ec ? 0 : static_cast<std::uint64_t>(bytes);
            e["fnv1a64"] = file_digest_hex(path);
            return e;
        };
        inputs.push_back(input_entry(input_path));
        if (schedule_path) inputs.push_back(input_entry(*schedule_path));
        manifest["inputs"] = inputs;
        json results;
        results["records"] = outcome.capture.record_count;
        results["skipped_frames"] = outcome.capture.skipped_frames;
        results["flows"] = outcome.flow_count;
        results["merged_flows"] = outcome.merged_flow_count;
        results["embedded_points"] = outcome.embedded_points;
        results["epsilon"] = epsilon;
        results["degenerate_truth"] = outcome.degenerate_truth;
        results["winning_seed"] = outcome.winning_seed;
        results["accuracy"] = outcome.confusion.accuracy();
        manifest["results"] = results;
        std::vector<std::string> listed = outcome.outputs;
        listed.push_back("manifest.json");
        manifest["outputs"] = listed;
        artifacts.write("manifest.json",
                        [&](std::ostream& out) { out << manifest.dump(2) << "\n"; },
                        outcome.outputs);
    } catch (...) {
        artifacts.discard_all();
        throw;
    }
    return outcome;
}

} // namespace csight
