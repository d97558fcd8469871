#include "csight/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "csight/error.hpp"

namespace csight {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad_field(const std::string& where, const std::string& what) {
    throw DataError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key()))
            bad_field(where, "unknown key \"" + item.key() + "\"");
    }
}

double get_number(const json& obj, const std::string& where, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) bad_field(where, key + " must be a number");
    return v.get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& where, const std::string& key,
                       std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) bad_field(where, key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& where, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) bad_field(where, key + " must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) bad_field(where, key + " must be a string");
    return v.get<std::string>();
}

} // namespace

const char* cluster_source_name(ClusterSource s) {
    switch (s) {
    case ClusterSource::features: return "features";
    case ClusterSource::embedding: return "embedding";
    case ClusterSource::flows: return "flows";
    }
    return "?";
}

std::optional<ClusterSource> parse_cluster_source(const std::string& name) {
    if (name == "features") return ClusterSource::features;
    if (name == "embedding") return ClusterSource::embedding;
    if (name == "flows") return ClusterSource::flows;
    return std::nullopt;
}

PipelineConfig load_config_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("config: top level must be an object");

    PipelineConfig cfg;
    check_keys(doc, "top level",
               {"slice_duration", "label_slack", "stddev_threshold", "min_count",
                "hist_bin_width", "use_ttl", "reply_as_attack", "write_svg",
                "coi", "kernel", "kmeans"});

    cfg.slice_duration = get_number(doc, "top level", "slice_duration", cfg.slice_duration);
    cfg.label_slack = get_number(doc, "top level", "label_slack", cfg.label_slack);
    cfg.stddev_threshold = get_number(doc, "top level", "stddev_threshold", cfg.stddev_threshold);
    cfg.min_count = get_uint(doc, "top level", "min_count", cfg.min_count);
    cfg.hist_bin_width = get_number(doc, "top level", "hist_bin_width", cfg.hist_bin_width);
    cfg.use_ttl = get_bool(doc, "top level", "use_ttl", cfg.use_ttl);
    cfg.reply_as_attack = get_bool(doc, "top level", "reply_as_attack", cfg.reply_as_attack);
    cfg.write_svg = get_bool(doc, "top level", "write_svg", cfg.write_svg);

    if (doc.contains("coi")) {
        const json& c = doc.at("coi");
        if (!c.is_object()) bad_field("coi", "must be an object");
        check_keys(c, "coi", {"bin_size_z", "period_y", "threshold"});
        cfg.coi.bin_size_z = get_number(c, "coi", "bin_size_z", cfg.coi.bin_size_z);
        cfg.coi.period_y = get_number(c, "coi", "period_y", cfg.coi.period_y);
        cfg.coi.threshold = get_number(c, "coi", "threshold", cfg.coi.threshold);
    }
    if (doc.contains("kernel")) {
        const json& c = doc.at("kernel");
        if (!c.is_object()) bad_field("kernel", "must be an object");
        check_keys(c, "kernel", {"epsilon", "t", "m", "normalization", "cap"});
        cfg.kernel.epsilon = get_number(c, "kernel", "epsilon", cfg.kernel.epsilon);
        cfg.kernel.t = static_cast<unsigned>(get_uint(c, "kernel", "t", cfg.kernel.t));
        cfg.kernel.m = get_uint(c, "kernel", "m", cfg.kernel.m);
        cfg.kernel.cap = get_uint(c, "kernel", "cap", cfg.kernel.cap);
        const std::string norm =
            get_string(c, "kernel", "normalization", normalization_name(cfg.kernel.normalization));
        const auto parsed = parse_normalization(norm);
        if (!parsed) bad_field("kernel", "unknown normalization \"" + norm + "\"");
        cfg.kernel.normalization = *parsed;
    }
    if (doc.contains("kmeans")) {
        const json& c = doc.at("kmeans");
        if (!c.is_object()) bad_field("kmeans", "must be an object");
        check_keys(c, "kmeans", {"k", "seed", "restarts", "max_iter", "source"});
        cfg.kmeans.k = get_uint(c, "kmeans", "k", cfg.kmeans.k);
        cfg.kmeans.seed = get_uint(c, "kmeans", "seed", cfg.kmeans.seed);
        cfg.kmeans.restarts = static_cast<std::uint32_t>(
            get_uint(c, "kmeans", "restarts", cfg.kmeans.restarts));
        cfg.kmeans.max_iter = static_cast<std::uint32_t>(
            get_uint(c, "kmeans", "max_iter", cfg.kmeans.max_iter));
        const std::string src =
            get_string(c, "kmeans", "source", cluster_source_name(cfg.kmeans.source));
        const auto parsed = parse_cluster_source(src);
        if (!parsed) bad_field("kmeans", "unknown source \"" + src + "\"");
        cfg.kmeans.source = *parsed;
    }

    validate_config(cfg);
    return cfg;
}

void validate_config(const PipelineConfig& cfg) {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(cfg.slice_duration)) throw DataError("config: slice_duration must be positive");
    if (!std::isfinite(cfg.label_slack) || cfg.label_slack < 0.0)
        throw DataError("config: label_slack must be non-negative");
    if (!std::isfinite(cfg.stddev_threshold) || cfg.stddev_threshold < 0.0)
        throw DataError("config: stddev_threshold must be non-negative");
    if (cfg.min_count == 0) throw DataError("config: min_count must be at least 1");
    if (!positive(cfg.hist_bin_width)) throw DataError("config: hist_bin_width must be positive");
    if (!positive(cfg.coi.bin_size_z)) throw DataError("config: coi.bin_size_z must be positive");
    if (!std::isfinite(cfg.coi.period_y) || cfg.coi.period_y < 0.0)
        throw DataError("config: coi.period_y must be non-negative");
    if (!std::isfinite(cfg.coi.threshold) || cfg.coi.threshold < 0.0 || cfg.coi.threshold > 1.0)
        throw DataError("config: coi.threshold must be in [0, 1]");
    if (!std::isfinite(cfg.kernel.epsilon) || cfg.kernel.epsilon < 0.0)
        throw DataError("config: kernel.epsilon must be non-negative");
    if (cfg.kernel.t == 0) throw DataError("config: kernel.t must be at least 1");
    if (cfg.kernel.m == 0) throw DataError("config: kernel.m must be at least 1");
    if (cfg.kernel.cap < 2) throw DataError("config: kernel.cap must be at least 2");
    if (cfg.kmeans.k == 0) throw DataError("config: kmeans.k must be at least 1");
    if (cfg.kmeans.restarts == 0) throw DataError("config: kmeans.restarts must be at least 1");
    if (cfg.kmeans.max_iter == 0) throw DataError("config: kmeans.max_iter must be at least 1");
}

std::string config_json_string(const PipelineConfig& cfg) {
    json doc;
    doc["slice_duration"] = cfg.slice_duration;
    doc["label_slack"] = cfg.label_slack;
    doc["stddev_threshold"] = cfg.stddev_threshold;
    doc["min_count"] = cfg.min_count;
    doc["hist_bin_width"] = cfg.hist_bin_width;
    doc["use_ttl"] = cfg.use_ttl;
    doc["reply_as_attack"] = cfg.reply_as_attack;
    doc["write_svg"] = cfg.write_svg;
    doc["coi"] = {{"bin_size_z", cfg.coi.bin_size_z},
                  {"period_y", cfg.coi.period_y},
                  {"threshold", cfg.coi.threshold}};
    doc["kernel"] = {{"epsilon", cfg.kernel.epsilon},
                     {"t", cfg.kernel.t},
                     {"m", cfg.kernel.m},
                     {"normalization", normalization_name(cfg.kernel.normalization)},
                     {"cap", cfg.kernel.cap}};
    doc["kmeans"] = {{"k", cfg.kmeans.k},
                     {"seed", cfg.kmeans.seed},
                     {"restarts", cfg.kmeans.restarts},
                     {"max_iter", cfg.kmeans.max_iter},
                     {"source", cluster_source_name(cfg.kmeans.source)}};
    return doc.dump(2) + "\n";
}

} // namespace csight
