#include "turbmit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>

#include "turbmit/errors.hpp"
#include "turbmit/imgio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace turbmit::pipeline {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& scope) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(known.begin(), known.end(), [&](const char* k) {
                return key == k;
            }) == known.end())
            throw DataError("config: unknown key \"" + key + "\" in " + scope);
    }
}

json flow_to_json(const flow::FlowParams& p) {
    return json{{"pyramid_levels", p.pyramid_levels},
                {"iterations_per_level", p.iterations_per_level},
                {"window_radius", p.window_radius},
                {"smoothing_sigma", p.smoothing_sigma},
                {"max_displacement", p.max_displacement}};
}

flow::FlowParams flow_from_json(const json& j) {
    reject_unknown_keys(j, {"pyramid_levels", "iterations_per_level", "window_radius",
                            "smoothing_sigma", "max_displacement"}, "flow");
    flow::FlowParams p;
    p.pyramid_levels = j.value("pyramid_levels", p.pyramid_levels);
    p.iterations_per_level = j.value("iterations_per_level", p.iterations_per_level);
    p.window_radius = j.value("window_radius", p.window_radius);
    p.smoothing_sigma = j.value("smoothing_sigma", p.smoothing_sigma);
    p.max_displacement = j.value("max_displacement", p.max_displacement);
    return p;
}

json selection_to_json(const selection::SelectionParams& p) {
    return json{{"keep_fraction", p.keep_fraction}, {"min_keep", p.min_keep}};
}

selection::SelectionParams selection_from_json(const json& j) {
    reject_unknown_keys(j, {"keep_fraction", "min_keep"}, "selection");
    selection::SelectionParams p;
    p.keep_fraction = j.value("keep_fraction", p.keep_fraction);
    p.min_keep = j.value("min_keep", p.min_keep);
    return p;
}

json deblur_to_json(const deblur::DeblurParams& p) {
    json j{{"method", deblur::to_string(p.method)},
           {"nsr", p.nsr},
           {"rl_iterations", p.rl_iterations},
           {"psf_size", p.psf_size},
           {"psf_sigma_grid", p.psf_sigma_grid}};
    if (p.psf_sigma) j["psf_sigma"] = *p.psf_sigma;
    return j;
}

deblur::DeblurParams deblur_from_json(const json& j) {
    reject_unknown_keys(j, {"method", "nsr", "rl_iterations", "psf_size",
                            "psf_sigma_grid", "psf_sigma"}, "deblur");
    deblur::DeblurParams p;
    if (j.contains("method")) p.method = deblur::deblur_method_from_string(j["method"]);
    p.nsr = j.value("nsr", p.nsr);
    p.rl_iterations = j.value("rl_iterations", p.rl_iterations);
    p.psf_size = j.value("psf_size", p.psf_size);
    p.psf_sigma_grid = j.value("psf_sigma_grid", p.psf_sigma_grid);
    if (j.contains("psf_sigma") && !j["psf_sigma"].is_null())
        p.psf_sigma = j["psf_sigma"].get<double>();
    return p;
}

json postprocess_to_json(const postprocess::PostprocessParams& p) {
    return json{{"stretch_low_percentile", p.stretch_low_percentile},
                {"stretch_high_percentile", p.stretch_high_percentile},
                {"ringing_guide_blend", p.ringing_guide_blend},
                {"ringing_radius", p.ringing_radius},
                {"enable_stretch", p.enable_stretch},
                {"enable_ringing", p.enable_ringing}};
}

postprocess::PostprocessParams postprocess_from_json(const json& j) {
    reject_unknown_keys(j, {"stretch_low_percentile", "stretch_high_percentile",
                            "ringing_guide_blend", "ringing_radius", "enable_stretch",
                            "enable_ringing"}, "postprocess");
    postprocess::PostprocessParams p;
    p.stretch_low_percentile = j.value("stretch_low_percentile", p.stretch_low_percentile);
    p.stretch_high_percentile = j.value("stretch_high_percentile", p.stretch_high_percentile);
    p.ringing_guide_blend = j.value("ringing_guide_blend", p.ringing_guide_blend);
    p.ringing_radius = j.value("ringing_radius", p.ringing_radius);
    p.enable_stretch = j.value("enable_stretch", p.enable_stretch);
    p.enable_ringing = j.value("enable_ringing", p.enable_ringing);
    return p;
}

}  // namespace

json config_to_json(const PipelineConfig& config) {
    return json{{"refinement_passes", config.refinement_passes},
                {"flow", flow_to_json(config.flow)},
                {"selection", selection_to_json(config.selection)},
                {"deblur", deblur_to_json(config.deblur)},
                {"postprocess", postprocess_to_json(config.postprocess)}};
}

PipelineConfig config_from_json(const json& j) {
    reject_unknown_keys(j, {"refinement_passes", "flow", "selection", "deblur",
                            "postprocess"}, "config");
    PipelineConfig config;
    config.refinement_passes = j.value("refinement_passes", config.refinement_passes);
    if (j.contains("flow")) config.flow = flow_from_json(j["flow"]);
    if (j.contains("selection")) config.selection = selection_from_json(j["selection"]);
    if (j.contains("deblur")) config.deblur = deblur_from_json(j["deblur"]);
    if (j.contains("postprocess"))
        config.postprocess = postprocess_from_json(j["postprocess"]);
    return config;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return PipelineConfig{};
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const PipelineConfig& config, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path.string());
    out << config_to_json(config).dump(2) << '\n';
}

RestoreResult restore_sequence(const FrameSequence& seq, const PipelineConfig& config) {
    RestoreResult result;
    auto t0 = std::chrono::steady_clock::now();
    flow::RegistrationResult reg =
        flow::register_sequence(seq, config.flow, config.refinement_passes);
    result.reference = std::move(reg.reference);
    result.stage_seconds[0] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.fused = selection::select_and_average(reg.frames, config.selection);
    result.stage_seconds[1] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.deblurred = deblur::deblur(result.fused, config.deblur);
    result.stage_seconds[2] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.restored = postprocess::postprocess(result.deblurred, result.fused,
                                               config.postprocess);
    result.stage_seconds[3] = seconds_since(t0);
    return result;
}

GrayImage restore_from_fused(const GrayImage& fused, const PipelineConfig& config) {
    const GrayImage deblurred = deblur::deblur(fused, config.deblur);
    return postprocess::postprocess(deblurred, fused, config.postprocess);
}

EvalReport evaluate_dataset(const fs::path& root, const PipelineConfig& config) {
    if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());

    std::vector<fs::path> sequence_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            sequence_dirs.push_back(entry.path());
    std::sort(sequence_dirs.begin(), sequence_dirs.end());

    EvalReport report;
    for (const auto& dir : sequence_dirs) {
        SequenceReport sr;
        sr.id = dir.filename().string();
        try {
            std::ifstream meta_in(dir / "meta.json");
            if (!meta_in) throw IoError("cannot open meta.json in " + dir.string());
            const json meta = json::parse(meta_in);
            sr.strength = meta.value("strength", std::string("unknown"));

            if (!meta.contains("target"))
                throw DataError("meta.json lacks target geometry: " + dir.string());
            codec::CodedTarget geometry;
            geometry.rows = meta["target"].value("rows", geometry.rows);
            geometry.cols = meta["target"].value("cols", geometry.cols);
            geometry.cell_px = meta["target"].value("cell_px", geometry.cell_px);
            geometry.quiet_border_px =
                meta["target"].value("quiet_border_px", geometry.quiet_border_px);

            const std::string payload_name = meta.value("payload_file", std::string("payload.txt"));
            const auto truth = codec::load_payload(dir / payload_name);

            const FrameSequence seq = imgio::load_sequence(dir);
            double raw_sum = 0.0, raw_best = 0.0;
            for (const auto& frame : seq) {
                const double s = codec::bit_score(codec::decode_target(frame, geometry), truth);
                raw_sum += s;
                raw_best = std::max(raw_best, s);
            }
            sr.bit_score_raw_mean = raw_sum / static_cast<double>(seq.size());
            sr.bit_score_raw_best = raw_best;

            const RestoreResult restored = restore_sequence(seq, config);
            sr.bit_score_fused =
                codec::bit_score(codec::decode_target(restored.fused, geometry), truth);
            const auto restored_bits = codec::decode_target(restored.restored, geometry);
            sr.bit_score_restored = codec::bit_score(restored_bits, truth);
            sr.decoded.assign(restored_bits.size(), '0');
            for (size_t i = 0; i < restored_bits.size(); ++i)
                if (restored_bits[i]) sr.decoded[i] = '1';
            sr.sharpness_raw_mean = selection::sharpness(flow::build_reference(seq));
            sr.sharpness_fused = selection::sharpness(restored.fused);
            sr.sharpness_deblurred = selection::sharpness(restored.deblurred);
            sr.sharpness_restored = selection::sharpness(restored.restored);
            std::copy(std::begin(restored.stage_seconds), std::end(restored.stage_seconds),
                      std::begin(sr.stage_seconds));
            sr.ok = true;
        } catch (const std::exception& e) {
            sr.ok = false;
            sr.error = e.what();
        }
        report.sequences.push_back(std::move(sr));
    }

    std::map<std::string, TierAggregate> tiers;
    for (const auto& sr : report.sequences) {
        if (!sr.ok) continue;
        TierAggregate& agg = tiers[sr.strength];
        ++agg.count;
        agg.bit_score_raw_mean += sr.bit_score_raw_mean;
        agg.bit_score_raw_best += sr.bit_score_raw_best;
        agg.bit_score_fused += sr.bit_score_fused;
        agg.bit_score_restored += sr.bit_score_restored;
    }
    for (auto& [name, agg] : tiers) {
        const double n = static_cast<double>(agg.count);
        agg.bit_score_raw_mean /= n;
        agg.bit_score_raw_best /= n;
        agg.bit_score_fused /= n;
        agg.bit_score_restored /= n;
        report.tiers.emplace_back(name, agg);
    }
    return report;
}

json report_to_json(const EvalReport& report, const PipelineConfig& config,
                    bool include_timings) {
    json sequences = json::array();
    for (const auto& sr : report.sequences) {
        json entry{{"id", sr.id}, {"strength", sr.strength}, {"ok", sr.ok}};
        if (sr.ok) {
            entry["decoded"] = sr.decoded;
            entry["bit_score"] = {{"raw_mean", sr.bit_score_raw_mean},
                                  {"raw_best", sr.bit_score_raw_best},
                                  {"fused", sr.bit_score_fused},
                                  {"restored", sr.bit_score_restored}};
            entry["sharpness"] = {{"raw_mean", sr.sharpness_raw_mean},
                                  {"fused", sr.sharpness_fused},
                                  {"deblurred", sr.sharpness_deblurred},
                                  {"restored", sr.sharpness_restored}};
            if (include_timings)
                entry["stage_seconds"] = {{"register", sr.stage_seconds[0]},
                                          {"select", sr.stage_seconds[1]},
                                          {"deblur", sr.stage_seconds[2]},
                                          {"postprocess", sr.stage_seconds[3]}};
        } else {
            entry["error"] = sr.error;
        }
        sequences.push_back(std::move(entry));
    }

    json tiers = json::object();
    for (const auto& [name, agg] : report.tiers)
        tiers[name] = {{"count", agg.count},
                       {"bit_score_raw_mean", agg.bit_score_raw_mean},
                       {"bit_score_raw_best", agg.bit_score_raw_best},
                       {"bit_score_fused", agg.bit_score_fused},
                       {"bit_score_restored", agg.bit_score_restored}};

    return json{{"config", config_to_json(config)},
                {"sequences", sequences},
                {"tiers", tiers}};
}

}  // namespace turbmit::pipeline
