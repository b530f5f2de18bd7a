#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "turbmit/codec.hpp"
#include "turbmit/deblur.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/image.hpp"
#include "turbmit/postprocess.hpp"
#include "turbmit/selection.hpp"

namespace turbmit::pipeline {

// Full four-stage configuration. Serializes to/from JSON with defaulting:
// an empty document yields the defaults below, unknown keys are rejected.
struct PipelineConfig {
    flow::FlowParams flow;
    selection::SelectionParams selection;
    deblur::DeblurParams deblur;
    postprocess::PostprocessParams postprocess;
    int refinement_passes = 2;
};

nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);

// Empty or missing file -> defaults.
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

// Everything the four stages produce for one sequence.
struct RestoreResult {
    GrayImage reference;  // registration reference (final pass)
    GrayImage fused;      // stage B output A
    GrayImage deblurred;  // stage C output I
    GrayImage restored;   // stage D output O
    // register, select, deblur, postprocess wall seconds
    double stage_seconds[4] = {0, 0, 0, 0};
};

// register -> select/average -> deblur -> postprocess(guide = fused).
RestoreResult restore_sequence(const FrameSequence& seq, const PipelineConfig& config);

// Re-runs stages C+D on a fused image (e.g. a dumped stage artifact);
// reproduces the tail of restore_sequence exactly.
GrayImage restore_from_fused(const GrayImage& fused, const PipelineConfig& config);

struct SequenceReport {
    std::string id;
    std::string strength;  // tier string from meta.json, not an enum
    bool ok = false;
    std::string error;
    std::string decoded;  // restored-stage bits as a '0'/'1' line
    double bit_score_raw_mean = 0.0;
    double bit_score_raw_best = 0.0;
    double bit_score_fused = 0.0;
    double bit_score_restored = 0.0;
    double sharpness_raw_mean = 0.0;
    double sharpness_fused = 0.0;
    double sharpness_deblurred = 0.0;
    double sharpness_restored = 0.0;
    double stage_seconds[4] = {0, 0, 0, 0};
};

struct TierAggregate {
    int count = 0;
    double bit_score_raw_mean = 0.0;
    double bit_score_raw_best = 0.0;
    double bit_score_fused = 0.0;
    double bit_score_restored = 0.0;
};

struct EvalReport {
    std::vector<SequenceReport> sequences;
    std::vector<std::pair<std::string, TierAggregate>> tiers;  // sorted by tier name
};

// Runs the pipeline over every sequence directory under `root` (any
// subdirectory containing meta.json). Failing sequences are recorded, not
// fatal. Deterministic given config + data.
EvalReport evaluate_dataset(const std::filesystem::path& root, const PipelineConfig& config);

// Timings are excluded by default so reruns with identical seeds and config
// produce byte-identical reports.
nlohmann::json report_to_json(const EvalReport& report, const PipelineConfig& config,
                              bool include_timings = false);

}  // namespace turbmit::pipeline
