#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "turbmit/codec.hpp"
#include "turbmit/errors.hpp"
#include "turbmit/imgio.hpp"
#include "turbmit/pipeline.hpp"
#include "turbmit/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace turbmit;

namespace {

// Exit codes: 0 success, 1 usage, 2 data, 3 internal numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

// Reserved RNG substreams; frames use 1..n and the Table-1 parameter draw
// uses 0, so auxiliary draws live far away.
constexpr uint64_t kPayloadStream = uint64_t{1} << 40;
constexpr uint64_t kStrengthStream = (uint64_t{1} << 40) + 1;

struct CommonOptions {
    std::string config_path;
    int jobs = 0;
};

pipeline::PipelineConfig resolve_config(const CommonOptions& opts) {
    if (!opts.config_path.empty()) return pipeline::load_config(opts.config_path);
    return pipeline::PipelineConfig{};
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

int run_restore(const std::string& input_dir, const std::string& output_path,
                const std::string& resume_fused, bool dump_stages,
                const pipeline::PipelineConfig& config) {
    const fs::path out_path(output_path);
    const fs::path stage_dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");

    std::string stage = "load";
    try {
        if (!resume_fused.empty()) {
            stage = "resume";
            const GrayImage fused = imgio::load_raw_f32(resume_fused);
            const GrayImage restored = pipeline::restore_from_fused(fused, config);
            fs::create_directories(stage_dir);
            imgio::save_image(restored, out_path);
            std::printf("restored %s -> %s (resumed from fused)\n", resume_fused.c_str(),
                        output_path.c_str());
            return kExitOk;
        }

        const FrameSequence seq = imgio::load_sequence(input_dir);

        stage = "register";
        const flow::RegistrationResult reg =
            flow::register_sequence(seq, config.flow, config.refinement_passes);

        stage = "select";
        const GrayImage fused = selection::select_and_average(reg.frames, config.selection);

        stage = "deblur";
        const GrayImage deblurred = deblur::deblur(fused, config.deblur);

        stage = "postprocess";
        const GrayImage restored =
            postprocess::postprocess(deblurred, fused, config.postprocess);

        stage = "save";
        fs::create_directories(stage_dir);
        if (dump_stages) {
            imgio::save_image(reg.reference, stage_dir / "stage_reference.png");
            imgio::save_image(fused, stage_dir / "stage_fused.png");
            imgio::save_raw_f32(fused, stage_dir / "stage_fused.f32");
            imgio::save_image(deblurred, stage_dir / "stage_deblurred.png");
            // Per-frame sharpness diagnostics, ranked order.
            std::ofstream csv(stage_dir / "stage_scores.csv");
            csv << "frame_index,sharpness\n";
            for (const auto& score : selection::rank_frames(reg.frames))
                csv << score.frame_index << ',' << score.score << '\n';
        }
        imgio::save_image(restored, out_path);
        std::printf("restored %s -> %s\n", input_dir.c_str(), output_path.c_str());
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error in stage %s: %s\n", stage.c_str(), e.what());
        throw;
    }
}

struct SimulateOptions {
    std::string out_dir;
    std::string clean_path;
    bool make_target = false;
    std::string strength = "random";
    int frames = 100;
    uint64_t seed = 42;
    double noise_sigma = 0.01;
    int rows = 8, cols = 8, cell_px = 16, border_px = -1;  // border -1 = 2*cell
};

int run_simulate(const SimulateOptions& opts) {
    fs::create_directories(opts.out_dir);
    const fs::path out_dir(opts.out_dir);

    json meta;
    GrayImage clean;
    if (!opts.clean_path.empty()) {
        clean = imgio::load_image(opts.clean_path);
        meta["clean_source"] = opts.clean_path;
    } else {
        codec::CodedTarget target;
        target.rows = opts.rows;
        target.cols = opts.cols;
        target.cell_px = opts.cell_px;
        target.quiet_border_px = opts.border_px >= 0 ? opts.border_px : 2 * opts.cell_px;
        Rng payload_rng(split_seed(opts.seed, kPayloadStream));
        target.payload = codec::random_payload(target.rows, target.cols, payload_rng);
        clean = codec::generate_target(target);
        codec::save_payload(target.payload, out_dir / "payload.txt");
        meta["target"] = {{"rows", target.rows},
                          {"cols", target.cols},
                          {"cell_px", target.cell_px},
                          {"quiet_border_px", target.quiet_border_px}};
        meta["payload_file"] = "payload.txt";
    }

    simulator::Strength strength;
    if (opts.strength == "random") {
        Rng strength_rng(split_seed(opts.seed, kStrengthStream));
        strength = simulator::sample_strength(strength_rng);
    } else {
        strength = simulator::strength_from_string(opts.strength);
    }

    const simulator::DegradedSequence degraded = simulator::degrade_sequence(
        clean, strength, opts.frames, opts.seed, {}, opts.noise_sigma);

    char name[32];
    for (size_t i = 0; i < degraded.frames.size(); ++i) {
        std::snprintf(name, sizeof name, "frame_%04zu.png", i);
        imgio::save_image(degraded.frames[i], out_dir / name);
    }

    meta["seed"] = opts.seed;
    meta["frames"] = opts.frames;
    meta["strength"] = simulator::to_string(degraded.params.strength);
    meta["params"] = {{"kernel_size", degraded.params.kernel_size},
                      {"aperture_d", degraded.params.aperture_d},
                      {"d_over_r0", degraded.params.d_over_r0},
                      {"distance_m", degraded.params.distance_m},
                      {"corr", degraded.params.corr},
                      {"noise_sigma", degraded.params.noise_sigma}};
    std::ofstream meta_out(out_dir / "meta.json");
    if (!meta_out) throw IoError("cannot write meta.json in " + opts.out_dir);
    meta_out << meta.dump(2) << '\n';

    std::printf("simulated %d %s frames -> %s\n", opts.frames,
                simulator::to_string(strength).c_str(), opts.out_dir.c_str());
    return kExitOk;
}

int run_evaluate(const std::string& root, const std::string& report_path, bool timings,
                 const pipeline::PipelineConfig& config) {
    const pipeline::EvalReport report = pipeline::evaluate_dataset(root, config);

    if (report.sequences.empty())
        std::fprintf(stderr, "warning: no sequences with meta.json under %s\n", root.c_str());

    std::printf("%-24s %-8s %9s %9s %9s %9s  %s\n", "sequence", "tier", "raw_mean",
                "raw_best", "fused", "restored", "time[s]");
    for (const auto& sr : report.sequences) {
        if (sr.ok) {
            const double total = sr.stage_seconds[0] + sr.stage_seconds[1] +
                                 sr.stage_seconds[2] + sr.stage_seconds[3];
            std::printf("%-24s %-8s %9.4f %9.4f %9.4f %9.4f  %.2f\n", sr.id.c_str(),
                        sr.strength.c_str(), sr.bit_score_raw_mean, sr.bit_score_raw_best,
                        sr.bit_score_fused, sr.bit_score_restored, total);
        } else {
            std::printf("%-24s %-8s FAILED: %s\n", sr.id.c_str(), sr.strength.c_str(),
                        sr.error.c_str());
        }
    }
    for (const auto& [tier, agg] : report.tiers)
        std::printf("tier %-8s (%d seq): raw_mean %.4f  fused %.4f  restored %.4f\n",
                    tier.c_str(), agg.count, agg.bit_score_raw_mean, agg.bit_score_fused,
                    agg.bit_score_restored);

    const fs::path out = report_path.empty() ? fs::path(root) / "report.json"
                                             : fs::path(report_path);
    std::ofstream report_out(out);
    if (!report_out) throw IoError("cannot write report: " + out.string());
    report_out << pipeline::report_to_json(report, config, timings).dump(2) << '\n';
    std::printf("report written to %s\n", out.string().c_str());
    return kExitOk;
}

int run_decode(const std::string& image_path, const std::string& truth_path, int rows,
               int cols, int cell_px, int border_px) {
    codec::CodedTarget geometry;
    geometry.rows = rows;
    geometry.cols = cols;
    geometry.cell_px = cell_px;
    geometry.quiet_border_px = border_px >= 0 ? border_px : 2 * cell_px;

    const GrayImage img = imgio::load_image(image_path);
    const auto bits = codec::decode_target(img, geometry);
    std::string line(bits.size(), '0');
    for (size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) line[i] = '1';
    std::printf("%s\n", line.c_str());

    if (!truth_path.empty()) {
        const auto truth = codec::load_payload(truth_path);
        std::printf("bit_score %.6f\n", codec::bit_score(bits, truth));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Turbulence-mitigation pipeline: register, fuse, deblur, refine"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    CommonOptions common;
    app.add_option("--jobs", common.jobs, "worker thread count (0 = library default)");

    // restore
    auto* restore_cmd = app.add_subcommand("restore", "restore one distorted sequence");
    std::string input_dir, output_path = "restored.png", resume_fused;
    bool dump_stages = false, no_stretch = false, no_ringing = false;
    double keep_fraction = -1.0, nsr = -1.0, psf_sigma = -1.0;
    int passes = -1, rl_iterations = -1;
    std::string deblur_method;
    restore_cmd->add_option("input", input_dir, "directory of frame_%04d.png|pgm")
        ->required();
    restore_cmd->add_option("-o,--output", output_path, "output PNG path");
    restore_cmd->add_option("--config", common.config_path, "pipeline config JSON");
    restore_cmd->add_flag("--dump-stages", dump_stages,
                          "write stage_reference/fused/deblurred next to the output");
    restore_cmd->add_option("--resume-fused", resume_fused,
                            "rerun deblur+postprocess from a dumped stage_fused.f32");
    restore_cmd->add_option("--keep-fraction", keep_fraction, "sharpest fraction to fuse");
    restore_cmd->add_option("--deblur-method", deblur_method, "wiener|richardson_lucy");
    restore_cmd->add_option("--nsr", nsr, "Wiener noise-to-signal ratio");
    restore_cmd->add_option("--psf-sigma", psf_sigma, "fixed PSF sigma (skips blind search)");
    restore_cmd->add_option("--rl-iterations", rl_iterations, "Richardson-Lucy iterations");
    restore_cmd->add_option("--passes", passes, "registration refinement passes");
    restore_cmd->add_flag("--no-stretch", no_stretch, "disable the contrast stretch");
    restore_cmd->add_flag("--no-ringing", no_ringing, "disable ringing suppression");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "synthesize a degraded sequence");
    SimulateOptions sim;
    simulate_cmd->add_option("--out", sim.out_dir, "output directory")->required();
    simulate_cmd->add_option("--clean", sim.clean_path, "clean source image");
    simulate_cmd->add_flag("--target", sim.make_target,
                           "generate a coded target as the clean image (default)");
    simulate_cmd->add_option("--strength", sim.strength, "weak|medium|strong|random");
    simulate_cmd->add_option("--frames", sim.frames, "frames per sequence")
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", sim.seed, "RNG seed");
    simulate_cmd->add_option("--noise", sim.noise_sigma, "additive noise sigma");
    simulate_cmd->add_option("--rows", sim.rows, "target rows");
    simulate_cmd->add_option("--cols", sim.cols, "target cols");
    simulate_cmd->add_option("--cell", sim.cell_px, "target cell size, px");
    simulate_cmd->add_option("--border", sim.border_px, "quiet border px (-1 = 2*cell)");

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "run the bit-score harness");
    std::string dataset_root, report_path;
    bool timings = false;
    evaluate_cmd->add_option("root", dataset_root, "dataset root of sequence dirs")
        ->required();
    evaluate_cmd->add_option("--config", common.config_path, "pipeline config JSON");
    evaluate_cmd->add_option("--report", report_path, "report path (default root/report.json)");
    evaluate_cmd->add_flag("--timings", timings,
                           "include wall times in the report (breaks byte-for-byte reruns)");

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "decode a coded-target image");
    std::string image_path, truth_path;
    int rows = 8, cols = 8, cell_px = 16, border_px = -1;
    decode_cmd->add_option("image", image_path, "restored image")->required();
    decode_cmd->add_option("--truth", truth_path, "ground-truth payload file");
    decode_cmd->add_option("--rows", rows, "grid rows");
    decode_cmd->add_option("--cols", cols, "grid cols");
    decode_cmd->add_option("--cell", cell_px, "cell size, px");
    decode_cmd->add_option("--border", border_px, "quiet border px (-1 = 2*cell)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    apply_jobs(common.jobs);
    try {
        if (*restore_cmd) {
            pipeline::PipelineConfig config = resolve_config(common);
            if (keep_fraction > 0.0) config.selection.keep_fraction = keep_fraction;
            if (!deblur_method.empty())
                config.deblur.method = deblur::deblur_method_from_string(deblur_method);
            if (nsr >= 0.0) config.deblur.nsr = nsr;
            if (psf_sigma > 0.0) config.deblur.psf_sigma = psf_sigma;
            if (rl_iterations > 0) config.deblur.rl_iterations = rl_iterations;
            if (passes > 0) config.refinement_passes = passes;
            if (no_stretch) config.postprocess.enable_stretch = false;
            if (no_ringing) config.postprocess.enable_ringing = false;
            return run_restore(input_dir, output_path, resume_fused, dump_stages, config);
        }
        if (*simulate_cmd) {
            if (!sim.clean_path.empty() && sim.make_target)
                throw DataError("simulate: --clean and --target are mutually exclusive");
            return run_simulate(sim);
        }
        if (*evaluate_cmd)
            return run_evaluate(dataset_root, report_path, timings, resolve_config(common));
        if (*decode_cmd)
            return run_decode(image_path, truth_path, rows, cols, cell_px, border_px);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitUsage;
}
