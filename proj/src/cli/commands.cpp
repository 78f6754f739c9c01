#include "apextrack/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "apextrack/annotations.hpp"
#include "apextrack/cli/manifest.hpp"
#include "apextrack/eval.hpp"
#include "apextrack/tensor_io.hpp"

namespace apextrack::cli {

namespace fs = std::filesystem;

namespace {

/// Failure with a message meant for the user.
class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const char* suffix(TensorKind kind) {
    switch (kind) {
        case TensorKind::Heatmap: return "hm";
        case TensorKind::Size: return "sz";
        case TensorKind::Displacement: return "dp";
    }
    return "??";
}

template <typename Fn>
int guarded(std::ostream& err, const char* command, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        err << command << ": " << e.what() << "\n";
        spdlog::debug("{} failed: {}", command, e.what());
        return kExitFailure;
    }
}

nlohmann::ordered_json decode_config_json(const DecodeConfig& decode,
                                          const TrackerConfig& tracker) {
    return {{"threshold", decode.confidence_threshold},
            {"top_k", decode.top_k},
            {"gating_scale", tracker.gating_scale},
            {"memory_frames", tracker.memory_frames}};
}

struct LoadedStream {
    std::vector<RawFrame> frames;
    std::vector<FileDigest> inputs;
};

LoadedStream load_tensor_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw CommandError("not a directory: " + dir.string());
    }
    static const std::regex kPattern(R"(frame_(\d{6})\.(hm|sz|dp)\.atrk)");
    std::map<int, std::map<std::string, fs::path>> triplets;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, m, kPattern)) {
            triplets[std::stoi(m[1].str())][m[2].str()] = entry.path();
        }
    }
    if (triplets.empty()) {
        throw CommandError("no frames in " + dir.string());
    }

    LoadedStream stream;
    std::optional<GridSpec> grid;
    for (const auto& [frame, files] : triplets) {
        const std::string tag = "frame " + std::to_string(frame);
        for (const char* part : {"hm", "sz", "dp"}) {
            if (!files.contains(part)) {
                throw CommandError(tag + ": missing ." + part + ".atrk");
            }
        }
        auto load = [&]<typename Tensor>(const char* part) {
            const fs::path& path = files.at(part);
            const auto bytes = read_binary_file(path);
            stream.inputs.push_back({path.filename().string(), sha256_hex(bytes)});
            try {
                return read_tensor_file_as<Tensor>(bytes);
            } catch (const Error& e) {
                throw CommandError(tag + ": " + path.filename().string() + ": " + e.what());
            }
        };
        Heatmap heatmap = load.template operator()<Heatmap>("hm");
        SizeMap sizes = load.template operator()<SizeMap>("sz");
        DisplacementField displacement = load.template operator()<DisplacementField>("dp");
        if (!heatmap.grid().same_geometry(sizes.grid()) ||
            !heatmap.grid().same_geometry(displacement.grid())) {
            throw CommandError(tag + ": grid mismatch within triplet");
        }
        if (grid && !(*grid == heatmap.grid())) {
            throw CommandError(tag + ": grid differs from earlier frames");
        }
        grid = heatmap.grid();
        stream.frames.push_back(
            {frame, std::move(heatmap), std::move(sizes), std::move(displacement)});
    }
    return stream;
}

struct LoadedGroundTruth {
    GroundTruthTrack track;
    int frames = 0;
    FileDigest digest;
};

LoadedGroundTruth load_ground_truth(const fs::path& path, const std::optional<std::string>& video) {
    const std::string text = read_file(path);
    const AnnotationSet annotations = parse_coco(text);
    auto tracks = gt_tracks(annotations);
    if (tracks.empty()) {
        throw CommandError(path.string() + ": no videos in GT");
    }
    auto it = tracks.begin();
    if (video) {
        it = std::find_if(tracks.begin(), tracks.end(),
                          [&](const GroundTruthTrack& t) { return t.video_id == *video; });
        if (it == tracks.end()) {
            throw CommandError(path.string() + ": no video '" + *video + "'");
        }
    } else if (tracks.size() > 1) {
        throw CommandError(path.string() + ": several videos, pick one with --video");
    }
    LoadedGroundTruth gt{std::move(*it), 0, {path.filename().string(), sha256_hex(text)}};
    gt.frames = frame_count(annotations, gt.track.video_id);
    return gt;
}

std::string reports_jsonl(const std::vector<EvalReport>& reports) {
    std::string out;
    for (const auto& r : reports) out += report_to_json(r) + "\n";
    return out;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
    fs::path out = path;
    out += suffix;
    return out;
}

}  // namespace

std::string tensor_file_name(int frame, TensorKind kind) {
    char name[48];
    std::snprintf(name, sizeof(name), "frame_%06d.%s.atrk", frame, suffix(kind));
    return name;
}

int cmd_convert(const ConvertOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, "convert", [&] {
        if (!fs::is_directory(options.voc_dir)) {
            throw CommandError("not a directory: " + options.voc_dir.string());
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(options.voc_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".xml") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw CommandError("no .xml files in " + options.voc_dir.string());
        }

        RunManifest manifest;
        manifest.command = "convert";
        std::vector<std::string> documents;
        for (const auto& file : files) {
            documents.push_back(read_file(file));
            manifest.inputs.push_back({file.filename().string(), sha256_hex(documents.back())});
            // Parse alone first so errors name the file.
            try {
                parse_voc({documents.back()});
            } catch (const Error& e) {
                throw CommandError(file.filename().string() + ": " + e.what());
            }
        }
        const AnnotationSet annotations = parse_voc(documents);

        OutputBatch batch;
        batch.add(options.out, emit_coco(annotations));
        manifest.outputs = batch.digests();
        batch.add(with_suffix(options.out, ".manifest.json"), manifest.to_json());
        batch.commit();
        spdlog::info("convert: {} images, {} boxes", annotations.images.size(),
                     annotations.boxes.size());
        out << "wrote " << options.out.string() << " (" << annotations.images.size()
            << " images, " << annotations.boxes.size() << " boxes)\n";
        return kExitOk;
    });
}

int cmd_track(const TrackOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, "track", [&] {
        options.decode.validate();
        options.tracker.validate();
        LoadedStream stream = load_tensor_dir(options.tensor_dir);
        const TrackTable table = track_stream(stream.frames, options.decode, options.tracker);

        RunManifest manifest;
        manifest.command = "track";
        manifest.config = decode_config_json(options.decode, options.tracker);
        manifest.inputs = std::move(stream.inputs);

        std::optional<GroundTruthTrack> gt;
        if (options.gt_coco) {
            auto loaded = load_ground_truth(*options.gt_coco, std::nullopt);
            gt = std::move(loaded.track);
            manifest.inputs.push_back(loaded.digest);
        }
        const TraceRender render =
            render_trace(table, gt ? &*gt : nullptr, stream.frames.front().heatmap.grid());

        fs::create_directories(options.out_dir);
        OutputBatch batch;
        batch.add(options.out_dir / "trace.csv", render.csv);
        batch.add(options.out_dir / "trace.svg", render.svg);
        manifest.outputs = batch.digests();
        batch.add(options.out_dir / "manifest.json", manifest.to_json());
        batch.commit();
        spdlog::info("track: {} frames, {} tracklets", stream.frames.size(), table.size());
        out << "tracked " << stream.frames.size() << " frames into " << table.size()
            << " tracklet(s)\n";
        return kExitOk;
    });
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, "eval", [&] {
        const std::string trace_text = read_file(options.trace_csv);
        TrackTable table = parse_trace_csv(trace_text);
        const LoadedGroundTruth gt = load_ground_truth(options.gt_coco, options.video);

        int total = gt.frames;
        if (options.frames && *options.frames != gt.frames) {
            throw CommandError("frame count mismatch: --frames " +
                               std::to_string(*options.frames) + " but GT has " +
                               std::to_string(gt.frames));
        }
        for (auto& t : table.retired) {
            for (const auto& p : t.history) {
                if (p.frame < 0 || p.frame >= total) {
                    throw CommandError("frame count mismatch: trace frame " +
                                       std::to_string(p.frame) + " outside GT's " +
                                       std::to_string(total) + " frames");
                }
            }
            std::erase_if(t.history,
                          [&](const TrackPoint& p) { return p.confidence < options.threshold; });
        }
        std::erase_if(table.retired, [](const Tracklet& t) { return t.history.empty(); });

        const std::vector<EvalReport> reports{
            compute_metrics(table, gt.track, total, options.threshold)};
        out << format_report_table(reports, false);

        if (options.out) {
            RunManifest manifest;
            manifest.command = "eval";
            manifest.config = {{"threshold", options.threshold}, {"video", gt.track.video_id}};
            manifest.inputs = {{options.trace_csv.filename().string(), sha256_hex(trace_text)},
                               gt.digest};
            OutputBatch batch;
            batch.add(*options.out, reports_jsonl(reports));
            manifest.outputs = batch.digests();
            batch.add(with_suffix(*options.out, ".manifest.json"), manifest.to_json());
            batch.commit();
        }
        return kExitOk;
    });
}

int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, "sweep", [&] {
        if (options.thresholds.empty()) {
            throw CommandError("no thresholds given");
        }
        options.decode.validate();
        options.tracker.validate();
        LoadedStream stream = load_tensor_dir(options.tensor_dir);
        const LoadedGroundTruth gt = load_ground_truth(options.gt_coco, options.video);
        if (static_cast<int>(stream.frames.size()) != gt.frames) {
            throw CommandError("frame count mismatch: " + std::to_string(stream.frames.size()) +
                               " tensor frames but GT has " + std::to_string(gt.frames));
        }
        for (std::size_t i = 0; i < stream.frames.size(); ++i) {
            if (stream.frames[i].frame != static_cast<int>(i)) {
                throw CommandError("frame count mismatch: frames are not numbered 0.." +
                                   std::to_string(stream.frames.size() - 1));
            }
        }

        const auto reports = sweep_thresholds(stream.frames, gt.track, options.thresholds,
                                              options.decode, options.tracker);
        out << format_report_table(reports, true);

        if (options.out) {
            RunManifest manifest;
            manifest.command = "sweep";
            manifest.config = decode_config_json(options.decode, options.tracker);
            manifest.config.erase("threshold");
            manifest.config["thresholds"] = options.thresholds;
            manifest.config["video"] = gt.track.video_id;
            manifest.inputs = std::move(stream.inputs);
            manifest.inputs.push_back(gt.digest);
            OutputBatch batch;
            batch.add(*options.out, reports_jsonl(reports));
            manifest.outputs = batch.digests();
            batch.add(with_suffix(*options.out, ".manifest.json"), manifest.to_json());
            batch.commit();
        }
        return kExitOk;
    });
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, "synth", [&] {
        const GridSpec grid(options.width, options.height, options.downsample);
        const SyntheticSequence seq = synthesize(options.scene, grid, options.sigma);
        if (seq.truth.clamped && !options.clamp) {
            throw CommandError("trajectory leaves the image; pass --clamp to clamp it");
        }

        fs::create_directories(options.out_dir);
        OutputBatch batch;
        for (const RawFrame& frame : seq.frames) {
            batch.add(options.out_dir / tensor_file_name(frame.frame, TensorKind::Heatmap),
                      write_tensor_file(frame.heatmap));
            batch.add(options.out_dir / tensor_file_name(frame.frame, TensorKind::Size),
                      write_tensor_file(frame.sizes));
            batch.add(options.out_dir / tensor_file_name(frame.frame, TensorKind::Displacement),
                      write_tensor_file(frame.displacement));
        }
        batch.add(options.out_dir / "gt.json",
                  emit_coco(ground_truth_annotations(seq.truth, grid, options.video_id)));

        const SceneSpec& scene = options.scene;
        const TrajectorySpec& spec = scene.trajectory;
        RunManifest manifest;
        manifest.command = "synth";
        auto distractors = nlohmann::ordered_json::array();
        for (const auto& d : scene.distractors) {
            distractors.push_back({{"x", d.center.x},
                                   {"y", d.center.y},
                                   {"confidence", d.confidence},
                                   {"first_frame", d.first_frame},
                                   {"every", d.every}});
        }
        manifest.config = {{"kind", to_string(spec.kind)},
                           {"frames", spec.frames},
                           {"start", {spec.start.x, spec.start.y}},
                           {"velocity", {spec.velocity.x, spec.velocity.y}},
                           {"amplitude", spec.amplitude},
                           {"period", spec.period},
                           {"growth_rate", spec.growth_rate},
                           {"size", {spec.object_size.w, spec.object_size.h}},
                           {"seed", spec.seed},
                           {"rng", Rng::kAlgorithm},
                           {"grid", {options.width, options.height}},
                           {"downsample", options.downsample},
                           {"sigma", seq.sigma_cells},
                           {"confidence", scene.confidence},
                           {"weak_every", scene.weak_every},
                           {"weak_confidence", scene.weak_confidence},
                           {"distractors", distractors},
                           {"clamped", seq.truth.clamped},
                           {"video_id", options.video_id}};
        manifest.outputs = batch.digests();
        batch.add(options.out_dir / "manifest.json", manifest.to_json());
        batch.commit();
        spdlog::info("synth: {} frames written to {}", seq.frames.size(),
                     options.out_dir.string());
        out << "wrote " << seq.frames.size() << " frames to " << options.out_dir.string()
            << "\n";
        return kExitOk;
    });
}

namespace {

void configure_logging() {
    static const bool configured = [] {
        auto logger = std::make_shared<spdlog::logger>(
            "apextrack", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)configured;
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("ATRK_LOG")) {
        level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
}

/// "640x480" -> (640, 480).
std::pair<int, int> parse_grid(const std::string& text) {
    int w = 0;
    int h = 0;
    char x = 0;
    std::istringstream in(text);
    if (!(in >> w >> x >> h) || (x != 'x' && x != 'X') || !in.eof()) {
        throw CLI::ValidationError("--grid", "expected WxH, got '" + text + "'");
    }
    return {w, h};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();

    CLI::App app{"Apex tracking pipeline: convert, track, eval, sweep, synth"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    DecodeConfig decode;
    TrackerConfig tracker;
    auto add_pipeline_flags = [&](CLI::App* cmd) {
        cmd->add_option("--top-k", decode.top_k, "maximum detections per frame")
            ->capture_default_str();
        cmd->add_option("--gating-scale", tracker.gating_scale,
                        "gate radius multiplier on sqrt(w*h)")
            ->capture_default_str();
        cmd->add_option("--memory-frames", tracker.memory_frames,
                        "frames a tracklet stays matchable after its last match")
            ->capture_default_str();
    };

    ConvertOptions convert;
    auto* convert_cmd = app.add_subcommand("convert", "Pascal VOC XML directory to COCO JSON");
    convert_cmd->add_option("voc_dir", convert.voc_dir)->required();
    convert_cmd->add_option("--out", convert.out, "COCO output file")->required();

    TrackOptions track;
    std::string gt_for_track;
    auto* track_cmd = app.add_subcommand("track", "decode and track a directory of ATRK frames");
    track_cmd->add_option("tensor_dir", track.tensor_dir)->required();
    track_cmd->add_option("--out", track.out_dir, "output directory")->required();
    track_cmd->add_option("--threshold", decode.confidence_threshold, "tracking threshold")
        ->capture_default_str();
    track_cmd->add_option("--gt", gt_for_track, "COCO GT drawn into the SVG");
    add_pipeline_flags(track_cmd);

    EvalOptions eval;
    std::string eval_video;
    std::string eval_out;
    int eval_frames = 0;
    auto* eval_cmd = app.add_subcommand("eval", "score a trace CSV against COCO GT");
    eval_cmd->add_option("trace_csv", eval.trace_csv)->required();
    eval_cmd->add_option("gt_coco", eval.gt_coco)->required();
    eval_cmd->add_option("--threshold", eval.threshold)->capture_default_str();
    eval_cmd->add_option("--video", eval_video);
    auto* eval_frames_opt = eval_cmd->add_option("--frames", eval_frames, "expected frame count");
    eval_cmd->add_option("--out", eval_out, "JSON-lines report file");

    SweepOptions sweep;
    std::string sweep_video;
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a tensor directory at several thresholds");
    sweep_cmd->add_option("tensor_dir", sweep.tensor_dir)->required();
    sweep_cmd->add_option("gt_coco", sweep.gt_coco)->required();
    sweep_cmd->add_option("--thresholds", sweep.thresholds, "comma-separated thresholds")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--video", sweep_video);
    sweep_cmd->add_option("--out", sweep_out, "JSON-lines report file");
    add_pipeline_flags(sweep_cmd);

    SynthOptions synth;
    std::string kind = "circumnutation";
    std::string grid_text = "640x480";
    std::vector<double> start{320.0, 240.0};
    std::vector<double> velocity{0.0, 0.0};
    std::vector<double> size{24.0, 24.0};
    std::vector<std::string> distractor_texts;
    double sigma = 0.0;
    auto& spec = synth.scene.trajectory;
    spec.kind = TrajectoryKind::Circumnutation;
    spec.amplitude = 20.0;
    spec.frames = 100;
    auto* synth_cmd = app.add_subcommand("synth", "render a synthetic apex sequence");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--kind", kind, "stationary|linear|circumnutation|random_walk")
        ->capture_default_str();
    synth_cmd->add_option("--frames", spec.frames)->capture_default_str();
    synth_cmd->add_option("--start", start, "X,Y")->delimiter(',')->expected(2);
    synth_cmd->add_option("--velocity", velocity, "VX,VY px/frame")->delimiter(',')->expected(2);
    synth_cmd->add_option("--amplitude", spec.amplitude)->capture_default_str();
    synth_cmd->add_option("--period", spec.period)->capture_default_str();
    synth_cmd->add_option("--growth-rate", spec.growth_rate)->capture_default_str();
    synth_cmd->add_option("--size", size, "W,H box size")->delimiter(',')->expected(2);
    synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
    synth_cmd->add_option("--grid", grid_text, "image size WxH")->capture_default_str();
    synth_cmd->add_option("--downsample", synth.downsample, "R")->capture_default_str();
    auto* sigma_opt = synth_cmd->add_option("--sigma", sigma, "splat sigma in cells");
    synth_cmd->add_option("--confidence", synth.scene.confidence)->capture_default_str();
    synth_cmd->add_option("--weak-every", synth.scene.weak_every,
                          "every Nth frame the apex peaks at --weak-confidence");
    synth_cmd->add_option("--weak-confidence", synth.scene.weak_confidence)
        ->capture_default_str();
    synth_cmd->add_option("--distractor", distractor_texts, "X,Y,CONF static false positive")
        ->take_all();
    synth_cmd->add_option("--video-id", synth.video_id)->capture_default_str();
    synth_cmd->add_flag("--clamp", synth.clamp, "clamp trajectories to the image");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (synth_cmd->parsed()) {
            spec.kind = trajectory_kind_from_string(kind);
            if (spec.frames <= 0) {
                throw CLI::ValidationError("--frames", "must be >= 1");
            }
            const auto [w, h] = parse_grid(grid_text);
            synth.width = w;
            synth.height = h;
            spec.start = {start[0], start[1]};
            spec.velocity = {velocity[0], velocity[1]};
            spec.object_size = {size[0], size[1]};
            if (sigma_opt->count() > 0) synth.sigma = sigma;
            for (const auto& text : distractor_texts) {
                double x = 0, y = 0, c = 0;
                char c1 = 0, c2 = 0;
                std::istringstream in(text);
                if (!(in >> x >> c1 >> y >> c2 >> c) || c1 != ',' || c2 != ',') {
                    throw CLI::ValidationError("--distractor", "expected X,Y,CONF");
                }
                Distractor d;
                d.center = {x, y};
                d.confidence = c;
                d.size = spec.object_size;
                synth.scene.distractors.push_back(d);
            }
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const ValidationError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    }

    if (convert_cmd->parsed()) return cmd_convert(convert, out, err);
    if (track_cmd->parsed()) {
        track.decode = decode;
        track.tracker = tracker;
        if (!gt_for_track.empty()) track.gt_coco = gt_for_track;
        return cmd_track(track, out, err);
    }
    if (eval_cmd->parsed()) {
        if (!eval_video.empty()) eval.video = eval_video;
        if (!eval_out.empty()) eval.out = eval_out;
        if (eval_frames_opt->count() > 0) eval.frames = eval_frames;
        return cmd_eval(eval, out, err);
    }
    if (sweep_cmd->parsed()) {
        sweep.decode = decode;
        sweep.tracker = tracker;
        if (!sweep_video.empty()) sweep.video = sweep_video;
        if (!sweep_out.empty()) sweep.out = sweep_out;
        return cmd_sweep(sweep, out, err);
    }
    return cmd_synth(synth, out, err);
}

}  // namespace apextrack::cli
