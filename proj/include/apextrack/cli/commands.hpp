#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "apextrack/decoder.hpp"
#include "apextrack/synth.hpp"
#include "apextrack/tracker.hpp"

namespace apextrack::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
};

struct ConvertOptions {
    std::filesystem::path voc_dir;
    std::filesystem::path out;
};

struct TrackOptions {
    std::filesystem::path tensor_dir;
    std::filesystem::path out_dir;
    /// Optional GT drawn dashed into the SVG.
    std::optional<std::filesystem::path> gt_coco;
    DecodeConfig decode;
    TrackerConfig tracker;
};

struct EvalOptions {
    std::filesystem::path trace_csv;
    std::filesystem::path gt_coco;
    double threshold = 0.3;
    std::optional<std::string> video;
    std::optional<int> frames;
    std::optional<std::filesystem::path> out;
};

struct SweepOptions {
    std::filesystem::path tensor_dir;
    std::filesystem::path gt_coco;
    std::vector<double> thresholds{0.3, 0.4};
    DecodeConfig decode;
    TrackerConfig tracker;
    std::optional<std::string> video;
    std::optional<std::filesystem::path> out;
};

struct SynthOptions {
    SceneSpec scene;
    int width = 640;
    int height = 480;
    int downsample = 4;
    std::optional<double> sigma;
    std::string video_id = "synthetic";
    bool clamp = false;
    std::filesystem::path out_dir;
};

/// VOC directory -> COCO file plus <out>.manifest.json.
int cmd_convert(const ConvertOptions& options, std::ostream& out, std::ostream& err);
/// ATRK triplets -> trace.csv, trace.svg, manifest.json in out_dir.
int cmd_track(const TrackOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);
/// Scene -> ATRK triplets, gt.json and manifest.json in out_dir.
int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);

/// Full command line (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Tensor triplet file name for a frame, e.g. frame_000012.hm.atrk.
std::string tensor_file_name(int frame, TensorKind kind);

}  // namespace apextrack::cli
