#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apextrack/annotations.hpp"
#include "apextrack/core.hpp"
#include "apextrack/decoder.hpp"
#include "apextrack/tracker.hpp"

namespace apextrack {

/// One row of the per-video results table.
///
/// center_mse is the mean over evaluated frames of the squared Euclidean
/// distance (full-resolution pixels) between the evaluated prediction and the
/// GT centre. A frame is evaluated when it has GT and at least one detection;
/// on frames with several detections the highest-confidence one is used.
/// failed_frames and more_object_frames count GT frames with zero and with
/// two or more detections respectively.
struct EvalReport {
    std::string video_id;
    double center_mse = 0.0;
    int failed_frames = 0;
    int more_object_frames = 0;
    int total_frames = 1;
    int evaluated_frames = 0;
    double threshold = 0.3;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Scores `predicted` against `gt` over frames [0, total_frames). GT-less
/// frames are skipped entirely. Throws ValidationError if total_frames <= 0 or
/// the threshold is outside [0,1].
EvalReport compute_metrics(const TrackTable& predicted, const GroundTruthTrack& gt,
                           int total_frames, double threshold);

/// Detector output for one frame, before decoding.
struct RawFrame {
    int frame = 0;
    Heatmap heatmap;
    SizeMap sizes;
    DisplacementField displacement;
};

/// decode + run_sequence over a stream.
TrackTable track_stream(std::span<const RawFrame> stream, const DecodeConfig& decode_config,
                        const TrackerConfig& tracker_config);

/// Re-runs decode, tracking and scoring once per threshold on the same stream;
/// total_frames is the stream length. `decode_config.confidence_threshold` is
/// replaced by each entry of `thresholds`.
std::vector<EvalReport> sweep_thresholds(std::span<const RawFrame> stream,
                                         const GroundTruthTrack& gt,
                                         std::span<const double> thresholds,
                                         const DecodeConfig& decode_config = {},
                                         const TrackerConfig& tracker_config = {});

struct TraceRender {
    std::string csv;
    std::string svg;
};

/// CSV (header "frame,track_id,x,y,confidence", rows ordered by frame then
/// id) and a W x H SVG with one polyline per tracklet and a dashed GT line.
TraceRender render_trace(const TrackTable& table, const GroundTruthTrack* gt,
                         const GridSpec& canvas);

inline constexpr std::string_view kTraceCsvHeader = "frame,track_id,x,y,confidence";

/// Rebuilds tracklets from a trace CSV. All tracklets land in `retired`; sizes
/// are not stored in the trace and come back as zero. Throws ParseError.
TrackTable parse_trace_csv(std::string_view csv);

/// One compact JSON object, no trailing newline.
std::string report_to_json(const EvalReport& report);
/// Throws SchemaError / ParseError.
EvalReport report_from_json(std::string_view line);

/// Aligned text table with the columns Video, Center MSE, Failed, More
/// Object, Total Frames (plus Tracking Threshold when requested).
std::string format_report_table(std::span<const EvalReport> reports, bool with_threshold);

}  // namespace apextrack
