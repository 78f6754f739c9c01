#pragma once

#include <span>
#include <utility>
#include <vector>

#include "apextrack/core.hpp"

namespace apextrack {

struct TrackerConfig {
    /// Gate radius is gating_scale * sqrt(w * h) of the detection's box.
    double gating_scale = 1.0;
    /// A tracklet stays matchable for this many frames after its last match.
    int memory_frames = 1;

    void validate() const;
};

/// Pairs of (index into the caller's detection list, tracklet id), sorted by
/// detection index.
using Matching = std::vector<std::pair<std::size_t, int>>;

/// Where the detected object sat in the previous frame: centre minus the
/// displacement stored at the detection's own cell.
Point2 predict_prior(const Detection& detection, const DisplacementField& displacement);

/// Gate radius for a detection.
double gate_radius(const Detection& detection, const TrackerConfig& config);

/// Greedy association of one frame's detections to candidate tracklets.
///
/// Detections are visited by confidence descending (ties by row-major centre
/// position); each takes the nearest still-unmatched tracklet whose last
/// centre lies within its gate around the predicted prior. Distance ties go to
/// the lower id.
Matching greedy_match(std::span<const Detection> detections, std::span<const Tracklet> tracklets,
                      const DisplacementField& displacement, const TrackerConfig& config);

/// Advances `table` by one frame. Throws OrderingError if `frame` is not
/// beyond every frame already processed.
TrackTable associate_frame(std::span<const Detection> detections, TrackTable table,
                           const DisplacementField& displacement, int frame,
                           const TrackerConfig& config);

struct FrameInput {
    int frame = 0;
    std::vector<Detection> detections;
    DisplacementField displacement;
};

/// associate_frame folded over `frames`, starting from an empty table.
TrackTable run_sequence(std::span<const FrameInput> frames, const TrackerConfig& config);

}  // namespace apextrack
