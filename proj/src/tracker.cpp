#include "apextrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

namespace apextrack {

void TrackerConfig::validate() const {
    if (!(gating_scale > 0.0) || !std::isfinite(gating_scale)) {
        throw ValidationError("tracker: gating_scale must be > 0");
    }
    if (memory_frames < 1) {
        throw ValidationError("tracker: memory_frames must be >= 1");
    }
}

Point2 predict_prior(const Detection& detection, const DisplacementField& displacement) {
    const Cell cell = image_to_grid(detection.center, displacement.grid());
    return {detection.center.x - displacement.at(cell, 0),
            detection.center.y - displacement.at(cell, 1)};
}

double gate_radius(const Detection& detection, const TrackerConfig& config) {
    return config.gating_scale * std::sqrt(detection.size.w * detection.size.h);
}

namespace {

std::vector<std::size_t> greedy_order(std::span<const Detection> detections) {
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        const Detection& d = detections[i];
        return std::make_tuple(-d.confidence, d.center.y, d.center.x, d.size.w, d.size.h,
                               d.class_id);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    return order;
}

}  // namespace

Matching greedy_match(std::span<const Detection> detections, std::span<const Tracklet> tracklets,
                      const DisplacementField& displacement, const TrackerConfig& config) {
    config.validate();
    std::vector<char> taken(tracklets.size(), 0);
    Matching matching;
    for (const std::size_t di : greedy_order(detections)) {
        const Detection& det = detections[di];
        const Point2 prior = predict_prior(det, displacement);
        const double gate = gate_radius(det, config);

        std::size_t best = tracklets.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t ti = 0; ti < tracklets.size(); ++ti) {
            if (taken[ti]) continue;
            const Point2& last = tracklets[ti].last_detection.center;
            const double dist = std::hypot(last.x - prior.x, last.y - prior.y);
            if (dist > gate) continue;
            if (best == tracklets.size() || dist < best_dist ||
                (dist == best_dist && tracklets[ti].id < tracklets[best].id)) {
                best = ti;
                best_dist = dist;
            }
        }
        if (best != tracklets.size()) {
            taken[best] = 1;
            matching.emplace_back(di, tracklets[best].id);
        }
    }
    std::sort(matching.begin(), matching.end());
    return matching;
}

TrackTable associate_frame(std::span<const Detection> detections, TrackTable table,
                           const DisplacementField& displacement, int frame,
                           const TrackerConfig& config) {
    config.validate();
    if (table.last_frame && frame <= *table.last_frame) {
        throw OrderingError("frame " + std::to_string(frame) + " not after frame " +
                            std::to_string(*table.last_frame));
    }
    for (const Tracklet& t : table.active) {
        if (frame <= t.last_frame) {
            throw OrderingError("frame " + std::to_string(frame) + " not after tracklet " +
                                std::to_string(t.id) + " last frame " +
                                std::to_string(t.last_frame));
        }
    }

    auto retire_if = [&](auto&& stale) {
        auto split = std::stable_partition(table.active.begin(), table.active.end(),
                                           [&](const Tracklet& t) { return !stale(t); });
        std::move(split, table.active.end(), std::back_inserter(table.retired));
        table.active.erase(split, table.active.end());
    };

    // Gaps in the frame index can outlast the memory before matching starts.
    retire_if([&](const Tracklet& t) { return frame - t.last_frame > config.memory_frames; });

    const Matching matching = greedy_match(detections, table.active, displacement, config);

    std::vector<char> detection_matched(detections.size(), 0);
    for (const auto& [di, id] : matching) {
        detection_matched[di] = 1;
        auto it = std::find_if(table.active.begin(), table.active.end(),
                               [id = id](const Tracklet& t) { return t.id == id; });
        const Detection& det = detections[di];
        it->last_detection = det;
        it->last_frame = frame;
        it->history.push_back({frame, det.center, det.confidence});
    }

    for (const std::size_t di : greedy_order(detections)) {
        if (detection_matched[di]) continue;
        const Detection& det = detections[di];
        Tracklet t;
        t.id = table.next_id++;
        t.last_detection = det;
        t.last_frame = frame;
        t.history.push_back({frame, det.center, det.confidence});
        table.active.push_back(std::move(t));
    }

    retire_if([&](const Tracklet& t) { return frame - t.last_frame >= config.memory_frames; });
    table.last_frame = frame;
    return table;
}

TrackTable run_sequence(std::span<const FrameInput> frames, const TrackerConfig& config) {
    TrackTable table;
    for (const FrameInput& input : frames) {
        table = associate_frame(input.detections, std::move(table), input.displacement,
                                input.frame, config);
    }
    return table;
}

}  // namespace apextrack
