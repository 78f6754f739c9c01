#include "apextrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace apextrack {

std::uint64_t Rng::splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(static_cast<long long>(hi) - lo + 1);
    return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

const char* to_string(TrajectoryKind kind) noexcept {
    switch (kind) {
        case TrajectoryKind::Stationary: return "stationary";
        case TrajectoryKind::Linear: return "linear";
        case TrajectoryKind::Circumnutation: return "circumnutation";
        case TrajectoryKind::RandomWalk: return "random_walk";
    }
    return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
    for (auto kind : {TrajectoryKind::Stationary, TrajectoryKind::Linear,
                      TrajectoryKind::Circumnutation, TrajectoryKind::RandomWalk}) {
        if (name == to_string(kind)) return kind;
    }
    throw ValidationError("unknown trajectory kind '" + std::string(name) + "'");
}

Trajectory gen_trajectory(const TrajectorySpec& spec, const GridSpec& grid) {
    if (spec.frames <= 0) {
        throw ValidationError("trajectory: frames must be >= 1");
    }
    if (spec.kind == TrajectoryKind::Circumnutation && !(spec.period >= 2.0)) {
        throw ValidationError("trajectory: circumnutation period must be >= 2");
    }
    if (!(spec.object_size.w >= 0.0 && spec.object_size.h >= 0.0)) {
        throw ValidationError("trajectory: object size must be non-negative");
    }
    if (!std::isfinite(spec.start.x) || !std::isfinite(spec.start.y)) {
        throw ValidationError("trajectory: start must be finite");
    }

    Rng rng(spec.seed);
    Trajectory out;
    out.points.reserve(static_cast<std::size_t>(spec.frames));
    Point2 walk = spec.start;
    const double max_x = grid.width_px() - 1.0;
    const double max_y = grid.height_px() - 1.0;
    for (int t = 0; t < spec.frames; ++t) {
        Point2 c;
        switch (spec.kind) {
            case TrajectoryKind::Stationary: c = spec.start; break;
            case TrajectoryKind::Linear:
                c = {spec.start.x + spec.velocity.x * t, spec.start.y + spec.velocity.y * t};
                break;
            case TrajectoryKind::Circumnutation: {
                const double phase = 2.0 * std::numbers::pi * t / spec.period;
                c = {spec.start.x + spec.amplitude * std::cos(phase),
                     spec.start.y + spec.amplitude * std::sin(phase) - spec.growth_rate * t};
                break;
            }
            case TrajectoryKind::RandomWalk:
                if (t > 0) {
                    walk.x += spec.velocity.x + spec.amplitude * rng.normal();
                    walk.y += spec.velocity.y + spec.amplitude * rng.normal();
                }
                c = walk;
                break;
        }
        const Point2 clamped{std::clamp(c.x, 0.0, max_x), std::clamp(c.y, 0.0, max_y)};
        if (!(clamped == c)) out.clamped = true;
        // The walk continues from the clamped position so it stays near the image.
        walk = clamped;
        out.points.push_back({t, clamped, spec.object_size});
    }
    return out;
}

double default_sigma(Size2 object_size, const GridSpec& grid) {
    return std::max(1.0, std::min(object_size.w, object_size.h) / (6.0 * grid.downsample()));
}

FrameTensors render_scene(std::span<const SceneObject> objects, const GridSpec& grid,
                          double sigma_cells) {
    if (!(sigma_cells > 0.0) || !std::isfinite(sigma_cells)) {
        throw ValidationError("render: sigma must be > 0");
    }
    FrameTensors out{Heatmap(grid), SizeMap(grid), DisplacementField(grid)};
    std::vector<double> owner(grid.cell_count(), 0.0);
    const double two_sigma_sq = 2.0 * sigma_cells * sigma_cells;
    const double radius_sq = 9.0 * sigma_cells * sigma_cells;

    for (const SceneObject& object : objects) {
        if (!(object.peak > 0.0 && object.peak <= 1.0)) {
            throw ValidationError("render: peak must be in (0,1]");
        }
        const Cell peak = image_to_grid(object.center, grid);
        const float dx = static_cast<float>(object.center.x - object.prev_center.x);
        const float dy = static_cast<float>(object.center.y - object.prev_center.y);
        for (int row = 0; row < grid.rows(); ++row) {
            for (int col = 0; col < grid.cols(); ++col) {
                const double d_sq = static_cast<double>((col - peak.col) * (col - peak.col) +
                                                        (row - peak.row) * (row - peak.row));
                const double value = object.peak * std::exp(-d_sq / two_sigma_sq);
                const Cell cell{col, row};
                // Apex is class 0; further channels stay zero.
                if (value > out.heatmap.at(cell, 0)) {
                    out.heatmap.set(cell, 0, static_cast<float>(value));
                }
                const std::size_t i = static_cast<std::size_t>(row) * grid.cols() + col;
                if (d_sq <= radius_sq && value > owner[i]) {
                    owner[i] = value;
                    out.sizes.set(cell, 0, static_cast<float>(object.size.w));
                    out.sizes.set(cell, 1, static_cast<float>(object.size.h));
                    out.displacement.set(cell, 0, dx);
                    out.displacement.set(cell, 1, dy);
                }
            }
        }
    }
    out.heatmap.validate();
    out.sizes.validate();
    out.displacement.validate();
    return out;
}

FrameTensors render_frame(Point2 prev_center, Point2 cur_center, Size2 size,
                          const GridSpec& grid, double sigma_cells) {
    const SceneObject object{prev_center, cur_center, size, 1.0};
    return render_scene(std::span(&object, 1), grid, sigma_cells);
}

SyntheticSequence synthesize(const SceneSpec& scene, const GridSpec& grid,
                             std::optional<double> sigma_cells) {
    if (scene.weak_every < 0) {
        throw ValidationError("scene: weak_every must be >= 0");
    }
    for (const auto& d : scene.distractors) {
        if (d.every < 1 || d.first_frame < 0) {
            throw ValidationError("scene: distractor needs every >= 1 and first_frame >= 0");
        }
    }
    SyntheticSequence seq{grid, sigma_cells.value_or(default_sigma(scene.trajectory.object_size, grid)),
                          gen_trajectory(scene.trajectory, grid), {}};
    const auto& points = seq.truth.points;
    seq.frames.reserve(points.size());
    for (std::size_t t = 0; t < points.size(); ++t) {
        const int frame = points[t].frame;
        std::vector<SceneObject> objects;
        const bool weak = scene.weak_every > 0 && (frame + 1) % scene.weak_every == 0;
        objects.push_back({points[t == 0 ? 0 : t - 1].center, points[t].center, points[t].size,
                           weak ? scene.weak_confidence : scene.confidence});
        for (const auto& d : scene.distractors) {
            if (d.present(frame)) objects.push_back({d.center, d.center, d.size, d.confidence});
        }
        FrameTensors tensors = render_scene(objects, grid, seq.sigma_cells);
        seq.frames.push_back({frame, std::move(tensors.heatmap), std::move(tensors.sizes),
                              std::move(tensors.displacement)});
    }
    return seq;
}

AnnotationSet ground_truth_annotations(const Trajectory& truth, const GridSpec& grid,
                                       const std::string& video_id) {
    AnnotationSet set;
    const double width = grid.width_px();
    const double height = grid.height_px();
    for (const auto& p : truth.points) {
        const long long id = p.frame + 1LL;
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.jpg", p.frame);
        set.images.push_back(
            {id, name, grid.width_px(), grid.height_px(), p.frame, video_id});
        const double half_w = std::min({p.size.w / 2.0, p.center.x, width - p.center.x});
        const double half_h = std::min({p.size.h / 2.0, p.center.y, height - p.center.y});
        set.boxes.push_back({id, id, 1, p.center.x - half_w, p.center.y - half_h, 2.0 * half_w,
                             2.0 * half_h});
    }
    validate(set);
    return set;
}

namespace {

struct Candidate {
    std::size_t count = 0;
    double cost = 0.0;
    Matching pairs;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.pairs < b.pairs;
}

}  // namespace

Matching brute_force_assign(std::span<const Detection> detections,
                            std::span<const Tracklet> tracklets,
                            const DisplacementField& displacement, const TrackerConfig& gate) {
    if (detections.size() > kBruteForceLimit || tracklets.size() > kBruteForceLimit) {
        throw SizeError("brute force limited to " + std::to_string(kBruteForceLimit) +
                        " detections and tracklets");
    }
    gate.validate();

    // distance[d][t], or -1 when outside the gate.
    std::vector<std::vector<double>> distance(detections.size(),
                                              std::vector<double>(tracklets.size(), -1.0));
    for (std::size_t d = 0; d < detections.size(); ++d) {
        const Detection& det = detections[d];
        const Cell cell = image_to_grid(det.center, displacement.grid());
        const double prior_x = det.center.x - displacement.at(cell, 0);
        const double prior_y = det.center.y - displacement.at(cell, 1);
        const double radius = gate.gating_scale * std::sqrt(det.size.w * det.size.h);
        for (std::size_t t = 0; t < tracklets.size(); ++t) {
            const Point2& last = tracklets[t].last_detection.center;
            const double dist = std::hypot(last.x - prior_x, last.y - prior_y);
            if (dist <= radius) distance[d][t] = dist;
        }
    }

    Candidate best;
    Candidate current;
    std::vector<char> used(tracklets.size(), 0);
    std::vector<std::size_t> used_slot;
    auto search = [&](auto&& self, std::size_t d) -> void {
        if (d == detections.size()) {
            // Pairs are built in detection order, so already sorted; summing in
            // that order keeps equal matchings at bit-equal cost.
            Candidate leaf{current.pairs.size(), 0.0, current.pairs};
            for (std::size_t i = 0; i < leaf.pairs.size(); ++i) {
                leaf.cost += distance[leaf.pairs[i].first][used_slot[i]];
            }
            if (better(leaf, best)) best = std::move(leaf);
            return;
        }
        self(self, d + 1);
        for (std::size_t t = 0; t < tracklets.size(); ++t) {
            if (used[t] || distance[d][t] < 0.0) continue;
            used[t] = 1;
            current.pairs.emplace_back(d, tracklets[t].id);
            used_slot.push_back(t);
            self(self, d + 1);
            used_slot.pop_back();
            current.pairs.pop_back();
            used[t] = 0;
        }
    };
    search(search, 0);
    return best.pairs;
}

double matching_cost(const Matching& matching, std::span<const Detection> detections,
                     std::span<const Tracklet> tracklets, const DisplacementField& displacement) {
    double total = 0.0;
    for (const auto& [d, id] : matching) {
        const auto it = std::find_if(tracklets.begin(), tracklets.end(),
                                     [id = id](const Tracklet& t) { return t.id == id; });
        if (it == tracklets.end()) {
            throw ValidationError("matching references unknown tracklet " + std::to_string(id));
        }
        const Detection& det = detections[d];
        const Cell cell = image_to_grid(det.center, displacement.grid());
        total += std::hypot(it->last_detection.center.x - (det.center.x - displacement.at(cell, 0)),
                            it->last_detection.center.y - (det.center.y - displacement.at(cell, 1)));
    }
    return total;
}

}  // namespace apextrack
