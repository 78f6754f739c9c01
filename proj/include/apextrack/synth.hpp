#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "apextrack/annotations.hpp"
#include "apextrack/core.hpp"
#include "apextrack/eval.hpp"
#include "apextrack/tracker.hpp"

namespace apextrack {

/// Deterministic random source: std::mt19937_64 seeded through splitmix64.
/// split() derives an independent stream from (seed, stream id). Gaussians
/// use Box-Muller on 53-bit uniforms so results do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64+splitmix64";

    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

    static std::uint64_t splitmix64(std::uint64_t x);

    Rng split(std::uint64_t stream) const { return Rng(seed_ ^ splitmix64(stream + 1)); }

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi);
    double normal();

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::optional<double> spare_;
};

enum class TrajectoryKind { Stationary, Linear, Circumnutation, RandomWalk };

const char* to_string(TrajectoryKind kind) noexcept;
/// Throws ValidationError on an unknown name.
TrajectoryKind trajectory_kind_from_string(std::string_view name);

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Stationary;
    Point2 start;
    /// px/frame; drift per step for random walks.
    Point2 velocity;
    /// Circumnutation radius, or per-step standard deviation for random walks.
    double amplitude = 0.0;
    double period = 60.0;
    /// Upward drift (px/frame) of circumnutation.
    double growth_rate = 0.0;
    std::uint64_t seed = 0;
    int frames = 1;
    Size2 object_size{24.0, 24.0};
};

struct TrajectoryPoint {
    int frame = 0;
    Point2 center;
    Size2 size;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    /// True if any centre had to be clamped into [0, W-1] x [0, H-1].
    bool clamped = false;
};

/// Scripted apex motion. Circumnutation follows
/// start + (A cos(2 pi t / P), A sin(2 pi t / P) - g t).
/// Throws ValidationError for frames <= 0, period < 2 on circumnutation, or
/// negative sizes.
Trajectory gen_trajectory(const TrajectorySpec& spec, const GridSpec& grid);

/// max(1, min(w, h) / (6R)) grid cells.
double default_sigma(Size2 object_size, const GridSpec& grid);

struct FrameTensors {
    Heatmap heatmap;
    SizeMap sizes;
    DisplacementField displacement;
};

struct SceneObject {
    Point2 prev_center;
    Point2 center;
    Size2 size;
    /// Heatmap value at the object's peak cell.
    double peak = 1.0;
};

/// Gaussian splat per object (heatmap = max over objects). Size and
/// displacement are written to cells within 3 sigma of a peak; where splats
/// overlap, the object with the larger heatmap contribution owns the cell.
/// Throws ValidationError for sigma <= 0 or a peak outside (0,1].
FrameTensors render_scene(std::span<const SceneObject> objects, const GridSpec& grid,
                          double sigma_cells);

/// Single object with peak 1.0.
FrameTensors render_frame(Point2 prev_center, Point2 cur_center, Size2 size,
                          const GridSpec& grid, double sigma_cells);

/// A stationary false positive with fixed confidence, present on frames
/// first_frame, first_frame + every, ...
struct Distractor {
    Point2 center;
    Size2 size{24.0, 24.0};
    double confidence = 0.35;
    int first_frame = 0;
    int every = 1;

    bool present(int frame) const {
        return frame >= first_frame && (frame - first_frame) % every == 0;
    }
};

struct SceneSpec {
    TrajectorySpec trajectory;
    double confidence = 1.0;
    /// Every weak_every-th frame (when > 0) the apex peaks at weak_confidence.
    int weak_every = 0;
    double weak_confidence = 0.35;
    std::vector<Distractor> distractors;
};

struct SyntheticSequence {
    GridSpec grid;
    double sigma_cells = 1.0;
    Trajectory truth;
    std::vector<RawFrame> frames;
};

/// Renders the whole scene; sigma defaults to default_sigma of the apex box.
SyntheticSequence synthesize(const SceneSpec& scene, const GridSpec& grid,
                             std::optional<double> sigma_cells = std::nullopt);

/// GT annotations for a trajectory: one image per frame named
/// frame_%06d.jpg and one box per image, shrunk symmetrically if it would
/// leave the image so the centre is preserved.
AnnotationSet ground_truth_annotations(const Trajectory& truth, const GridSpec& grid,
                                       const std::string& video_id);

inline constexpr std::size_t kBruteForceLimit = 6;

/// Exhaustive search over gate-respecting partial matchings. Prefers more
/// matched pairs, then lower total prior-to-tracklet distance, then the
/// lexicographically smaller (detection index, tracklet id) list. Throws
/// SizeError above kBruteForceLimit detections or tracklets.
Matching brute_force_assign(std::span<const Detection> detections,
                            std::span<const Tracklet> tracklets,
                            const DisplacementField& displacement, const TrackerConfig& gate);

/// Sum of prior-to-tracklet distances of a matching.
double matching_cost(const Matching& matching, std::span<const Detection> detections,
                     std::span<const Tracklet> tracklets, const DisplacementField& displacement);

}  // namespace apextrack
