#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apextrack/errors.hpp"

namespace apextrack {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Size2 {
    double w = 0.0;
    double h = 0.0;

    friend bool operator==(const Size2&, const Size2&) = default;
};

/// Heatmap cell, column-major naming: col indexes x, row indexes y.
struct Cell {
    int col = 0;
    int row = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Image size, down-sampling factor and class count of a detector output.
class GridSpec {
public:
    /// Throws ValidationError unless width/height are positive multiples of
    /// downsample and classes >= 1.
    GridSpec(int width_px, int height_px, int downsample = 4, int classes = 1);

    int width_px() const noexcept { return width_px_; }
    int height_px() const noexcept { return height_px_; }
    int downsample() const noexcept { return downsample_; }
    int classes() const noexcept { return classes_; }

    int cols() const noexcept { return width_px_ / downsample_; }
    int rows() const noexcept { return height_px_ / downsample_; }
    std::size_t cell_count() const noexcept {
        return static_cast<std::size_t>(cols()) * static_cast<std::size_t>(rows());
    }

    bool contains(Cell cell) const noexcept {
        return cell.col >= 0 && cell.col < cols() && cell.row >= 0 && cell.row < rows();
    }

    /// Same W, H and R; class count is ignored.
    bool same_geometry(const GridSpec& other) const noexcept {
        return width_px_ == other.width_px_ && height_px_ == other.height_px_ &&
               downsample_ == other.downsample_;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    int width_px_;
    int height_px_;
    int downsample_;
    int classes_;
};

/// Centre of `cell` in image pixels: ((col + 0.5)R - 0.5, (row + 0.5)R - 0.5).
Point2 grid_to_image(Cell cell, const GridSpec& grid);

/// Nearest cell to `point`, clamped to the grid. Throws RangeError unless
/// 0 <= x < W and 0 <= y < H.
Cell image_to_grid(Point2 point, const GridSpec& grid);

enum class TensorKind : std::uint8_t {
    Heatmap = 1,
    Size = 2,
    Displacement = 3,
};

/// Dense (rows, cols, channels) float tensor laid over a grid, row-major.
///
/// Heatmaps carry one channel per class with values in [0,1]; size maps and
/// displacement fields carry two channels (w,h or dx,dy) in image pixels.
/// Value invariants are checked on construction and by `validate()`.
template <TensorKind Kind>
class GridTensor {
public:
    static constexpr TensorKind kind = Kind;

    /// Zero-filled tensor.
    explicit GridTensor(GridSpec grid)
        : grid_(grid), values_(grid.cell_count() * channels_for(grid), 0.0f) {}

    GridTensor(GridSpec grid, std::vector<float> values)
        : grid_(grid), values_(std::move(values)) {
        validate();
    }

    static int channels_for(const GridSpec& grid) noexcept {
        return Kind == TensorKind::Heatmap ? grid.classes() : 2;
    }

    const GridSpec& grid() const noexcept { return grid_; }
    int channels() const noexcept { return channels_for(grid_); }
    std::span<const float> values() const noexcept { return values_; }

    float at(Cell cell, int channel = 0) const { return values_[offset(cell, channel)]; }

    /// Unchecked write; call validate() after bulk edits.
    void set(Cell cell, int channel, float value) { values_[offset(cell, channel)] = value; }

    /// Throws ShapeError on a size mismatch and ValidationError on a value
    /// outside the kind's domain.
    void validate() const;

    friend bool operator==(const GridTensor&, const GridTensor&) = default;

private:
    std::size_t offset(Cell cell, int channel) const {
        if (!grid_.contains(cell) || channel < 0 || channel >= channels()) {
            throw RangeError("tensor index out of range");
        }
        return (static_cast<std::size_t>(cell.row) * static_cast<std::size_t>(grid_.cols()) +
                static_cast<std::size_t>(cell.col)) *
                   static_cast<std::size_t>(channels()) +
               static_cast<std::size_t>(channel);
    }

    GridSpec grid_;
    std::vector<float> values_;
};

using Heatmap = GridTensor<TensorKind::Heatmap>;
using SizeMap = GridTensor<TensorKind::Size>;
using DisplacementField = GridTensor<TensorKind::Displacement>;

extern template class GridTensor<TensorKind::Heatmap>;
extern template class GridTensor<TensorKind::Size>;
extern template class GridTensor<TensorKind::Displacement>;

/// A decoded object: centre and box size in image pixels, confidence in [0,1].
struct Detection {
    Point2 center;
    Size2 size;
    double confidence = 0.0;
    int class_id = 0;

    Detection() = default;
    /// Throws ValidationError on negative/non-finite coordinates or sizes, or
    /// a confidence outside [0,1].
    Detection(Point2 center, Size2 size, double confidence, int class_id = 0);

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct TrackPoint {
    int frame = 0;
    Point2 center;
    double confidence = 0.0;

    friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct Tracklet {
    int id = 0;
    Detection last_detection;
    int last_frame = 0;
    std::vector<TrackPoint> history;

    friend bool operator==(const Tracklet&, const Tracklet&) = default;
};

struct TrackTable {
    std::vector<Tracklet> active;
    std::vector<Tracklet> retired;
    int next_id = 1;
    /// Last frame index handed to the tracker, if any.
    std::optional<int> last_frame;

    /// Active and retired tracklets ordered by id.
    std::vector<Tracklet> all_by_id() const;

    std::size_t size() const noexcept { return active.size() + retired.size(); }

    friend bool operator==(const TrackTable&, const TrackTable&) = default;
};

/// Throws ValidationError if ids collide, next_id is not above every id, or
/// a tracklet's history is not strictly increasing and ending at last_frame.
void validate(const TrackTable& table);

}  // namespace apextrack
