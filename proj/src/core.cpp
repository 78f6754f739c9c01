#include "apextrack/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace apextrack {

const char* to_string(TensorFormatErrorKind kind) noexcept {
    switch (kind) {
        case TensorFormatErrorKind::BadMagic: return "bad magic";
        case TensorFormatErrorKind::VersionMismatch: return "version mismatch";
        case TensorFormatErrorKind::Truncated: return "truncated payload";
        case TensorFormatErrorKind::NaNPayload: return "NaN payload";
        case TensorFormatErrorKind::BadKind: return "bad tensor kind";
        case TensorFormatErrorKind::BadShape: return "bad shape";
        case TensorFormatErrorKind::InvalidValue: return "invalid value";
        case TensorFormatErrorKind::TrailingData: return "trailing data";
    }
    return "unknown";
}

GridSpec::GridSpec(int width_px, int height_px, int downsample, int classes)
    : width_px_(width_px), height_px_(height_px), downsample_(downsample), classes_(classes) {
    if (width_px <= 0 || height_px <= 0) {
        throw ValidationError("grid: image size must be positive");
    }
    if (downsample < 1) {
        throw ValidationError("grid: downsample must be >= 1");
    }
    if (width_px % downsample != 0 || height_px % downsample != 0) {
        throw ValidationError("grid: " + std::to_string(width_px) + "x" +
                              std::to_string(height_px) + " not divisible by R=" +
                              std::to_string(downsample));
    }
    if (classes < 1) {
        throw ValidationError("grid: classes must be >= 1");
    }
}

Point2 grid_to_image(Cell cell, const GridSpec& grid) {
    if (!grid.contains(cell)) {
        throw RangeError("cell (" + std::to_string(cell.col) + "," + std::to_string(cell.row) +
                         ") outside grid");
    }
    const double r = grid.downsample();
    return {(cell.col + 0.5) * r - 0.5, (cell.row + 0.5) * r - 0.5};
}

Cell image_to_grid(Point2 point, const GridSpec& grid) {
    // !(a < b) form also rejects NaN.
    if (!(point.x >= 0.0 && point.x < grid.width_px() && point.y >= 0.0 &&
          point.y < grid.height_px())) {
        throw RangeError("point (" + std::to_string(point.x) + "," + std::to_string(point.y) +
                         ") outside image");
    }
    const double r = grid.downsample();
    const int col = static_cast<int>(std::floor((point.x + 0.5) / r));
    const int row = static_cast<int>(std::floor((point.y + 0.5) / r));
    return {std::clamp(col, 0, grid.cols() - 1), std::clamp(row, 0, grid.rows() - 1)};
}

template <TensorKind Kind>
void GridTensor<Kind>::validate() const {
    const std::size_t expected = grid_.cell_count() * static_cast<std::size_t>(channels());
    if (values_.size() != expected) {
        throw ShapeError("tensor holds " + std::to_string(values_.size()) + " values, grid needs " +
                         std::to_string(expected));
    }
    for (const float v : values_) {
        if (!std::isfinite(v)) {
            throw ValidationError("tensor value not finite");
        }
        if constexpr (Kind == TensorKind::Heatmap) {
            if (v < 0.0f || v > 1.0f) {
                throw ValidationError("heatmap value outside [0,1]");
            }
        } else if constexpr (Kind == TensorKind::Size) {
            if (v < 0.0f) {
                throw ValidationError("negative size");
            }
        }
    }
}

template class GridTensor<TensorKind::Heatmap>;
template class GridTensor<TensorKind::Size>;
template class GridTensor<TensorKind::Displacement>;

Detection::Detection(Point2 center_, Size2 size_, double confidence_, int class_id_)
    : center(center_), size(size_), confidence(confidence_), class_id(class_id_) {
    if (!(std::isfinite(center.x) && std::isfinite(center.y) && center.x >= 0.0 &&
          center.y >= 0.0)) {
        throw ValidationError("detection centre must be finite and non-negative");
    }
    if (!(std::isfinite(size.w) && std::isfinite(size.h) && size.w >= 0.0 && size.h >= 0.0)) {
        throw ValidationError("detection size must be finite and non-negative");
    }
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw ValidationError("detection confidence outside [0,1]");
    }
}

std::vector<Tracklet> TrackTable::all_by_id() const {
    std::vector<Tracklet> all;
    all.reserve(size());
    all.insert(all.end(), active.begin(), active.end());
    all.insert(all.end(), retired.begin(), retired.end());
    std::sort(all.begin(), all.end(),
              [](const Tracklet& a, const Tracklet& b) { return a.id < b.id; });
    return all;
}

void validate(const TrackTable& table) {
    std::set<int> ids;
    auto check = [&](const Tracklet& t) {
        if (t.id < 1) {
            throw ValidationError("tracklet id must be >= 1");
        }
        if (!ids.insert(t.id).second) {
            throw ValidationError("duplicate tracklet id " + std::to_string(t.id));
        }
        if (t.id >= table.next_id) {
            throw ValidationError("next_id not above tracklet id " + std::to_string(t.id));
        }
        if (t.history.empty() || t.history.back().frame != t.last_frame) {
            throw ValidationError("tracklet " + std::to_string(t.id) +
                                  " history does not end at last_frame");
        }
        for (std::size_t i = 1; i < t.history.size(); ++i) {
            if (t.history[i].frame <= t.history[i - 1].frame) {
                throw ValidationError("tracklet " + std::to_string(t.id) +
                                      " history not strictly increasing");
            }
        }
    };
    for (const auto& t : table.active) check(t);
    for (const auto& t : table.retired) check(t);
    if (table.next_id < 1) {
        throw ValidationError("next_id must be >= 1");
    }
}

}  // namespace apextrack
