#pragma once

#include <vector>

#include "apextrack/core.hpp"

namespace apextrack {

struct DecodeConfig {
    int top_k = 100;
    /// Tracking threshold: peaks below it are dropped.
    double confidence_threshold = 0.3;

    /// Throws ValidationError unless top_k >= 1 and the threshold is in [0,1].
    void validate() const;
};

struct Peak {
    Cell cell;
    int class_id = 0;
    double confidence = 0.0;

    friend bool operator==(const Peak&, const Peak&) = default;
};

/// Local maxima of every heatmap channel.
///
/// A cell is a candidate when its value is >= all eight neighbours
/// (out-of-bounds neighbours count as -inf). Candidates of equal value that
/// are 8-connected through other candidates form one plateau, represented by
/// its lowest row-major cell. Sorted by confidence descending, then row-major
/// index, then class.
std::vector<Peak> find_peaks(const Heatmap& heatmap);

/// Peaks at or above the threshold, truncated to top_k, as image-space
/// detections (cell-centre position, size read from `sizes` at the cell).
/// Throws ShapeError if the two tensors do not share a grid geometry.
std::vector<Detection> decode(const Heatmap& heatmap, const SizeMap& sizes,
                              const DecodeConfig& config);

}  // namespace apextrack
