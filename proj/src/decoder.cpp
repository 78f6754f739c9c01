#include "apextrack/decoder.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace apextrack {

void DecodeConfig::validate() const {
    if (top_k < 1) {
        throw ValidationError("decode: top_k must be >= 1");
    }
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
        throw ValidationError("decode: confidence threshold outside [0,1]");
    }
}

namespace {

struct DisjointSet {
    std::vector<std::size_t> parent;

    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }

    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    // Root is always the smaller index, so a component's root is its
    // lowest row-major cell.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

std::vector<Peak> find_peaks(const Heatmap& heatmap) {
    const GridSpec& grid = heatmap.grid();
    const int rows = grid.rows();
    const int cols = grid.cols();
    const std::size_t n = grid.cell_count();

    std::vector<Peak> peaks;
    std::vector<char> candidate(n);
    for (int channel = 0; channel < heatmap.channels(); ++channel) {
        auto value = [&](int col, int row) {
            if (col < 0 || col >= cols || row < 0 || row >= rows) {
                return -std::numeric_limits<float>::infinity();
            }
            return heatmap.at({col, row}, channel);
        };
        auto index = [cols](int col, int row) {
            return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                   static_cast<std::size_t>(col);
        };

        for (int row = 0; row < rows; ++row) {
            for (int col = 0; col < cols; ++col) {
                const float v = value(col, row);
                bool is_max = true;
                for (int dr = -1; dr <= 1 && is_max; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if ((dr != 0 || dc != 0) && value(col + dc, row + dr) > v) {
                            is_max = false;
                            break;
                        }
                    }
                }
                candidate[index(col, row)] = is_max ? 1 : 0;
            }
        }

        DisjointSet plateaus(n);
        for (int row = 0; row < rows; ++row) {
            for (int col = 0; col < cols; ++col) {
                if (!candidate[index(col, row)]) continue;
                const float v = value(col, row);
                // Forward half of the 8-neighbourhood; the rest is covered
                // when the neighbour is visited.
                constexpr int kForward[4][2] = {{1, 0}, {-1, 1}, {0, 1}, {1, 1}};
                for (const auto& [dc, dr] : kForward) {
                    const int c = col + dc;
                    const int r = row + dr;
                    if (c < 0 || c >= cols || r >= rows) continue;
                    if (candidate[index(c, r)] && value(c, r) == v) {
                        plateaus.unite(index(col, row), index(c, r));
                    }
                }
            }
        }

        for (int row = 0; row < rows; ++row) {
            for (int col = 0; col < cols; ++col) {
                const std::size_t i = index(col, row);
                if (candidate[i] && plateaus.find(i) == i) {
                    peaks.push_back({{col, row}, channel, static_cast<double>(value(col, row))});
                }
            }
        }
    }

    std::sort(peaks.begin(), peaks.end(), [cols](const Peak& a, const Peak& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        const long long ia = static_cast<long long>(a.cell.row) * cols + a.cell.col;
        const long long ib = static_cast<long long>(b.cell.row) * cols + b.cell.col;
        if (ia != ib) return ia < ib;
        return a.class_id < b.class_id;
    });
    return peaks;
}

std::vector<Detection> decode(const Heatmap& heatmap, const SizeMap& sizes,
                              const DecodeConfig& config) {
    config.validate();
    if (!heatmap.grid().same_geometry(sizes.grid())) {
        throw ShapeError("decode: heatmap and size map grids differ");
    }

    std::vector<Detection> detections;
    for (const Peak& peak : find_peaks(heatmap)) {
        if (peak.confidence < config.confidence_threshold) break;
        if (detections.size() >= static_cast<std::size_t>(config.top_k)) break;
        const Size2 size{sizes.at(peak.cell, 0), sizes.at(peak.cell, 1)};
        detections.emplace_back(grid_to_image(peak.cell, heatmap.grid()), size, peak.confidence,
                                peak.class_id);
    }
    return detections;
}

}  // namespace apextrack
