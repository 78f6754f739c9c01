#pragma once

// Independent reference implementations and random-instance generators used
// only by the test suites. Nothing here calls the code path it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "apextrack/annotations.hpp"
#include "apextrack/core.hpp"
#include "apextrack/decoder.hpp"
#include "apextrack/eval.hpp"
#include "apextrack/tracker.hpp"

namespace apextrack::testing {

/// Peak rule by enumeration: every cell is tested against its neighbours,
/// then plateau membership is found by repeatedly relaxing a min-label over
/// equal-valued candidate neighbours until nothing changes.
inline std::vector<Peak> naive_peaks(const Heatmap& heatmap) {
    const int rows = heatmap.grid().rows();
    const int cols = heatmap.grid().cols();
    std::vector<Peak> out;
    for (int ch = 0; ch < heatmap.channels(); ++ch) {
        auto v = [&](int c, int r) { return heatmap.at({c, r}, ch); };
        auto inside = [&](int c, int r) { return c >= 0 && c < cols && r >= 0 && r < rows; };
        std::vector<int> label(static_cast<std::size_t>(rows * cols), -1);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                bool ok = true;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        if ((dr || dc) && inside(c + dc, r + dr) && v(c + dc, r + dr) > v(c, r))
                            ok = false;
                if (ok) label[static_cast<std::size_t>(r * cols + c)] = r * cols + c;
            }
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) {
                    int& mine = label[static_cast<std::size_t>(r * cols + c)];
                    if (mine < 0) continue;
                    for (int dr = -1; dr <= 1; ++dr) {
                        for (int dc = -1; dc <= 1; ++dc) {
                            if (!(dr || dc) || !inside(c + dc, r + dr)) continue;
                            const int other =
                                label[static_cast<std::size_t>((r + dr) * cols + c + dc)];
                            if (other >= 0 && v(c + dc, r + dr) == v(c, r) && other < mine) {
                                mine = other;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (label[static_cast<std::size_t>(r * cols + c)] == r * cols + c)
                    out.push_back({{c, r}, ch, static_cast<double>(v(c, r))});
    }
    std::sort(out.begin(), out.end(), [cols](const Peak& a, const Peak& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        const int ia = a.cell.row * cols + a.cell.col;
        const int ib = b.cell.row * cols + b.cell.col;
        if (ia != ib) return ia < ib;
        return a.class_id < b.class_id;
    });
    return out;
}

/// Metrics by a per-frame scan of every tracklet's history.
inline EvalReport naive_metrics(const TrackTable& table, const GroundTruthTrack& gt,
                                int total_frames, double threshold) {
    std::vector<Tracklet> all = table.active;
    all.insert(all.end(), table.retired.begin(), table.retired.end());
    EvalReport r;
    r.video_id = gt.video_id;
    r.total_frames = total_frames;
    r.threshold = threshold;
    double sum = 0.0;
    for (int f = 0; f < total_frames; ++f) {
        const GroundTruthSample* truth = nullptr;
        for (const auto& s : gt.samples)
            if (s.frame_index == f) truth = &s;
        if (!truth) continue;
        int count = 0;
        double best_conf = -1.0;
        int best_id = 0;
        Point2 best_center;
        for (const auto& t : all) {
            for (const auto& p : t.history) {
                if (p.frame != f) continue;
                ++count;
                if (p.confidence > best_conf || (p.confidence == best_conf && t.id < best_id)) {
                    best_conf = p.confidence;
                    best_id = t.id;
                    best_center = p.center;
                }
            }
        }
        if (count == 0) {
            ++r.failed_frames;
            continue;
        }
        if (count > 1) ++r.more_object_frames;
        sum += std::pow(best_center.x - truth->center.x, 2) +
               std::pow(best_center.y - truth->center.y, 2);
        ++r.evaluated_frames;
    }
    r.center_mse = r.evaluated_frames ? sum / r.evaluated_frames : 0.0;
    return r;
}

/// Random track table + GT pair with missing GT frames, failed frames and
/// multi-object frames.
struct TrackGtPair {
    TrackTable table;
    GroundTruthTrack gt;
    int total_frames = 0;
};

inline TrackGtPair random_track_gt_pair(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> frames_dist(1, 60);
    std::uniform_real_distribution<double> coord(0.0, 500.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    TrackGtPair pair;
    pair.total_frames = frames_dist(rng);
    pair.gt.video_id = "v" + std::to_string(rng() % 100);
    for (int f = 0; f < pair.total_frames; ++f) {
        if (unit(rng) < 0.1) continue;  // missing GT
        pair.gt.samples.push_back({f, {coord(rng), coord(rng)}, {20.0, 20.0}});
    }
    const int tracks = static_cast<int>(rng() % 5);
    for (int id = 1; id <= tracks; ++id) {
        Tracklet t;
        t.id = id;
        // Frames may run past total_frames; those must be ignored.
        for (int f = 0; f < pair.total_frames + 3; ++f) {
            if (unit(rng) < 0.5) continue;
            // Quantised confidences make equal-confidence ties common.
            const double conf = std::round(unit(rng) * 4.0) / 4.0;
            t.history.push_back({f, {coord(rng), coord(rng)}, conf});
        }
        if (t.history.empty()) continue;
        t.last_frame = t.history.back().frame;
        t.last_detection = Detection(t.history.back().center, {10, 10}, t.history.back().confidence);
        (id % 2 ? pair.table.active : pair.table.retired).push_back(std::move(t));
    }
    pair.table.next_id = tracks + 1;
    return pair;
}

/// Heatmap of disjoint constant-valued blobs on a zero background; returns
/// the lowest row-major cell of every blob.
struct PlateauHeatmap {
    Heatmap heatmap;
    std::vector<Peak> expected;
};

inline PlateauHeatmap random_plateaus(std::mt19937_64& rng, const GridSpec& grid, int blobs) {
    Heatmap hm(grid);
    const int rows = grid.rows();
    const int cols = grid.cols();
    std::vector<int> owner(static_cast<std::size_t>(rows * cols), -1);
    auto touches_other = [&](int c, int r, int blob) {
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                const int cc = c + dc, rr = r + dr;
                if (cc < 0 || cc >= cols || rr < 0 || rr >= rows) continue;
                const int o = owner[static_cast<std::size_t>(rr * cols + cc)];
                if (o >= 0 && o != blob) return true;
            }
        return false;
    };
    std::vector<Peak> expected;
    std::uniform_int_distribution<int> col_dist(0, cols - 1), row_dist(0, rows - 1);
    for (int b = 0; b < blobs; ++b) {
        // Distinct quantised value per blob.
        const float value = static_cast<float>(b + 1) / static_cast<float>(blobs + 1);
        int c = col_dist(rng), r = row_dist(rng);
        int tries = 0;
        while ((owner[static_cast<std::size_t>(r * cols + c)] >= 0 || touches_other(c, r, b)) &&
               tries++ < 1000) {
            c = col_dist(rng);
            r = row_dist(rng);
        }
        if (tries >= 1000) break;
        std::vector<Cell> cells{{c, r}};
        owner[static_cast<std::size_t>(r * cols + c)] = b;
        const int grow = static_cast<int>(rng() % 8);
        for (int g = 0; g < grow; ++g) {
            const Cell from = cells[rng() % cells.size()];
            const int nc = from.col + static_cast<int>(rng() % 3) - 1;
            const int nr = from.row + static_cast<int>(rng() % 3) - 1;
            if (nc < 0 || nc >= cols || nr < 0 || nr >= rows) continue;
            if (owner[static_cast<std::size_t>(nr * cols + nc)] >= 0 || touches_other(nc, nr, b))
                continue;
            owner[static_cast<std::size_t>(nr * cols + nc)] = b;
            cells.push_back({nc, nr});
        }
        Cell lowest = cells.front();
        for (const Cell& cell : cells) {
            hm.set(cell, 0, value);
            if (cell.row * cols + cell.col < lowest.row * cols + lowest.col) lowest = cell;
        }
        expected.push_back({lowest, 0, static_cast<double>(value)});
    }
    std::sort(expected.begin(), expected.end(),
              [](const Peak& a, const Peak& b) { return a.confidence > b.confidence; });
    return {std::move(hm), std::move(expected)};
}

/// Random heatmap; `levels` > 0 quantises values to produce plateaus.
inline Heatmap random_heatmap(std::mt19937_64& rng, const GridSpec& grid, int levels) {
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::vector<float> values(grid.cell_count() * static_cast<std::size_t>(grid.classes()));
    for (auto& v : values) {
        v = unit(rng);
        if (levels > 0) v = std::round(v * static_cast<float>(levels)) / static_cast<float>(levels);
    }
    return Heatmap(grid, std::move(values));
}


/// One association problem: detections of the current frame, the tracklets
/// they may continue, and a displacement field carrying each detection's
/// exact motion at its own cell.
struct AssociationInstance {
    std::vector<Detection> detections;
    std::vector<Tracklet> tracklets;
    DisplacementField displacement;
};

/// Up to `max_objects` objects that persist, vanish or appear. Every
/// tracklet position, detection position and predicted prior is more than
/// 2 * max gate radius from every other, so each gate holds at most the
/// detection's own tracklet.
inline AssociationInstance random_separated_instance(std::mt19937_64& rng, const GridSpec& grid,
                                                     int max_objects) {
    std::uniform_real_distribution<double> side(8.0, 20.0);
    std::uniform_real_distribution<double> xs(0.0, grid.width_px() - 1.0);
    std::uniform_real_distribution<double> ys(0.0, grid.height_px() - 1.0);
    std::uniform_real_distribution<double> conf(0.3, 1.0);
    const double max_gate = 20.0;

    for (;;) {
        AssociationInstance inst{{}, {}, DisplacementField(grid)};
        const int objects = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_objects));
        std::vector<Point2> used;
        auto far_point = [&](Point2& out) {
            for (int tries = 0; tries < 200; ++tries) {
                const Point2 p{xs(rng), ys(rng)};
                bool ok = true;
                for (const auto& q : used)
                    if (std::hypot(p.x - q.x, p.y - q.y) <= 2.0 * max_gate) ok = false;
                if (ok) {
                    used.push_back(p);
                    out = p;
                    return true;
                }
            }
            return false;
        };
        bool ok = true;
        int next_id = 1 + static_cast<int>(rng() % 5);
        for (int o = 0; o < objects && ok; ++o) {
            const int role = static_cast<int>(rng() % 4);  // 0,1 persist; 2 vanish; 3 appear
            Point2 prev, cur;
            const Size2 size{side(rng), side(rng)};
            if (role != 3) {
                ok = ok && far_point(prev);
                Tracklet t;
                t.id = next_id++;
                t.last_frame = 0;
                t.last_detection = Detection(prev, size, conf(rng));
                t.history.push_back({0, prev, t.last_detection.confidence});
                inst.tracklets.push_back(std::move(t));
            }
            if (role == 2) continue;
            ok = ok && far_point(cur);
            if (!ok) break;
            Point2 prior = prev;
            if (role == 3) ok = ok && far_point(prior);  // a fresh object's prior is empty space
            if (!ok) break;
            const Detection det(cur, size, conf(rng));
            const Cell cell = image_to_grid(cur, grid);
            inst.displacement.set(cell, 0, static_cast<float>(cur.x - prior.x));
            inst.displacement.set(cell, 1, static_cast<float>(cur.y - prior.y));
            inst.detections.push_back(det);
        }
        if (!ok) continue;
        std::shuffle(inst.detections.begin(), inst.detections.end(), rng);
        std::shuffle(inst.tracklets.begin(), inst.tracklets.end(), rng);
        return inst;
    }
}

}  // namespace apextrack::testing
