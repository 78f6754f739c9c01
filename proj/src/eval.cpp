#include "apextrack/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace apextrack {

namespace {

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

struct FrameEntry {
    double confidence;
    int track_id;
    Point2 center;
};

}  // namespace

EvalReport compute_metrics(const TrackTable& predicted, const GroundTruthTrack& gt,
                           int total_frames, double threshold) {
    if (total_frames <= 0) {
        throw ValidationError("eval: total_frames must be >= 1");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("eval: threshold outside [0,1]");
    }

    std::vector<std::vector<FrameEntry>> per_frame(static_cast<std::size_t>(total_frames));
    auto collect = [&](const Tracklet& t) {
        for (const TrackPoint& p : t.history) {
            if (p.frame >= 0 && p.frame < total_frames) {
                per_frame[static_cast<std::size_t>(p.frame)].push_back(
                    {p.confidence, t.id, p.center});
            }
        }
    };
    for (const auto& t : predicted.active) collect(t);
    for (const auto& t : predicted.retired) collect(t);

    EvalReport report;
    report.video_id = gt.video_id;
    report.total_frames = total_frames;
    report.threshold = threshold;

    double squared_error_sum = 0.0;
    for (int frame = 0; frame < total_frames; ++frame) {
        const GroundTruthSample* truth = gt.at_frame(frame);
        if (truth == nullptr) continue;
        const auto& entries = per_frame[static_cast<std::size_t>(frame)];
        if (entries.empty()) {
            ++report.failed_frames;
            continue;
        }
        if (entries.size() >= 2) {
            ++report.more_object_frames;
        }
        const auto best = std::min_element(
            entries.begin(), entries.end(), [](const FrameEntry& a, const FrameEntry& b) {
                if (a.confidence != b.confidence) return a.confidence > b.confidence;
                return a.track_id < b.track_id;
            });
        const double dx = best->center.x - truth->center.x;
        const double dy = best->center.y - truth->center.y;
        squared_error_sum += dx * dx + dy * dy;
        ++report.evaluated_frames;
    }
    if (report.evaluated_frames > 0) {
        report.center_mse = squared_error_sum / report.evaluated_frames;
    }
    return report;
}

TrackTable track_stream(std::span<const RawFrame> stream, const DecodeConfig& decode_config,
                        const TrackerConfig& tracker_config) {
    TrackTable table;
    for (const RawFrame& raw : stream) {
        const auto detections = decode(raw.heatmap, raw.sizes, decode_config);
        table = associate_frame(detections, std::move(table), raw.displacement, raw.frame,
                                tracker_config);
    }
    return table;
}

std::vector<EvalReport> sweep_thresholds(std::span<const RawFrame> stream,
                                         const GroundTruthTrack& gt,
                                         std::span<const double> thresholds,
                                         const DecodeConfig& decode_config,
                                         const TrackerConfig& tracker_config) {
    if (thresholds.empty()) {
        throw ValidationError("sweep: no thresholds given");
    }
    std::vector<EvalReport> reports;
    reports.reserve(thresholds.size());
    for (const double threshold : thresholds) {
        DecodeConfig config = decode_config;
        config.confidence_threshold = threshold;
        const TrackTable table = track_stream(stream, config, tracker_config);
        reports.push_back(
            compute_metrics(table, gt, static_cast<int>(stream.size()), threshold));
    }
    return reports;
}

namespace {

std::string stroke_for(int id) {
    static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf",
                                               "#bcbd22", "#7f7f7f"};
    constexpr int kPaletteSize = static_cast<int>(std::size(kPalette));
    if (id >= 1 && id <= kPaletteSize) {
        return kPalette[id - 1];
    }
    // Golden-angle hue walk keeps later ids distinct from each other.
    const int hue = static_cast<int>(std::fmod(id * 137.508, 360.0));
    return "hsl(" + std::to_string(hue) + ",70%,45%)";
}

}  // namespace

TraceRender render_trace(const TrackTable& table, const GroundTruthTrack* gt,
                         const GridSpec& canvas) {
    const std::vector<Tracklet> tracklets = table.all_by_id();

    struct Row {
        int frame;
        int id;
        const TrackPoint* point;
    };
    std::vector<Row> rows;
    for (const auto& t : tracklets) {
        for (const auto& p : t.history) rows.push_back({p.frame, t.id, &p});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });

    TraceRender out;
    out.csv.append(kTraceCsvHeader).append("\n");
    for (const Row& row : rows) {
        out.csv += std::to_string(row.frame) + "," + std::to_string(row.id) + "," +
                   shortest(row.point->center.x) + "," + shortest(row.point->center.y) + "," +
                   shortest(row.point->confidence) + "\n";
    }

    std::ostringstream svg;
    const int w = canvas.width_px();
    const int h = canvas.height_px();
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w
        << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
        << "  <rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"white\"/>\n";
    if (gt != nullptr && !gt->samples.empty()) {
        svg << "  <polyline id=\"gt\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" "
               "stroke-dasharray=\"4 2\" points=\"";
        for (std::size_t i = 0; i < gt->samples.size(); ++i) {
            svg << (i ? " " : "") << shortest(gt->samples[i].center.x) << ","
                << shortest(gt->samples[i].center.y);
        }
        svg << "\"/>\n";
    }
    for (const auto& t : tracklets) {
        svg << "  <polyline id=\"track-" << t.id << "\" fill=\"none\" stroke=\""
            << stroke_for(t.id) << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < t.history.size(); ++i) {
            svg << (i ? " " : "") << shortest(t.history[i].center.x) << ","
                << shortest(t.history[i].center.y);
        }
        svg << "\"/>\n";
    }
    svg << "</svg>\n";
    out.svg = svg.str();
    return out;
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(line, std::string("bad ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

TrackTable parse_trace_csv(std::string_view csv) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
        std::size_t end = csv.find('\n', start);
        if (end == std::string_view::npos) end = csv.size();
        std::string_view line = csv.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty() || lines.front() != kTraceCsvHeader) {
        throw ParseError(0, "trace CSV must start with '" + std::string(kTraceCsvHeader) + "'");
    }

    std::map<int, Tracklet> by_id;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t from = 0;
        while (true) {
            const std::size_t comma = line.find(',', from);
            fields.push_back(line.substr(from, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - from));
            if (comma == std::string_view::npos) break;
            from = comma + 1;
        }
        if (fields.size() != 5) {
            throw ParseError(i, "expected 5 fields");
        }
        TrackPoint point;
        point.frame = parse_field<int>(fields[0], i, "frame");
        const int id = parse_field<int>(fields[1], i, "track_id");
        point.center.x = parse_field<double>(fields[2], i, "x");
        point.center.y = parse_field<double>(fields[3], i, "y");
        point.confidence = parse_field<double>(fields[4], i, "confidence");
        if (id < 1) throw ParseError(i, "track_id must be >= 1");

        Tracklet& t = by_id[id];
        t.id = id;
        if (!t.history.empty() && point.frame <= t.history.back().frame) {
            throw ParseError(i, "track " + std::to_string(id) + " frames not increasing");
        }
        try {
            t.last_detection = Detection(point.center, {}, point.confidence);
        } catch (const ValidationError& e) {
            throw ParseError(i, e.what());
        }
        t.last_frame = point.frame;
        t.history.push_back(point);
    }

    TrackTable table;
    for (auto& [id, t] : by_id) {
        table.next_id = std::max(table.next_id, id + 1);
        table.retired.push_back(std::move(t));
    }
    return table;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j{{"video_id", report.video_id},
                             {"center_mse", report.center_mse},
                             {"failed_frames", report.failed_frames},
                             {"more_object_frames", report.more_object_frames},
                             {"total_frames", report.total_frames},
                             {"evaluated_frames", report.evaluated_frames},
                             {"threshold", report.threshold}};
    return j.dump();
}

EvalReport report_from_json(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, e.what());
    }
    auto get = [&]<typename T>(const char* key, T& out) {
        if (!j.is_object() || !j.contains(key)) throw SchemaError(key);
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw SchemaError(key);
        }
    };
    EvalReport report;
    get("video_id", report.video_id);
    get("center_mse", report.center_mse);
    get("failed_frames", report.failed_frames);
    get("more_object_frames", report.more_object_frames);
    get("total_frames", report.total_frames);
    get("evaluated_frames", report.evaluated_frames);
    get("threshold", report.threshold);
    return report;
}

std::string format_report_table(std::span<const EvalReport> reports, bool with_threshold) {
    std::vector<std::string> header{"Video", "Center MSE", "Failed", "More Object",
                                    "Total Frames"};
    if (with_threshold) header.push_back("Tracking Threshold");

    std::vector<std::vector<std::string>> cells;
    for (const auto& r : reports) {
        std::ostringstream mse;
        mse << std::fixed << std::setprecision(9) << r.center_mse;
        std::vector<std::string> row{r.video_id, mse.str(), std::to_string(r.failed_frames),
                                     std::to_string(r.more_object_frames),
                                     std::to_string(r.total_frames)};
        if (with_threshold) {
            std::ostringstream th;
            th << std::fixed << std::setprecision(2) << r.threshold;
            row.push_back(th.str());
        }
        cells.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            if (c == 0) {
                out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
            } else {
                out << std::right << std::setw(static_cast<int>(width[c])) << row[c];
            }
        }
        out << "\n";
    };
    emit(header);
    for (const auto& row : cells) emit(row);
    return out.str();
}

}  // namespace apextrack
