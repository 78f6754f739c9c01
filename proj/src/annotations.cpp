#include "apextrack/annotations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

namespace apextrack {

namespace pt = boost::property_tree;
using ordered_json = nlohmann::ordered_json;

void validate(const AnnotationSet& annotations) {
    std::map<long long, const ImageRecord*> images;
    for (const auto& image : annotations.images) {
        if (!images.emplace(image.image_id, &image).second) {
            throw ValidationError("duplicate image id " + std::to_string(image.image_id));
        }
        if (image.width <= 0 || image.height <= 0) {
            throw ValidationError("image " + std::to_string(image.image_id) +
                                  " has non-positive size");
        }
    }
    std::set<long long> annotation_ids;
    for (const auto& box : annotations.boxes) {
        const std::string tag = "annotation " + std::to_string(box.annotation_id);
        if (!annotation_ids.insert(box.annotation_id).second) {
            throw ValidationError("duplicate " + tag);
        }
        auto it = images.find(box.image_id);
        if (it == images.end()) {
            throw ValidationError(tag + " references unknown image " +
                                  std::to_string(box.image_id));
        }
        if (!(box.w >= 0.0 && box.h >= 0.0)) {
            throw ValidationError(tag + " has negative extent");
        }
        const ImageRecord& image = *it->second;
        if (!(box.x >= 0.0 && box.y >= 0.0 && box.x < image.width && box.y < image.height &&
              box.x + box.w <= image.width && box.y + box.h <= image.height)) {
            throw ValidationError(tag + " leaves image bounds");
        }
    }
}

namespace {

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::optional<unsigned long long> trailing_number(const std::string& file_name) {
    std::string stem = file_name;
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) {
        stem = stem.substr(0, dot);
    }
    auto last = stem.find_last_of("0123456789");
    if (last == std::string::npos) return std::nullopt;
    auto first = stem.find_last_not_of("0123456789", last);
    first = first == std::string::npos ? 0 : first + 1;
    const std::string digits = stem.substr(first, last - first + 1);
    unsigned long long value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{}) return std::nullopt;
    return value;
}

/// Rewrites frame_index of every image in the listed positions.
void assign_frame_indices(std::vector<ImageRecord>& images,
                          const std::vector<std::size_t>& positions) {
    bool numeric = true;
    std::vector<std::optional<unsigned long long>> numbers;
    for (const std::size_t p : positions) {
        numbers.push_back(trailing_number(images[p].file_name));
        numeric = numeric && numbers.back().has_value();
    }
    std::vector<std::size_t> order(positions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const ImageRecord& ia = images[positions[a]];
        const ImageRecord& ib = images[positions[b]];
        if (numeric && *numbers[a] != *numbers[b]) return *numbers[a] < *numbers[b];
        return ia.file_name < ib.file_name;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        images[positions[order[rank]]].frame_index = static_cast<int>(rank);
    }
}

void assign_frame_indices(std::vector<ImageRecord>& images) {
    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t i = 0; i < images.size(); ++i) {
        by_video[images[i].video_id].push_back(i);
    }
    for (const auto& [video, positions] : by_video) {
        assign_frame_indices(images, positions);
    }
}

double read_coordinate(const pt::ptree& bndbox, const char* key, std::size_t doc) {
    const auto value = bndbox.get_optional<std::string>(key);
    if (!value) {
        throw ValidationError("document " + std::to_string(doc) + ": bndbox missing " + key);
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(*value, &used);
        if (!std::isfinite(v)) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("document " + std::to_string(doc) + ": bndbox " + key +
                              " is not a number");
    }
}

}  // namespace

AnnotationSet parse_voc(const std::vector<std::string>& xml_documents) {
    AnnotationSet result;
    long long next_annotation = 1;
    for (std::size_t doc = 0; doc < xml_documents.size(); ++doc) {
        pt::ptree tree;
        try {
            std::istringstream in(xml_documents[doc]);
            pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
        } catch (const pt::xml_parser_error& e) {
            throw ParseError(doc, e.message() + " at line " + std::to_string(e.line()));
        }
        const auto root = tree.get_child_optional("annotation");
        if (!root) {
            throw ParseError(doc, "no <annotation> root element");
        }
        const std::string where = "document " + std::to_string(doc) + ": ";

        ImageRecord image;
        image.image_id = static_cast<long long>(doc) + 1;
        image.file_name = root->get<std::string>("filename", "");
        if (image.file_name.empty()) {
            throw ValidationError(where + "missing <filename>");
        }
        image.video_id = root->get<std::string>("folder", "default");
        const auto size = root->get_child_optional("size");
        if (!size) {
            throw ValidationError(where + "missing <size>");
        }
        try {
            image.width = size->get<int>("width");
            image.height = size->get<int>("height");
        } catch (const pt::ptree_error&) {
            throw ValidationError(where + "<size> lacks integer width/height");
        }
        if (image.width <= 0 || image.height <= 0) {
            throw ValidationError(where + "non-positive image size");
        }

        for (const auto& [tag, object] : *root) {
            if (tag != "object") continue;
            const auto bndbox = object.get_child_optional("bndbox");
            if (!bndbox) {
                throw ValidationError(where + "object without <bndbox>");
            }
            const double xmin = read_coordinate(*bndbox, "xmin", doc);
            const double ymin = read_coordinate(*bndbox, "ymin", doc);
            const double xmax = read_coordinate(*bndbox, "xmax", doc);
            const double ymax = read_coordinate(*bndbox, "ymax", doc);
            if (xmax < xmin || ymax < ymin) {
                throw ValidationError(where + "bndbox max below min");
            }
            if (xmin < 1.0 || ymin < 1.0 || xmax > image.width || ymax > image.height) {
                throw ValidationError(where + "bndbox outside the image");
            }
            result.boxes.push_back(
                {next_annotation++, image.image_id, 1, xmin - 1.0, ymin - 1.0,
                 xmax - xmin + 1.0, ymax - ymin + 1.0});
        }
        result.images.push_back(std::move(image));
    }
    assign_frame_indices(result.images);
    validate(result);
    return result;
}

std::string render_voc(const AnnotationSet& annotations, long long image_id) {
    auto it = std::find_if(annotations.images.begin(), annotations.images.end(),
                           [&](const ImageRecord& r) { return r.image_id == image_id; });
    if (it == annotations.images.end()) {
        throw ValidationError("render_voc: unknown image " + std::to_string(image_id));
    }
    std::ostringstream out;
    out << "<annotation>\n"
        << "\t<folder>" << it->video_id << "</folder>\n"
        << "\t<filename>" << it->file_name << "</filename>\n"
        << "\t<size>\n"
        << "\t\t<width>" << it->width << "</width>\n"
        << "\t\t<height>" << it->height << "</height>\n"
        << "\t\t<depth>3</depth>\n"
        << "\t</size>\n";
    for (const auto& box : annotations.boxes) {
        if (box.image_id != image_id) continue;
        out << "\t<object>\n"
            << "\t\t<name>" << kApexCategory << "</name>\n"
            << "\t\t<bndbox>\n"
            << "\t\t\t<xmin>" << format_number(box.x + 1.0) << "</xmin>\n"
            << "\t\t\t<ymin>" << format_number(box.y + 1.0) << "</ymin>\n"
            << "\t\t\t<xmax>" << format_number(box.x + box.w) << "</xmax>\n"
            << "\t\t\t<ymax>" << format_number(box.y + box.h) << "</ymax>\n"
            << "\t\t</bndbox>\n"
            << "\t</object>\n";
    }
    out << "</annotation>\n";
    return out.str();
}

std::string emit_coco(const AnnotationSet& annotations) {
    validate(annotations);
    ordered_json doc;
    doc["images"] = ordered_json::array();
    doc["annotations"] = ordered_json::array();
    doc["categories"] = ordered_json::array();
    for (const auto& image : annotations.images) {
        doc["images"].push_back(ordered_json{{"id", image.image_id},
                                             {"file_name", image.file_name},
                                             {"width", image.width},
                                             {"height", image.height},
                                             {"frame_index", image.frame_index},
                                             {"video_id", image.video_id}});
    }
    for (const auto& box : annotations.boxes) {
        doc["annotations"].push_back(ordered_json{{"id", box.annotation_id},
                                                  {"image_id", box.image_id},
                                                  {"category_id", box.class_id},
                                                  {"bbox", {box.x, box.y, box.w, box.h}},
                                                  {"area", box.w * box.h},
                                                  {"iscrowd", 0}});
    }
    doc["categories"].push_back(
        ordered_json{{"id", 1}, {"name", std::string(kApexCategory)}, {"supercategory", "plant"}});
    return doc.dump(2) + "\n";
}

namespace {

const nlohmann::json& require(const nlohmann::json& object, const std::string& key,
                              const std::string& path) {
    if (!object.is_object() || !object.contains(key)) {
        throw SchemaError(path + key);
    }
    return object.at(key);
}

template <typename T>
T require_as(const nlohmann::json& object, const std::string& key, const std::string& path) {
    const auto& value = require(object, key, path);
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(path + key);
    }
}

}  // namespace

AnnotationSet parse_coco(std::string_view json) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, e.what());
    }

    AnnotationSet result;
    const auto& images = require(doc, "images", "");
    const auto& boxes = require(doc, "annotations", "");
    require(doc, "categories", "");
    if (!images.is_array()) throw SchemaError("images");
    if (!boxes.is_array()) throw SchemaError("annotations");

    bool missing_frame_index = false;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& entry = images[i];
        const std::string path = "images[" + std::to_string(i) + "].";
        ImageRecord image;
        image.image_id = require_as<long long>(entry, "id", path);
        image.file_name = require_as<std::string>(entry, "file_name", path);
        image.width = require_as<int>(entry, "width", path);
        image.height = require_as<int>(entry, "height", path);
        if (entry.contains("frame_index")) {
            image.frame_index = require_as<int>(entry, "frame_index", path);
        } else {
            missing_frame_index = true;
        }
        image.video_id = entry.contains("video_id")
                             ? require_as<std::string>(entry, "video_id", path)
                             : std::string("default");
        result.images.push_back(std::move(image));
    }
    if (missing_frame_index) {
        assign_frame_indices(result.images);
    }

    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& entry = boxes[i];
        const std::string path = "annotations[" + std::to_string(i) + "].";
        BoxRecord box;
        box.annotation_id = require_as<long long>(entry, "id", path);
        box.image_id = require_as<long long>(entry, "image_id", path);
        box.class_id = entry.contains("category_id") ? require_as<int>(entry, "category_id", path)
                                                     : 1;
        const auto bbox = require_as<std::vector<double>>(entry, "bbox", path);
        if (bbox.size() != 4) throw SchemaError(path + "bbox");
        box.x = bbox[0];
        box.y = bbox[1];
        box.w = bbox[2];
        box.h = bbox[3];
        result.boxes.push_back(box);
    }
    validate(result);
    return result;
}

const GroundTruthSample* GroundTruthTrack::at_frame(int frame_index) const {
    auto it = std::lower_bound(
        samples.begin(), samples.end(), frame_index,
        [](const GroundTruthSample& s, int frame) { return s.frame_index < frame; });
    return it != samples.end() && it->frame_index == frame_index ? &*it : nullptr;
}

std::vector<GroundTruthTrack> gt_tracks(const AnnotationSet& annotations) {
    validate(annotations);
    std::map<long long, const BoxRecord*> box_of_image;
    for (const auto& box : annotations.boxes) {
        if (!box_of_image.emplace(box.image_id, &box).second) {
            throw AmbiguityError(box.image_id);
        }
    }

    std::map<std::string, GroundTruthTrack> tracks;
    for (const auto& image : annotations.images) {
        auto& track = tracks[image.video_id];
        track.video_id = image.video_id;
        auto it = box_of_image.find(image.image_id);
        if (it == box_of_image.end()) continue;
        const BoxRecord& box = *it->second;
        track.samples.push_back(
            {image.frame_index, {box.x + box.w / 2.0, box.y + box.h / 2.0}, {box.w, box.h}});
    }

    std::vector<GroundTruthTrack> result;
    for (auto& [video, track] : tracks) {
        std::sort(track.samples.begin(), track.samples.end(),
                  [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
        for (std::size_t i = 1; i < track.samples.size(); ++i) {
            if (track.samples[i].frame_index == track.samples[i - 1].frame_index) {
                throw ValidationError("video " + video + " repeats frame " +
                                      std::to_string(track.samples[i].frame_index));
            }
        }
        result.push_back(std::move(track));
    }
    return result;
}

int frame_count(const AnnotationSet& annotations, std::string_view video_id) {
    return static_cast<int>(std::count_if(
        annotations.images.begin(), annotations.images.end(),
        [&](const ImageRecord& image) { return image.video_id == video_id; }));
}

}  // namespace apextrack
