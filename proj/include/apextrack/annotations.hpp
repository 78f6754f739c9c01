#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "apextrack/core.hpp"

namespace apextrack {

struct ImageRecord {
    long long image_id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
    int frame_index = 0;
    std::string video_id;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// COCO-style box: top-left corner plus extent, 0-based pixels.
struct BoxRecord {
    long long annotation_id = 0;
    long long image_id = 0;
    int class_id = 1;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    friend bool operator==(const BoxRecord&, const BoxRecord&) = default;
};

struct AnnotationSet {
    std::vector<ImageRecord> images;
    std::vector<BoxRecord> boxes;

    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

/// Throws ValidationError on duplicate ids, dangling image references,
/// negative extents or boxes leaving their image.
void validate(const AnnotationSet& annotations);

/// Name of the single category written to COCO.
inline constexpr std::string_view kApexCategory = "apex";

/// Parses LabelImg-style Pascal VOC documents.
///
/// bndbox coordinates are 1-based inclusive and become (xmin-1, ymin-1,
/// xmax-xmin+1, ymax-ymin+1). Image and annotation ids count from 1 in input
/// order. The video id is the <folder> text. frame_index is the 0-based rank of
/// the file name within its video, ordered by the trailing number in the stem
/// when every name in the video has one, lexicographically otherwise.
///
/// Throws ParseError (with the document index) for malformed XML and
/// ValidationError for a missing <size> or an inverted box.
AnnotationSet parse_voc(const std::vector<std::string>& xml_documents);

/// Renders one image of `annotations` back to VOC XML (inverse of parse_voc).
std::string render_voc(const AnnotationSet& annotations, long long image_id);

/// COCO detection JSON with images, annotations, categories (in that order)
/// and two extension keys per image: frame_index and video_id. Output bytes are
/// a pure function of the input.
std::string emit_coco(const AnnotationSet& annotations);

/// Inverse of emit_coco. Throws SchemaError naming the first missing key.
AnnotationSet parse_coco(std::string_view json);

struct GroundTruthSample {
    int frame_index = 0;
    Point2 center;
    Size2 size;

    friend bool operator==(const GroundTruthSample&, const GroundTruthSample&) = default;
};

struct GroundTruthTrack {
    std::string video_id;
    /// Strictly increasing frame_index.
    std::vector<GroundTruthSample> samples;

    const GroundTruthSample* at_frame(int frame_index) const;

    friend bool operator==(const GroundTruthTrack&, const GroundTruthTrack&) = default;
};

/// One track per video (ordered by video id) of box centres. Throws
/// AmbiguityError if an image holds two boxes of the same class.
std::vector<GroundTruthTrack> gt_tracks(const AnnotationSet& annotations);

/// Number of images recorded for `video_id`.
int frame_count(const AnnotationSet& annotations, std::string_view video_id);

}  // namespace apextrack
