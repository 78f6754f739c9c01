#include <doctest.h>

#include <nlohmann/json.hpp>
#include <string>

#include "apextrack/annotations.hpp"

using namespace apextrack;

namespace {

std::string voc(const std::string& file, const std::string& objects, int w = 640, int h = 480,
                const std::string& folder = "6") {
    return "<annotation>\n  <folder>" + folder + "</folder>\n  <filename>" + file +
           "</filename>\n  <size><width>" + std::to_string(w) + "</width><height>" +
           std::to_string(h) + "</height><depth>3</depth></size>\n" + objects + "</annotation>\n";
}

std::string object(int xmin, int ymin, int xmax, int ymax) {
    return "  <object><name>apex</name><bndbox><xmin>" + std::to_string(xmin) + "</xmin><ymin>" +
           std::to_string(ymin) + "</ymin><xmax>" + std::to_string(xmax) + "</xmax><ymax>" +
           std::to_string(ymax) + "</ymax></bndbox></object>\n";
}

}  // namespace

TEST_CASE("VOC boxes become 0-based COCO boxes") {
    const auto set = parse_voc({voc("img_0001.jpg", object(10, 20, 50, 80))});
    REQUIRE(set.images.size() == 1);
    REQUIRE(set.boxes.size() == 1);
    const BoxRecord& box = set.boxes[0];
    CHECK(box.x == 9.0);
    CHECK(box.y == 19.0);
    CHECK(box.w == 41.0);
    CHECK(box.h == 61.0);
    CHECK(box.class_id == 1);
    CHECK(set.images[0].video_id == "6");
    CHECK(set.images[0].width == 640);

    const auto coco = nlohmann::json::parse(emit_coco(set));
    CHECK(coco["annotations"][0]["bbox"] == nlohmann::json::array({9.0, 19.0, 41.0, 61.0}));
    CHECK(coco["annotations"][0]["area"] == 2501.0);
    CHECK(coco["annotations"][0]["iscrowd"] == 0);
    CHECK(coco["categories"][0]["name"] == "apex");
}

TEST_CASE("an image without objects is kept") {
    const auto set = parse_voc({voc("a.jpg", "")});
    CHECK(set.images.size() == 1);
    CHECK(set.boxes.empty());
    const auto coco = nlohmann::json::parse(emit_coco(set));
    CHECK(coco["images"].size() == 1);
    CHECK(coco["annotations"].empty());
}

TEST_CASE("ids count from 1 in input order and survive a VOC round trip") {
    const std::vector<std::string> docs{voc("f_3.jpg", object(1, 1, 10, 10)),
                                        voc("f_1.jpg", object(5, 5, 20, 30)),
                                        voc("f_2.jpg", object(100, 50, 140, 90))};
    const auto set = parse_voc(docs);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(set.images[i].image_id == static_cast<long long>(i + 1));
        CHECK(set.boxes[i].annotation_id == static_cast<long long>(i + 1));
        CHECK(set.boxes[i].image_id == static_cast<long long>(i + 1));
    }
    CHECK(set.images[0].frame_index == 2);
    CHECK(set.images[1].frame_index == 0);
    CHECK(set.images[2].frame_index == 1);

    std::vector<std::string> rendered;
    for (const auto& image : set.images) rendered.push_back(render_voc(set, image.image_id));
    CHECK(parse_voc(rendered) == set);
}

TEST_CASE("frame order follows trailing numbers, else names") {
    const auto numbered = parse_voc({voc("frame10.jpg", ""), voc("frame9.jpg", "")});
    CHECK(numbered.images[0].frame_index == 1);
    CHECK(numbered.images[1].frame_index == 0);

    const auto named = parse_voc({voc("b.jpg", ""), voc("a.jpg", "")});
    CHECK(named.images[0].frame_index == 1);
    CHECK(named.images[1].frame_index == 0);

    const auto videos =
        parse_voc({voc("x2.jpg", "", 640, 480, "v1"), voc("x1.jpg", "", 640, 480, "v2")});
    CHECK(videos.images[0].frame_index == 0);
    CHECK(videos.images[1].frame_index == 0);
}

TEST_CASE("malformed VOC input is rejected") {
    try {
        parse_voc({voc("a.jpg", ""), "<annotation><folder>x</annotation"});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.document_index() == 1);
    }
    CHECK_THROWS_AS(parse_voc({voc("a.jpg", object(50, 20, 10, 80))}), ValidationError);
    CHECK_THROWS_AS(parse_voc({"<annotation><filename>a.jpg</filename></annotation>"}),
                    ValidationError);
    CHECK_THROWS_AS(parse_voc({voc("a.jpg", object(600, 400, 700, 470))}), ValidationError);
}

TEST_CASE("COCO output is deterministic and round-trips byte for byte") {
    std::vector<std::string> docs;
    for (int i = 0; i < 12; ++i) {
        docs.push_back(voc("frame_" + std::to_string(i) + ".jpg",
                           i % 4 == 0 ? "" : object(10 + i, 20, 60 + i, 90)));
    }
    const auto set = parse_voc(docs);
    const std::string a = emit_coco(set);
    const std::string b = emit_coco(parse_voc(docs));
    CHECK(a == b);
    CHECK(emit_coco(parse_coco(a)) == a);
    CHECK(parse_coco(a) == set);

    const auto json = nlohmann::ordered_json::parse(a);
    std::vector<std::string> top;
    for (const auto& [key, value] : json.items()) top.push_back(key);
    CHECK(top == std::vector<std::string>{"images", "annotations", "categories"});
}

TEST_CASE("COCO parsing reports the missing key") {
    const auto set = parse_voc({voc("a_1.jpg", object(1, 1, 10, 10))});
    auto json = nlohmann::json::parse(emit_coco(set));
    json["images"][0].erase("width");
    try {
        parse_coco(json.dump());
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.key() == "images[0].width");
    }

    auto no_annotations = nlohmann::json::parse(emit_coco(set));
    no_annotations.erase("annotations");
    CHECK_THROWS_AS(parse_coco(no_annotations.dump()), SchemaError);
    CHECK_THROWS_AS(parse_coco("{not json"), ParseError);
}

TEST_CASE("empty annotation set emits empty arrays") {
    const auto json = nlohmann::json::parse(emit_coco(AnnotationSet{}));
    CHECK(json["images"].empty());
    CHECK(json["annotations"].empty());
    CHECK(json["categories"].size() == 1);
}

TEST_CASE("ground-truth tracks use box centres in frame order") {
    const auto set = parse_voc({voc("f2.jpg", object(1, 1, 10, 10)), voc("f1.jpg", ""),
                                voc("f0.jpg", object(10, 20, 50, 80))});
    const auto tracks = gt_tracks(set);
    REQUIRE(tracks.size() == 1);
    const auto& gt = tracks[0];
    CHECK(gt.video_id == "6");
    REQUIRE(gt.samples.size() == 2);
    CHECK(gt.samples[0].frame_index == 0);
    CHECK(gt.samples[0].center == Point2{29.5, 49.5});
    CHECK(gt.samples[1].frame_index == 2);
    CHECK(gt.at_frame(1) == nullptr);
    REQUIRE(gt.at_frame(2) != nullptr);
    CHECK(gt.at_frame(2)->center == Point2{5.0, 5.0});
    CHECK(frame_count(set, "6") == 3);
    CHECK(frame_count(set, "7") == 0);
}

TEST_CASE("two boxes on one image are ambiguous") {
    const auto set = parse_voc({voc("a.jpg", object(1, 1, 10, 10) + object(20, 20, 30, 30))});
    try {
        gt_tracks(set);
        FAIL("expected AmbiguityError");
    } catch (const AmbiguityError& e) {
        CHECK(e.image_id() == 1);
    }
}

TEST_CASE("a 1042-frame video yields a 1042-sample track") {
    std::vector<std::string> docs;
    for (int i = 0; i < 1042; ++i) {
        docs.push_back(voc("frame_" + std::to_string(i) + ".jpg",
                           object(100 + i % 50, 100, 140 + i % 50, 150)));
    }
    const auto set = parse_voc(docs);
    const auto tracks = gt_tracks(set);
    REQUIRE(tracks.size() == 1);
    CHECK(tracks[0].samples.size() == 1042);
    CHECK(frame_count(set, "6") == 1042);
    for (int i = 0; i < 1042; ++i) {
        REQUIRE(tracks[0].samples[static_cast<std::size_t>(i)].frame_index == i);
    }
}

TEST_CASE("validate rejects inconsistent sets") {
    AnnotationSet set;
    set.images.push_back({1, "a.jpg", 100, 100, 0, "v"});
    set.boxes.push_back({1, 1, 1, 10, 10, 20, 20});
    CHECK_NOTHROW(validate(set));

    auto dangling = set;
    dangling.boxes[0].image_id = 2;
    CHECK_THROWS_AS(validate(dangling), ValidationError);

    auto outside = set;
    outside.boxes[0].w = 95;
    CHECK_THROWS_AS(validate(outside), ValidationError);

    auto dup = set;
    dup.images.push_back(set.images[0]);
    CHECK_THROWS_AS(validate(dup), ValidationError);
}
