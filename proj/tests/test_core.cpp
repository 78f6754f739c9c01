#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "apextrack/core.hpp"

using namespace apextrack;

TEST_CASE("GridSpec enforces its invariants") {
    CHECK_NOTHROW(GridSpec(640, 480, 4, 1));
    CHECK_THROWS_AS(GridSpec(0, 480), ValidationError);
    CHECK_THROWS_AS(GridSpec(640, -4), ValidationError);
    CHECK_THROWS_AS(GridSpec(640, 480, 0), ValidationError);
    CHECK_THROWS_AS(GridSpec(642, 480, 4), ValidationError);
    CHECK_THROWS_AS(GridSpec(640, 481, 4), ValidationError);
    CHECK_THROWS_AS(GridSpec(640, 480, 4, 0), ValidationError);

    const GridSpec grid(640, 480, 4);
    CHECK(grid.cols() == 160);
    CHECK(grid.rows() == 120);
    CHECK(grid.classes() == 1);
}

TEST_CASE("grid_to_image uses cell centres") {
    CHECK(grid_to_image({0, 0}, GridSpec(8, 8, 1)) == Point2{0.0, 0.0});
    CHECK(grid_to_image({10, 12}, GridSpec(64, 64, 4)) == Point2{41.5, 49.5});
    CHECK_THROWS_AS(grid_to_image({16, 0}, GridSpec(64, 64, 4)), RangeError);
    CHECK_THROWS_AS(grid_to_image({0, -1}, GridSpec(64, 64, 4)), RangeError);
}

TEST_CASE("image_to_grid maps to the nearest cell and clamps") {
    CHECK(image_to_grid({0.0, 0.0}, GridSpec(8, 8, 1)) == Cell{0, 0});
    CHECK(image_to_grid({41.5, 49.5}, GridSpec(64, 64, 4)) == Cell{10, 12});

    const GridSpec grid(640, 480, 4);
    CHECK(image_to_grid({639.0, 479.0}, grid) == Cell{159, 119});
    CHECK(image_to_grid({639.99, 479.99}, grid) == Cell{159, 119});

    CHECK_THROWS_AS(image_to_grid({640.0, 0.0}, grid), RangeError);
    CHECK_THROWS_AS(image_to_grid({-0.01, 0.0}, grid), RangeError);
    CHECK_THROWS_AS(image_to_grid({0.0, std::numeric_limits<double>::quiet_NaN()}, grid),
                    RangeError);
}

TEST_CASE("grid_to_image and image_to_grid are inverse on every cell of an 8x8 grid") {
    for (const int r : {1, 2, 4}) {
        const GridSpec grid(8 * r, 8 * r, r);
        for (int row = 0; row < 8; ++row) {
            for (int col = 0; col < 8; ++col) {
                CHECK(image_to_grid(grid_to_image({col, row}, grid), grid) == Cell{col, row});
            }
        }
    }
}

TEST_CASE("nearest cell centre is within R/2 for pixel-centre positions") {
    std::mt19937_64 rng(7);
    const GridSpec grid(320, 240, 4);
    std::uniform_real_distribution<double> xs(0.0, 319.0), ys(0.0, 239.0);
    for (int i = 0; i < 5000; ++i) {
        const Point2 p{xs(rng), ys(rng)};
        const Point2 c = grid_to_image(image_to_grid(p, grid), grid);
        REQUIRE(std::abs(c.x - p.x) <= 2.0);
        REQUIRE(std::abs(c.y - p.y) <= 2.0);
    }
}

TEST_CASE("GridTensor validates values and shape") {
    const GridSpec grid(8, 8, 4);  // 2x2 cells
    CHECK_NOTHROW(Heatmap(grid, std::vector<float>(4, 0.5f)));
    CHECK_THROWS_AS(Heatmap(grid, std::vector<float>(4, 1.5f)), ValidationError);
    CHECK_THROWS_AS(Heatmap(grid, std::vector<float>(3, 0.5f)), ShapeError);
    CHECK_THROWS_AS(SizeMap(grid, std::vector<float>(8, -1.0f)), ValidationError);
    CHECK_NOTHROW(DisplacementField(grid, std::vector<float>(8, -3.0f)));
    CHECK_THROWS_AS(
        DisplacementField(grid, std::vector<float>(8, std::numeric_limits<float>::infinity())),
        ValidationError);

    Heatmap hm(GridSpec(8, 8, 4, 3));
    CHECK(hm.channels() == 3);
    hm.set({1, 0}, 2, 0.25f);
    CHECK(hm.at({1, 0}, 2) == 0.25f);
    CHECK(hm.values()[(0 * 2 + 1) * 3 + 2] == 0.25f);
    CHECK_THROWS_AS(hm.at({2, 0}, 0), RangeError);
    CHECK_THROWS_AS(hm.at({0, 0}, 3), RangeError);
}

TEST_CASE("Detection enforces its invariants") {
    CHECK_NOTHROW(Detection({1.0, 2.0}, {3.0, 4.0}, 0.5));
    CHECK_THROWS_AS(Detection({-1.0, 2.0}, {3.0, 4.0}, 0.5), ValidationError);
    CHECK_THROWS_AS(Detection({1.0, 2.0}, {-3.0, 4.0}, 0.5), ValidationError);
    CHECK_THROWS_AS(Detection({1.0, 2.0}, {3.0, 4.0}, 1.5), ValidationError);
}

TEST_CASE("TrackTable validation") {
    TrackTable table;
    Tracklet t;
    t.id = 1;
    t.last_frame = 3;
    t.history = {{1, {}, 1.0}, {3, {}, 1.0}};
    table.active.push_back(t);
    table.next_id = 2;
    CHECK_NOTHROW(validate(table));

    auto dup = table;
    dup.retired.push_back(t);
    CHECK_THROWS_AS(validate(dup), ValidationError);

    auto stale_next = table;
    stale_next.next_id = 1;
    CHECK_THROWS_AS(validate(stale_next), ValidationError);

    auto unordered = table;
    unordered.active[0].history = {{3, {}, 1.0}, {3, {}, 1.0}};
    CHECK_THROWS_AS(validate(unordered), ValidationError);

    auto wrong_last = table;
    wrong_last.active[0].last_frame = 2;
    CHECK_THROWS_AS(validate(wrong_last), ValidationError);
}
