#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "padis/grid.hpp"
#include "padis/image_io.hpp"
#include "padis/rng.hpp"

using namespace padis;

TEST_CASE("make_partition matches the padding formula") {
    Partition a = make_partition(256, 56);
    CHECK(a.k == 4);
    CHECK(a.m == 24);
    Partition b = make_partition(256, 96);
    CHECK(b.k == 2);
    CHECK(b.m == 32);
    Partition c = make_partition(8, 4);
    CHECK(c.k == 2);
    CHECK(c.m == 4);  // p | n gives m = p, accepted as-is

    CHECK_THROWS_AS(make_partition(8, 8), std::invalid_argument);
    CHECK_THROWS_AS(make_partition(8, 9), std::invalid_argument);
    CHECK_THROWS_AS(make_partition(8, 0), std::invalid_argument);
}

TEST_CASE("extract_patches tiles the covered square in row-major order") {
    int n = 8, p = 4;
    PartitionSpec spec = make_spec(n, p, 1, 1);
    CHECK(spec.m() == 4);
    CHECK(spec.canvas_side() == 16);
    CHECK(spec.patch_count() == 9);

    std::vector<PatchLocation> locs = patch_locations(spec);
    REQUIRE(locs.size() == 9);
    int want[9][2] = {{0, 0}, {0, 4}, {0, 8}, {4, 0}, {4, 4}, {4, 8}, {8, 0}, {8, 4}, {8, 8}};
    for (int r = 0; r < 9; ++r) {
        CHECK(locs[r].r0 == want[r][0]);
        CHECK(locs[r].c0 == want[r][1]);
    }

    PartitionSpec spec56 = make_spec(256, 56, 3, 17);
    CHECK(spec56.patch_count() == 25);
}

TEST_CASE("scatter after extract restores the covered square bit-exactly") {
    RandomStream rng(7);
    int n = 12, p = 5;
    PartitionSpec spec = make_spec(n, p, 2, 3);
    Image canvas = rng.normal_image(spec.canvas_side(), spec.canvas_side(), 2);

    std::vector<Image> patches = extract_patches(canvas, spec);
    Image rebuilt = canvas;
    rebuilt.fill(0.0);
    scatter_patches(rebuilt, patches, spec);

    std::vector<uint8_t> mask = border_mask(spec);
    int side = spec.canvas_side();
    for (int ch = 0; ch < canvas.c; ++ch)
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) {
                if (mask[static_cast<size_t>(r) * side + c])
                    CHECK(rebuilt.at(r, c, ch) == 0.0);
                else
                    CHECK(rebuilt.at(r, c, ch) == canvas.at(r, c, ch));
            }
}

TEST_CASE("partitions are disjoint, cover the center exactly once, border completes the canvas") {
    for (int n : {8, 16, 24, 32})
        for (int p : {3, 4, 5}) {
            Partition part = make_partition(n, p);
            for (int i = 1; i <= part.m; ++i)
                for (int j = 1; j <= part.m; ++j) {
                    PartitionSpec spec = make_spec(n, p, i, j);
                    int side = spec.canvas_side();
                    std::vector<int> count(static_cast<size_t>(side) * side, 0);
                    for (const PatchLocation& loc : patch_locations(spec))
                        for (int r = 0; r < p; ++r)
                            for (int c = 0; c < p; ++c) count[(loc.r0 + r) * side + loc.c0 + c]++;
                    std::vector<uint8_t> mask = border_mask(spec);
                    int covered = 0;
                    for (int r = 0; r < side; ++r)
                        for (int c = 0; c < side; ++c) {
                            int cnt = count[static_cast<size_t>(r) * side + c];
                            CHECK(cnt <= 1);
                            CHECK((cnt == 1) == (mask[static_cast<size_t>(r) * side + c] == 0));
                            bool central = r >= part.m && r < part.m + n && c >= part.m && c < part.m + n;
                            if (central) CHECK(cnt == 1);
                            covered += cnt;
                        }
                    CHECK(covered == spec.patch_count() * p * p);
                }
        }
}

TEST_CASE("border of a fresh padded image is zero and counts match") {
    RandomStream rng(3);
    int n = 10, p = 4;
    Partition part = make_partition(n, p);
    Image inner = rng.normal_image(n, n, 1);
    PaddedImage padded = PaddedImage::pad(inner, part.m);

    PartitionSpec spec = make_spec(n, p, 2, 1);
    BorderRegion border = extract_border(padded.canvas, spec);
    int side = spec.canvas_side();
    CHECK(static_cast<int>(border.pixels.size()) ==
          side * side - spec.patch_count() * p * p);
    for (double v : border.values) CHECK(v == 0.0);

    // after adding noise, border values equal the noise values there
    Image noise = rng.normal_image(side, side, 1);
    Image noisy = padded.canvas + noise;
    BorderRegion nb = extract_border(noisy, spec);
    for (size_t idx = 0; idx < nb.pixels.size(); ++idx) {
        int r = nb.pixels[idx] / side, c = nb.pixels[idx] % side;
        CHECK(nb.values[idx] == noisy.at(r, c));
        CHECK(noisy.at(r, c) == doctest::Approx(noise.at(r, c)).epsilon(1e-12));
    }

    Image back = padded.crop_inner();
    for (size_t idx = 0; idx < back.v.size(); ++idx) CHECK(back.v[idx] == inner.v[idx]);
}

TEST_CASE("positional grid is affine with exact extremes") {
    PositionalGrid g = make_positional_grid(17);
    CHECK(g.xcoord.at(0, 0) == -1.0);
    CHECK(g.xcoord.at(5, 16) == 1.0);
    CHECK(g.ycoord.at(16, 3) == 1.0);
    CHECK(g.ycoord.at(8, 3) == 0.0);  // odd side has an exact center

    // xcoord varies only along columns, ycoord only along rows
    for (int r = 0; r < 17; ++r)
        for (int c = 0; c < 17; ++c) {
            CHECK(g.xcoord.at(r, c) == g.xcoord.at(0, c));
            CHECK(g.ycoord.at(r, c) == g.ycoord.at(r, 0));
        }

    Image tl = positional_patch(g, 0, 0, 4);
    CHECK(tl.at(0, 0, 0) == -1.0);
    CHECK(tl.at(0, 0, 1) == -1.0);

    // mirrored patches have negated y coordinates under a vertical flip
    Image a = positional_patch(g, 2, 5, 4);
    Image b = positional_patch(g, 17 - 2 - 4, 5, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            CHECK(a.at(r, c, 1) == doctest::Approx(-b.at(4 - 1 - r, c, 1)).epsilon(1e-12));
            CHECK(a.at(r, c, 0) == b.at(r, c, 0));
        }

    CHECK_THROWS_AS(positional_patch(g, 15, 0, 4), std::out_of_range);
}

TEST_CASE("pgm/ppm round trip through 8 and 16 bit") {
    RandomStream rng(11);
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "padis_io_test";
    std::filesystem::create_directories(dir);

    Image gray(9, 7, 1);
    for (double& v : gray.v) v = rng.uniform();
    write_pgm((dir / "g8.pgm").string(), gray, 8);
    Image g8 = read_pnm((dir / "g8.pgm").string());
    REQUIRE(g8.same_shape(gray));
    for (size_t i = 0; i < gray.v.size(); ++i)
        CHECK(g8.v[i] == doctest::Approx(gray.v[i]).epsilon(0).scale(1).epsilon(1.0 / 255));

    write_pgm((dir / "g16.pgm").string(), gray, 16);
    Image g16 = read_pnm((dir / "g16.pgm").string());
    for (size_t i = 0; i < gray.v.size(); ++i)
        CHECK(std::abs(g16.v[i] - gray.v[i]) <= 0.5 / 65535 + 1e-12);

    Image rgb(5, 6, 3);
    for (double& v : rgb.v) v = rng.uniform();
    write_ppm((dir / "c.ppm").string(), rgb);
    Image c8 = read_pnm((dir / "c.ppm").string());
    REQUIRE(c8.same_shape(rgb));
    for (size_t i = 0; i < rgb.v.size(); ++i) CHECK(std::abs(c8.v[i] - rgb.v[i]) <= 0.5 / 255 + 1e-12);

    std::filesystem::remove_all(dir);
}
