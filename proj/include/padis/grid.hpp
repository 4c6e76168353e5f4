#pragma once

#include <cstdint>
#include <vector>

#include "padis/tensor.hpp"

namespace padis {

// Partition geometry for an n x n image covered by (k+1)^2 patches of side p
// after zero-padding by m on every side. m = (k+1)*p - n with k = floor(n/p);
// when p divides n this still gives m = p, which is accepted.
struct Partition {
    int k = 0;
    int m = 0;
};

Partition make_partition(int n, int p);  // throws on p < 1 or p >= n

// One concrete tiling: offsets i,j are 1-based in [1,m] as the covered square
// starts at canvas row i-1, column j-1 (0-based).
struct PartitionSpec {
    int i = 1;
    int j = 1;
    int p = 0;
    int k = 0;
    int n = 0;

    int m() const { return (k + 1) * p - n; }
    int canvas_side() const { return n + 2 * m(); }
    int grid_side() const { return k + 1; }
    int patch_count() const { return grid_side() * grid_side(); }
    int row0() const { return i - 1; }
    int col0() const { return j - 1; }
    void validate() const;  // throws on inconsistent fields
};

PartitionSpec make_spec(int n, int p, int i, int j);

// Zero-padded canvas around an n x n (possibly multi-channel) image.
struct PaddedImage {
    Image canvas;
    int n = 0;
    int m = 0;

    static PaddedImage pad(const Image& inner, int m);
    Image crop_inner() const;
};

Image crop_center(const Image& canvas, int n);
// writes inner into the central n x n region, leaves the rest untouched
void embed_center(Image& canvas, const Image& inner);

// Coordinate channels over the canvas, affine in pixel index with extremes
// exactly -1 and +1 at the edges. xcoord varies along columns, ycoord along rows.
struct PositionalGrid {
    Image xcoord;  // side x side, 1 channel
    Image ycoord;
};

PositionalGrid make_positional_grid(int side);
// 2-channel patch (x then y) aligned with an image patch at (r0, c0)
Image positional_patch(const PositionalGrid& grid, int r0, int c0, int p);

struct PatchLocation {
    int r0 = 0;
    int c0 = 0;
};

// row-major over the (k+1) x (k+1) grid
std::vector<PatchLocation> patch_locations(const PartitionSpec& spec);
Image extract_patch(const Image& canvas, int r0, int c0, int p);
std::vector<Image> extract_patches(const Image& canvas, const PartitionSpec& spec);
void scatter_patch(Image& canvas, const Image& patch, int r0, int c0);
void scatter_patches(Image& canvas, const std::vector<Image>& patches, const PartitionSpec& spec);

// Pixels of the canvas not covered by any patch of the spec, with their values
// (channel-major per pixel).
struct BorderRegion {
    std::vector<int> pixels;  // linear spatial index r*side + c
    std::vector<double> values;
};

// 1 = border pixel, 0 = covered by a patch; size = side*side
std::vector<uint8_t> border_mask(const PartitionSpec& spec);
BorderRegion extract_border(const Image& canvas, const PartitionSpec& spec);

}  // namespace padis
