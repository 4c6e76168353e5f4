#include "padis/grid.hpp"

#include <stdexcept>
#include <string>

namespace padis {

Partition make_partition(int n, int p) {
    if (p < 1) throw std::invalid_argument("make_partition: patch size must be >= 1");
    if (p >= n) throw std::invalid_argument("make_partition: patch size must be < image side");
    Partition part;
    part.k = n / p;
    part.m = (part.k + 1) * p - n;
    return part;
}

void PartitionSpec::validate() const {
    Partition part = make_partition(n, p);
    if (k != part.k) throw std::invalid_argument("PartitionSpec: k does not match floor(n/p)");
    if (i < 1 || i > part.m || j < 1 || j > part.m)
        throw std::invalid_argument("PartitionSpec: offsets must lie in [1, m]");
}

PartitionSpec make_spec(int n, int p, int i, int j) {
    PartitionSpec spec;
    spec.n = n;
    spec.p = p;
    spec.k = make_partition(n, p).k;
    spec.i = i;
    spec.j = j;
    spec.validate();
    return spec;
}

PaddedImage PaddedImage::pad(const Image& inner, int m) {
    if (inner.h != inner.w) throw std::invalid_argument("pad: image must be square");
    if (m < 1) throw std::invalid_argument("pad: margin must be >= 1");
    PaddedImage out;
    out.n = inner.h;
    out.m = m;
    out.canvas = Image(inner.h + 2 * m, inner.w + 2 * m, inner.c);
    embed_center(out.canvas, inner);
    return out;
}

Image PaddedImage::crop_inner() const { return crop_center(canvas, n); }

Image crop_center(const Image& canvas, int n) {
    int off = (canvas.h - n) / 2;
    if (off < 0 || canvas.h != canvas.w || (canvas.h - n) % 2 != 0)
        throw std::invalid_argument("crop_center: incompatible sizes");
    Image out(n, n, canvas.c);
    for (int ch = 0; ch < canvas.c; ++ch)
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) out.at(r, c, ch) = canvas.at(r + off, c + off, ch);
    return out;
}

void embed_center(Image& canvas, const Image& inner) {
    int off = (canvas.h - inner.h) / 2;
    if (off < 0 || canvas.c != inner.c || (canvas.h - inner.h) % 2 != 0)
        throw std::invalid_argument("embed_center: incompatible sizes");
    for (int ch = 0; ch < inner.c; ++ch)
        for (int r = 0; r < inner.h; ++r)
            for (int c = 0; c < inner.w; ++c) canvas.at(r + off, c + off, ch) = inner.at(r, c, ch);
}

PositionalGrid make_positional_grid(int side) {
    if (side < 2) throw std::invalid_argument("make_positional_grid: side must be >= 2");
    PositionalGrid g;
    g.xcoord = Image(side, side, 1);
    g.ycoord = Image(side, side, 1);
    double denom = static_cast<double>(side - 1);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            g.xcoord.at(r, c) = -1.0 + 2.0 * c / denom;
            g.ycoord.at(r, c) = -1.0 + 2.0 * r / denom;
        }
    return g;
}

Image positional_patch(const PositionalGrid& grid, int r0, int c0, int p) {
    int side = grid.xcoord.h;
    if (r0 < 0 || c0 < 0 || r0 + p > side || c0 + p > side)
        throw std::out_of_range("positional_patch: patch outside canvas");
    Image out(p, p, 2);
    for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) {
            out.at(r, c, 0) = grid.xcoord.at(r0 + r, c0 + c);
            out.at(r, c, 1) = grid.ycoord.at(r0 + r, c0 + c);
        }
    return out;
}

std::vector<PatchLocation> patch_locations(const PartitionSpec& spec) {
    spec.validate();
    std::vector<PatchLocation> locs;
    locs.reserve(spec.patch_count());
    for (int gr = 0; gr < spec.grid_side(); ++gr)
        for (int gc = 0; gc < spec.grid_side(); ++gc)
            locs.push_back({spec.row0() + gr * spec.p, spec.col0() + gc * spec.p});
    return locs;
}

Image extract_patch(const Image& canvas, int r0, int c0, int p) {
    if (r0 < 0 || c0 < 0 || r0 + p > canvas.h || c0 + p > canvas.w)
        throw std::out_of_range("extract_patch: patch outside canvas");
    Image out(p, p, canvas.c);
    for (int ch = 0; ch < canvas.c; ++ch)
        for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c) out.at(r, c, ch) = canvas.at(r0 + r, c0 + c, ch);
    return out;
}

std::vector<Image> extract_patches(const Image& canvas, const PartitionSpec& spec) {
    if (canvas.h != spec.canvas_side() || canvas.w != spec.canvas_side())
        throw std::invalid_argument("extract_patches: canvas does not match spec");
    std::vector<Image> patches;
    patches.reserve(spec.patch_count());
    for (const PatchLocation& loc : patch_locations(spec))
        patches.push_back(extract_patch(canvas, loc.r0, loc.c0, spec.p));
    return patches;
}

void scatter_patch(Image& canvas, const Image& patch, int r0, int c0) {
    if (r0 < 0 || c0 < 0 || r0 + patch.h > canvas.h || c0 + patch.w > canvas.w ||
        patch.c != canvas.c)
        throw std::out_of_range("scatter_patch: patch outside canvas");
    for (int ch = 0; ch < patch.c; ++ch)
        for (int r = 0; r < patch.h; ++r)
            for (int c = 0; c < patch.w; ++c) canvas.at(r0 + r, c0 + c, ch) = patch.at(r, c, ch);
}

void scatter_patches(Image& canvas, const std::vector<Image>& patches, const PartitionSpec& spec) {
    std::vector<PatchLocation> locs = patch_locations(spec);
    if (patches.size() != locs.size())
        throw std::invalid_argument("scatter_patches: patch count mismatch");
    for (size_t r = 0; r < locs.size(); ++r) scatter_patch(canvas, patches[r], locs[r].r0, locs[r].c0);
}

std::vector<uint8_t> border_mask(const PartitionSpec& spec) {
    spec.validate();
    int side = spec.canvas_side();
    std::vector<uint8_t> mask(static_cast<size_t>(side) * side, 1);
    int covered = spec.grid_side() * spec.p;
    for (int r = spec.row0(); r < spec.row0() + covered; ++r)
        for (int c = spec.col0(); c < spec.col0() + covered; ++c)
            mask[static_cast<size_t>(r) * side + c] = 0;
    return mask;
}

BorderRegion extract_border(const Image& canvas, const PartitionSpec& spec) {
    if (canvas.h != spec.canvas_side() || canvas.w != spec.canvas_side())
        throw std::invalid_argument("extract_border: canvas does not match spec");
    std::vector<uint8_t> mask = border_mask(spec);
    BorderRegion out;
    int side = spec.canvas_side();
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            if (mask[static_cast<size_t>(r) * side + c]) {
                out.pixels.push_back(r * side + c);
                for (int ch = 0; ch < canvas.c; ++ch) out.values.push_back(canvas.at(r, c, ch));
            }
    return out;
}

}  // namespace padis
