#pragma once

#include <string>
#include <vector>

#include "padis/rng.hpp"
#include "padis/tensor.hpp"

namespace padis {

enum class PhantomKind { CtPhantom, Texture };

PhantomKind phantom_kind_from_string(const std::string& s);

struct PhantomConfig {
    PhantomKind kind = PhantomKind::CtPhantom;
    int n = 64;
    // ct phantoms: a fixed body ellipse plus a uniform count of random ellipses
    int min_ellipses = 3;
    int max_ellipses = 8;
    // textures: superposition of random low-frequency cosines
    int texture_waves = 8;
};

struct PhantomInfo {
    int ellipses = 0;  // inner ellipse count (ct phantoms)
};

// one reproducible phantom; values in [0,1]
Image make_phantom(const PhantomConfig& cfg, RandomStream& rng, PhantomInfo* info = nullptr);

struct DatasetManifest {
    std::vector<std::string> files;
};

// writes <out_dir>/img_00000.pgm ... plus manifest.txt; ct phantoms are stored
// as 16-bit PGM, textures as 8-bit
DatasetManifest synth_dataset(const PhantomConfig& cfg, int count, uint64_t seed,
                              const std::string& out_dir);

std::vector<Image> load_dataset(const std::string& dir);

}  // namespace padis
