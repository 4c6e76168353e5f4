#include "padis/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "padis/image_io.hpp"

namespace padis {

PhantomKind phantom_kind_from_string(const std::string& s) {
    if (s == "ct_phantom") return PhantomKind::CtPhantom;
    if (s == "texture") return PhantomKind::Texture;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

namespace {

struct Ellipse {
    double cx, cy, a, b, angle, value;
};

void add_ellipse(Image& img, const Ellipse& e) {
    double ca = std::cos(e.angle), sa = std::sin(e.angle);
    for (int r = 0; r < img.h; ++r)
        for (int c = 0; c < img.w; ++c) {
            // normalized coordinates in [-1,1]
            double x = 2.0 * c / (img.w - 1) - 1.0;
            double y = 2.0 * r / (img.h - 1) - 1.0;
            double dx = x - e.cx, dy = y - e.cy;
            double u = (ca * dx + sa * dy) / e.a;
            double v = (-sa * dx + ca * dy) / e.b;
            if (u * u + v * v <= 1.0) img.at(r, c) += e.value;
        }
}

Image ct_phantom(const PhantomConfig& cfg, RandomStream& rng, PhantomInfo* info) {
    Image img(cfg.n, cfg.n, 1);
    // fixed body ellipse gives every phantom the same gross layout, so patch
    // content carries a strong positional signal
    add_ellipse(img, {0.0, 0.0, 0.86, 0.92, 0.0, 0.45});
    add_ellipse(img, {0.0, 0.0, 0.78, 0.84, 0.0, 0.15});
    int count = rng.uniform_int(cfg.min_ellipses, cfg.max_ellipses);
    if (info) info->ellipses = count;
    for (int i = 0; i < count; ++i) {
        Ellipse e;
        e.cx = 1.2 * (rng.uniform() - 0.5);
        e.cy = 1.2 * (rng.uniform() - 0.5);
        e.a = 0.05 + 0.3 * rng.uniform();
        e.b = 0.05 + 0.3 * rng.uniform();
        e.angle = M_PI * rng.uniform();
        e.value = (rng.uniform() < 0.35 ? -1.0 : 1.0) * (0.08 + 0.25 * rng.uniform());
        add_ellipse(img, e);
    }
    clamp01(img);
    return img;
}

Image texture(const PhantomConfig& cfg, RandomStream& rng) {
    Image img(cfg.n, cfg.n, 1);
    for (int wv = 0; wv < cfg.texture_waves; ++wv) {
        double fx = 0.5 + 3.5 * rng.uniform();
        double fy = 0.5 + 3.5 * rng.uniform();
        double phase = 2.0 * M_PI * rng.uniform();
        double amp = 0.4 + 0.6 * rng.uniform();
        for (int r = 0; r < cfg.n; ++r)
            for (int c = 0; c < cfg.n; ++c) {
                double x = static_cast<double>(c) / cfg.n;
                double y = static_cast<double>(r) / cfg.n;
                img.at(r, c) += amp * std::cos(2.0 * M_PI * (fx * x + fy * y) + phase);
            }
    }
    double lo = img.v[0], hi = img.v[0];
    for (double v : img.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double& v : img.v) v = (v - lo) / std::max(1e-12, hi - lo);
    return img;
}

}  // namespace

Image make_phantom(const PhantomConfig& cfg, RandomStream& rng, PhantomInfo* info) {
    if (cfg.n < 8) throw std::invalid_argument("make_phantom: image side too small");
    return cfg.kind == PhantomKind::CtPhantom ? ct_phantom(cfg, rng, info) : texture(cfg, rng);
}

DatasetManifest synth_dataset(const PhantomConfig& cfg, int count, uint64_t seed,
                              const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    if (!std::filesystem::is_directory(out_dir))
        throw std::runtime_error("synth_dataset: cannot create " + out_dir);
    DatasetManifest manifest;
    int bits = cfg.kind == PhantomKind::CtPhantom ? 16 : 8;
    for (int i = 0; i < count; ++i) {
        RandomStream rng(mix_seed(seed, static_cast<uint64_t>(i)));
        Image img = make_phantom(cfg, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.pgm", i);
        write_pgm((std::filesystem::path(out_dir) / name).string(), img, bits);
        manifest.files.push_back(name);
    }
    std::ofstream mf(std::filesystem::path(out_dir) / "manifest.txt");
    if (!mf) throw std::runtime_error("synth_dataset: cannot write manifest");
    mf << "kind " << (cfg.kind == PhantomKind::CtPhantom ? "ct_phantom" : "texture") << "\n";
    mf << "n " << cfg.n << "\n";
    mf << "count " << count << "\n";
    mf << "seed " << seed << "\n";
    for (const std::string& f : manifest.files) mf << f << "\n";
    return manifest;
}

std::vector<Image> load_dataset(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("load_dataset: no images in " + dir);
    std::vector<Image> out;
    out.reserve(files.size());
    for (const std::string& f : files) out.push_back(read_pnm(f));
    return out;
}

}  // namespace padis
