#pragma once

#include <memory>
#include <string>
#include <vector>

#include "padis/rng.hpp"
#include "padis/tensor.hpp"

namespace padis {

// Measurements are carried as images: sinograms are views x detectors with one
// channel, blur/downsample measurements are image-shaped.
struct LinearOperator {
    virtual ~LinearOperator() = default;
    virtual Image apply(const Image& x) const = 0;
    virtual Image adjoint(const Image& y) const = 0;
    virtual bool has_pinv() const { return false; }
    virtual Image pinv(const Image& y) const;

    virtual int in_h() const = 0;
    virtual int in_w() const = 0;
    virtual int in_c() const = 0;
    virtual int out_h() const = 0;
    virtual int out_w() const = 0;
    virtual int out_c() const = 0;

    // linearity + adjoint identity (+ pinv identity when present) on seeded
    // random inputs; throws on failure
    void self_check() const;

    // pseudo-inverse at validation accuracy; iterative implementations
    // override this with a larger budget than their per-iteration default
    virtual Image pinv_converged(const Image& y) const { return pinv(y); }
};

struct CTGeometry {
    int views = 0;
    int detectors = 0;
    double spacing = 1.0;  // detector bin width in pixels
    std::vector<double> angles;  // radians

    // uniform angles over [0, pi)
    static CTGeometry parallel(int views, int detectors, double spacing = 1.0);
};

// Parallel-beam ray-driven projector with linear interpolation (Joseph-style):
// the adjoint scatters exactly the same interpolation weights the forward pass
// gathers, so the pair is a true matrix transpose pair.
struct RadonOperator : LinearOperator {
    CTGeometry geom;
    int n = 0;

    RadonOperator(CTGeometry geom_, int n_);

    Image apply(const Image& x) const override;
    Image adjoint(const Image& y) const override;
    bool has_pinv() const override { return true; }
    // least-squares pseudo-inverse via conjugate gradients on A^T A
    Image pinv(const Image& y) const override;
    Image pinv_converged(const Image& y) const override;
    int cg_iters = 20;

    int in_h() const override { return n; }
    int in_w() const override { return n; }
    int in_c() const override { return 1; }
    int out_h() const override { return geom.views; }
    int out_w() const override { return geom.detectors; }
    int out_c() const override { return 1; }
};

// K x K box blur with reflect padding; K odd.
struct BlurOperator : LinearOperator {
    int n = 0;
    int channels = 1;
    int ksize = 9;

    BlurOperator(int n_, int channels_, int ksize_);

    Image apply(const Image& x) const override;
    Image adjoint(const Image& y) const override;
    int in_h() const override { return n; }
    int in_w() const override { return n; }
    int in_c() const override { return channels; }
    int out_h() const override { return n; }
    int out_w() const override { return n; }
    int out_c() const override { return channels; }
};

// f x f block averaging; pseudo-inverse replicates each measurement into its
// block, which satisfies A A^+ = I exactly.
struct DownsampleOperator : LinearOperator {
    int n = 0;
    int channels = 1;
    int factor = 4;

    DownsampleOperator(int n_, int channels_, int factor_);

    Image apply(const Image& x) const override;
    Image adjoint(const Image& y) const override;
    bool has_pinv() const override { return true; }
    Image pinv(const Image& y) const override;
    int in_h() const override { return n; }
    int in_w() const override { return n; }
    int in_c() const override { return channels; }
    int out_h() const override { return n / factor; }
    int out_w() const override { return n / factor; }
    int out_c() const override { return channels; }
};

struct IdentityOperator : LinearOperator {
    int n = 0;
    int channels = 1;
    IdentityOperator(int n_, int channels_ = 1) : n(n_), channels(channels_) {}
    Image apply(const Image& x) const override { return x; }
    Image adjoint(const Image& y) const override { return y; }
    bool has_pinv() const override { return true; }
    Image pinv(const Image& y) const override { return y; }
    int in_h() const override { return n; }
    int in_w() const override { return n; }
    int in_c() const override { return channels; }
    int out_h() const override { return n; }
    int out_w() const override { return n; }
    int out_c() const override { return channels; }
};

Image add_noise(const Image& y, double sigma_meas, RandomStream& rng);

// Range-space replacement: D + A^+(y - A D). Throws when the operator has no
// pseudo-inverse (deblurring).
Image ddnm_project(const Image& denoised, const Image& y, const LinearOperator& op);

// Sinogram I/O: raw f32 little-endian with a small text header, and CSV.
void write_sinogram_raw(const std::string& path, const Image& sino);
Image read_sinogram_raw(const std::string& path);
void write_sinogram_csv(const std::string& path, const Image& sino);

}  // namespace padis
