#pragma once

#include <memory>
#include <vector>

#include "padis/grid.hpp"
#include "padis/tensor.hpp"

namespace padis {

// Contract for anything that can denoise an image (patch or whole canvas) at a
// given noise level. `pos` carries the 2-channel positional patch; models that
// do not use it accept nullptr. Implementations are deterministic and safe for
// concurrent calls.
struct ScoreModel {
    virtual ~ScoreModel() = default;
    virtual int channels() const = 0;
    // E[x0 | x] estimate; output shape = input shape
    virtual Image denoise(const Image& x, double sigma, const Image* pos) const = 0;
    // v^T (d denoise / d x); linear in v
    virtual Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const = 0;
};

// s = (D - x) / sigma^2
Image tweedie_score(const Image& denoised, const Image& x, double sigma);

// residual-network output to score and back: s = -eps/sigma
Image eps_to_score(const Image& eps_out, double sigma);
Image score_to_eps(const Image& score, double sigma);
// sigma_t = sqrt(1 - alpha_t) / sqrt(alpha_t), alpha_t in (0,1)
double vp_to_ve_sigma(double alpha_t);

// denoised border is identically zero, so its score is -x/sigma^2
Image border_denoise(const Image& x_border);
Image border_score(const Image& x_border, double sigma);

// Diagonal Gaussian prior N(mean, diag(var)). var >= 0 per pixel; var = 0
// pins the pixel to its mean (used for the zero border factor).
struct GaussianPrior : ScoreModel {
    Image mean;
    Image var;

    GaussianPrior() = default;
    GaussianPrior(Image mean_, Image var_);

    int channels() const override { return mean.c; }
    Image denoise(const Image& x, double sigma, const Image* pos) const override;
    Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const override;
    // analytic score of the sigma-smoothed prior: -(x-mean)/(var+sigma^2)
    Image score(const Image& x, double sigma) const;
};

// Finite mixture of diagonal Gaussians (<= 8 components); responsibilities
// use log-sum-exp. Verification oracle for non-Gaussian behavior.
struct GaussianMixturePrior : ScoreModel {
    struct Component {
        double weight = 1.0;
        Image mean;
        Image var;  // strictly positive
    };
    std::vector<Component> comps;

    explicit GaussianMixturePrior(std::vector<Component> comps_);

    int channels() const override { return comps.front().mean.c; }
    Image denoise(const Image& x, double sigma, const Image* pos) const override;
    Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const override;
    Image score(const Image& x, double sigma) const;
    // log of the sigma-smoothed density, up to the mixture normalization
    double log_density(const Image& x, double sigma) const;
};

// Patch-level view of a per-pixel diagonal Gaussian canvas prior: the model
// recovers its patch location from the positional channels and denoises with
// the matching mean/variance slice. Works for any partition or overlap grid,
// which is what oracle-mode experiments need.
struct GaussianPatchOracle : ScoreModel {
    GaussianPrior canvas;

    explicit GaussianPatchOracle(GaussianPrior canvas_) : canvas(std::move(canvas_)) {}

    int channels() const override { return canvas.channels(); }
    Image denoise(const Image& x, double sigma, const Image* pos) const override;
    Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const override;
};

// Product distribution over one fixed partition: an independent Gaussian
// factor per patch plus the zero border factor. Exactly realizes the kind of
// canvas prior the patch assembly is built for, so it doubles as the
// whole-canvas oracle in tests.
struct PatchProductPrior {
    PartitionSpec spec;
    std::vector<GaussianPrior> factors;  // one per patch, row-major

    PatchProductPrior(PartitionSpec spec_, std::vector<GaussianPrior> factors_);

    // equivalent diagonal prior over the whole canvas (border: mean 0, var 0)
    GaussianPrior canvas_prior() const;
    // patch-level model that recovers its location (hence its factor) from the
    // positional channels; only valid for patches aligned with `spec`
    std::unique_ptr<ScoreModel> make_patch_model() const;
};

}  // namespace padis
