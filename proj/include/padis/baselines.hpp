#pragma once

#include "padis/operators.hpp"
#include "padis/tensor.hpp"

namespace padis {

// Filtered back-projection: Ram-Lak filtering of each view in the frequency
// domain, per-view step-length compensation so radon_adjoint acts as a plain
// backprojector, then scaling by pi/(2*views).
Image fbp(const Image& sinogram, const CTGeometry& geom, int n);

// Problem-specific trivial inverse: FBP for CT, the measurement itself for
// deblurring, nearest-neighbor upsampling for superresolution.
Image naive_baseline(const Image& y, const LinearOperator& op);

struct AdmmTvConfig {
    double lambda = 1e-3;
    double rho = 1.0;
    int outer_iters = 100;
    int cg_iters = 10;
};

struct AdmmTvResult {
    Image x;
    std::vector<double> objective;  // per outer iteration
};

// Anisotropic L1 total variation with ADMM splitting on the forward-difference
// gradient; x-update by conjugate gradients. Throws on divergence (objective
// rising 10 consecutive outer iterations beyond relative tolerance 1e-6).
AdmmTvResult admm_tv(const Image& y, const LinearOperator& op, const AdmmTvConfig& cfg);

}  // namespace padis
