#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "padis/assemble.hpp"
#include "padis/operators.hpp"
#include "padis/tensor.hpp"

namespace padis {

// Geometric noise schedule sigma_1 < ... < sigma_T with exact endpoints,
// traversed T -> 1 by the samplers.
struct NoiseSchedule {
    std::vector<double> sigma;  // ascending
    int T() const { return static_cast<int>(sigma.size()); }
    double at(int t) const { return sigma[t - 1]; }  // 1-based
};

NoiseSchedule make_schedule(double sigma_min, double sigma_max, int steps);

// nonfinite states abort the run with the iteration and noise level
struct NumericalAbort : std::runtime_error {
    int t;
    double sigma_t;
    NumericalAbort(int t_, double sigma_);
};

struct SamplerConfig {
    double epsilon = 1.0;      // langevin step scale, alpha_t = epsilon * sigma_t^2
    double zeta = 0.3;         // data-consistency scale, zeta_t = zeta / ||residual||
    double corrector_r = 0.16; // predictor-corrector ratio
    uint64_t seed = 0;
    bool clamp_border = false;  // ablation: zero the border every iteration
    std::string trace_path;     // optional per-run CSV (t, sigma, residual, psnr)
    const Image* ground_truth = nullptr;  // inner-image reference for the trace
    Image* final_canvas_out = nullptr;    // receives the final padded canvas
};

// All loops initialize the full padded canvas from N(0, sigma_T^2 I), touch the
// model only through the assembler, and return the central n x n crop.

// DPS-style: gradient of ||y - A(D(x))||^2 through the assembled VJP chained
// with the operator adjoint, then the annealed Langevin update.
Image padis_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                        const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n);

// data step x += zeta_i A^T (y - A x), then prior step
Image langevin_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                           const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n);

// reverse-diffusion predictor + adaptive corrector, data step after each
Image pc_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                     const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n);

// range-space replacement of the denoised estimate each iteration; requires
// the operator pseudo-inverse
Image ddnm_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                       const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n);

// unconditional generation: the padis loop with no data term
Image generate(const CanvasAssembler& assembler, const NoiseSchedule& sched, const SamplerConfig& cfg,
               int inner_n);

}  // namespace padis
