#include "padis/samplers.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "padis/metrics.hpp"

namespace padis {

NoiseSchedule make_schedule(double sigma_min, double sigma_max, int steps) {
    if (!(sigma_min > 0.0 && sigma_min < sigma_max))
        throw std::invalid_argument("make_schedule: need 0 < sigma_min < sigma_max");
    if (steps < 2) throw std::invalid_argument("make_schedule: need at least 2 steps");
    NoiseSchedule s;
    s.sigma.resize(steps);
    double ratio = sigma_max / sigma_min;
    for (int t = 0; t < steps; ++t)
        s.sigma[t] = sigma_min * std::pow(ratio, static_cast<double>(t) / (steps - 1));
    s.sigma.front() = sigma_min;
    s.sigma.back() = sigma_max;
    return s;
}

NumericalAbort::NumericalAbort(int t_, double sigma_)
    : std::runtime_error("sampler: non-finite state at iteration " + std::to_string(t_) +
                         " (sigma " + std::to_string(sigma_) + ")"),
      t(t_), sigma_t(sigma_) {}

namespace {

struct RunTrace {
    std::ofstream out;
    const Image* gt = nullptr;
    int inner_n = 0;

    RunTrace(const SamplerConfig& cfg, int inner_n_) : gt(cfg.ground_truth), inner_n(inner_n_) {
        if (!cfg.trace_path.empty()) {
            out.open(cfg.trace_path);
            if (!out) throw std::runtime_error("sampler: cannot write trace " + cfg.trace_path);
            out << "t,sigma,residual,psnr\n";
            out.precision(9);
        }
    }

    void row(int t, double sigma, double residual, const Image& canvas) {
        if (!out.is_open()) return;
        out << t << "," << sigma << ",";
        if (std::isfinite(residual)) out << residual;
        out << ",";
        if (gt) out << psnr_csv_cap(psnr(crop_center(canvas, inner_n), *gt));
        out << "\n";
    }
};

// mask-out everything but the central crop; the data term lives on the inner
// image only, so its gradient is zero on the border by construction
Image embed_inner(const Image& inner, int side) {
    Image canvas(side, side, inner.c);
    embed_center(canvas, inner);
    return canvas;
}

void clamp_border_to_zero(Image& canvas, int inner_n) {
    int off = (canvas.h - inner_n) / 2;
    for (int ch = 0; ch < canvas.c; ++ch)
        for (int r = 0; r < canvas.h; ++r)
            for (int c = 0; c < canvas.w; ++c)
                if (r < off || r >= off + inner_n || c < off || c >= off + inner_n)
                    canvas.at(r, c, ch) = 0.0;
}

void check_finite(const Image& canvas, int t, double sigma) {
    if (!all_finite(canvas)) throw NumericalAbort(t, sigma);
}

Image init_canvas(const CanvasAssembler& assembler, const NoiseSchedule& sched, RandomStream& rng) {
    return rng.normal_image(assembler.side(), assembler.side(), assembler.channels(),
                            sched.sigma.back());
}

constexpr double kResidualFloor = 1e-8;

void validate_sampler_config(const SamplerConfig& cfg) {
    if (cfg.epsilon <= 0.0)
        throw std::invalid_argument("sampler: epsilon must be > 0");
    if (cfg.zeta < 0.0) throw std::invalid_argument("sampler: zeta must be >= 0");
}

}  // namespace

Image padis_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                        const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n) {
    validate_sampler_config(cfg);
    RandomStream rng(cfg.seed);
    RunTrace trace(cfg, inner_n);
    Image x = init_canvas(assembler, sched, rng);
    int side = assembler.side();

    for (int t = sched.T(); t >= 1; --t) {
        double sigma = sched.at(t);
        if (cfg.clamp_border) clamp_border_to_zero(x, inner_n);
        Image z = rng.normal_image(side, side, x.c, sigma);
        double alpha = cfg.epsilon * sigma * sigma;

        SweepResult sweep = assembler.sweep(x, sigma, rng);

        Image residual = y - op.apply(crop_center(sweep.denoised, inner_n));
        double residual_norm = norm2(residual);
        if (cfg.zeta > 0.0) {
            double zeta_t = cfg.zeta / std::max(kResidualFloor, residual_norm);
            // x <- x - zeta_t * grad ||y - A(D)||^2, grad = -2 J^T A^T residual
            Image v = embed_inner(op.adjoint(residual), side);
            axpy(x, 2.0 * zeta_t, sweep.vjp(v));
        }

        axpy(x, 0.5 * alpha, sweep.score);
        axpy(x, std::sqrt(alpha), z);
        check_finite(x, t, sigma);
        trace.row(t, sigma, residual_norm, x);
    }
    if (cfg.final_canvas_out) *cfg.final_canvas_out = x;
    return crop_center(x, inner_n);
}

Image langevin_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                           const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n) {
    validate_sampler_config(cfg);
    RandomStream rng(cfg.seed);
    RunTrace trace(cfg, inner_n);
    Image x = init_canvas(assembler, sched, rng);
    int side = assembler.side();

    for (int t = sched.T(); t >= 1; --t) {
        double sigma = sched.at(t);
        if (cfg.clamp_border) clamp_border_to_zero(x, inner_n);
        Image z = rng.normal_image(side, side, x.c, sigma);
        double alpha = cfg.epsilon * sigma * sigma;

        SweepResult sweep = assembler.sweep(x, sigma, rng);
        double residual_norm = norm2(y - op.apply(crop_center(sweep.denoised, inner_n)));

        if (cfg.zeta > 0.0) {
            // the step normalization uses the state residual, not the
            // denoised-estimate residual
            Image residual = y - op.apply(crop_center(x, inner_n));
            double zeta_t = cfg.zeta / std::max(kResidualFloor, norm2(residual));
            axpy(x, zeta_t, embed_inner(op.adjoint(residual), side));
        }

        axpy(x, 0.5 * alpha, sweep.score);
        axpy(x, std::sqrt(alpha), z);
        check_finite(x, t, sigma);
        trace.row(t, sigma, residual_norm, x);
    }
    if (cfg.final_canvas_out) *cfg.final_canvas_out = x;
    return crop_center(x, inner_n);
}

Image pc_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                     const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n) {
    validate_sampler_config(cfg);
    RandomStream rng(cfg.seed);
    RunTrace trace(cfg, inner_n);
    Image x = init_canvas(assembler, sched, rng);
    int side = assembler.side();

    auto data_step = [&]() {
        if (cfg.zeta <= 0.0) return;
        Image residual = y - op.apply(crop_center(x, inner_n));
        double zeta_t = cfg.zeta / std::max(kResidualFloor, norm2(residual));
        axpy(x, zeta_t, embed_inner(op.adjoint(residual), side));
    };

    for (int t = sched.T(); t >= 1; --t) {
        double sigma = sched.at(t);
        if (cfg.clamp_border) clamp_border_to_zero(x, inner_n);
        double sigma_next = (t == sched.T()) ? sigma : sched.at(t + 1);  // sigma_{T+1} := sigma_T
        double gap = sigma_next * sigma_next - sigma * sigma;

        // predictor: reverse diffusion from sigma_{t+1} toward sigma_t
        SweepResult pred = assembler.sweep(x, sigma_next, rng);
        axpy(x, gap, pred.score);
        data_step();
        Image z1 = rng.normal_image(side, side, x.c, 1.0);
        axpy(x, std::sqrt(std::max(0.0, gap)), z1);

        // corrector: adaptive-step langevin at sigma_t
        Image z2 = rng.normal_image(side, side, x.c, 1.0);
        SweepResult corr = assembler.sweep(x, sigma, rng);
        double residual_norm = norm2(y - op.apply(crop_center(corr.denoised, inner_n)));
        double snorm = norm2(corr.score);
        if (snorm > 0.0) {
            double eps_i = 2.0 * cfg.corrector_r * norm2(z2) / snorm;
            axpy(x, eps_i, corr.score);
            axpy(x, std::sqrt(2.0 * eps_i), z2);
        }
        data_step();

        check_finite(x, t, sigma);
        trace.row(t, sigma, residual_norm, x);
    }
    if (cfg.final_canvas_out) *cfg.final_canvas_out = x;
    return crop_center(x, inner_n);
}

Image ddnm_reconstruct(const CanvasAssembler& assembler, const LinearOperator& op, const Image& y,
                       const NoiseSchedule& sched, const SamplerConfig& cfg, int inner_n) {
    if (!op.has_pinv())
        throw std::invalid_argument(
            "ddnm_reconstruct: operator has no pseudo-inverse (deblurring is unsupported)");
    validate_sampler_config(cfg);
    RandomStream rng(cfg.seed);
    RunTrace trace(cfg, inner_n);
    Image x = init_canvas(assembler, sched, rng);
    int side = assembler.side();

    for (int t = sched.T(); t >= 1; --t) {
        double sigma = sched.at(t);
        if (cfg.clamp_border) clamp_border_to_zero(x, inner_n);
        Image z = rng.normal_image(side, side, x.c, sigma);
        double alpha = cfg.epsilon * sigma * sigma;

        SweepResult sweep = assembler.sweep(x, sigma, rng);
        Image d_inner = crop_center(sweep.denoised, inner_n);
        double residual_norm = norm2(y - op.apply(d_inner));
        Image projected = ddnm_project(d_inner, y, op);
        Image d = sweep.denoised;  // border stays as assembled (zero)
        embed_center(d, projected);

        Image score = tweedie_score(d, x, sigma);
        axpy(x, 0.5 * alpha, score);
        axpy(x, std::sqrt(alpha), z);
        check_finite(x, t, sigma);
        trace.row(t, sigma, residual_norm, x);
    }
    if (cfg.final_canvas_out) *cfg.final_canvas_out = x;
    return crop_center(x, inner_n);
}

Image generate(const CanvasAssembler& assembler, const NoiseSchedule& sched, const SamplerConfig& cfg,
               int inner_n) {
    validate_sampler_config(cfg);
    RandomStream rng(cfg.seed);
    RunTrace trace(cfg, inner_n);
    Image x = init_canvas(assembler, sched, rng);
    int side = assembler.side();

    for (int t = sched.T(); t >= 1; --t) {
        double sigma = sched.at(t);
        if (cfg.clamp_border) clamp_border_to_zero(x, inner_n);
        Image z = rng.normal_image(side, side, x.c, sigma);
        double alpha = cfg.epsilon * sigma * sigma;
        SweepResult sweep = assembler.sweep(x, sigma, rng);
        axpy(x, 0.5 * alpha, sweep.score);
        axpy(x, std::sqrt(alpha), z);
        check_finite(x, t, sigma);
        trace.row(t, sigma, std::numeric_limits<double>::quiet_NaN(), x);
    }
    if (cfg.final_canvas_out) *cfg.final_canvas_out = x;
    return crop_center(x, inner_n);
}

}  // namespace padis
