#include "padis/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "padis/fft.hpp"

namespace padis {

namespace {

// Band-limited ramp kernel (spatial form), frequency response ~ 2|f| in cycles
// per sample; combined with the pi/(2*views) outer scale this gives unit DC
// gain through the backprojection.
std::vector<std::complex<double>> ramp_filter_freq(size_t len, double tau) {
    std::vector<std::complex<double>> h(len, 0.0);
    h[0] = 2.0 * (1.0 / (4.0 * tau * tau));
    for (size_t k = 1; k <= len / 2; ++k) {
        double val = (k % 2 == 1) ? 2.0 * (-1.0 / (M_PI * M_PI * k * k * tau * tau)) : 0.0;
        h[k] += val;
        h[len - k] += val;  // circular embedding of the symmetric kernel
    }
    fft(h, false);
    return h;
}

}  // namespace

Image fbp(const Image& sinogram, const CTGeometry& geom, int n) {
    if (geom.views < 1) throw std::invalid_argument("fbp: geometry with zero views");
    if (sinogram.h != geom.views || sinogram.w != geom.detectors || sinogram.c != 1)
        throw std::invalid_argument("fbp: sinogram shape mismatch");

    size_t len = next_pow2(static_cast<size_t>(2 * geom.detectors));
    std::vector<std::complex<double>> hfreq = ramp_filter_freq(len, geom.spacing);

    Image filtered(geom.views, geom.detectors, 1);
    std::vector<std::complex<double>> buf(len);
    for (int v = 0; v < geom.views; ++v) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (int d = 0; d < geom.detectors; ++d) buf[d] = sinogram.at(v, d);
        fft(buf, false);
        for (size_t i = 0; i < len; ++i) buf[i] *= hfreq[i];
        fft(buf, true);
        // tau factor from the discrete convolution; the adjoint's ray-step
        // weight cancels against the interpolation footprint width, so the
        // exact adjoint already acts as a plain backprojector here
        for (int d = 0; d < geom.detectors; ++d) filtered.at(v, d) = buf[d].real() * geom.spacing;
    }

    RadonOperator radon(geom, n);
    Image img = radon.adjoint(filtered);
    img *= M_PI / (2.0 * geom.views);
    return img;
}

Image naive_baseline(const Image& y, const LinearOperator& op) {
    if (const auto* radon = dynamic_cast<const RadonOperator*>(&op))
        return fbp(y, radon->geom, radon->n);
    if (dynamic_cast<const BlurOperator*>(&op)) return y;
    if (const auto* ds = dynamic_cast<const DownsampleOperator*>(&op)) return ds->pinv(y);
    throw std::invalid_argument("naive_baseline: unknown problem operator");
}

namespace {

// forward differences, Neumann boundary: output has 2*c channels (dx then dy)
Image grad_forward(const Image& x) {
    Image g(x.h, x.w, 2 * x.c);
    for (int ch = 0; ch < x.c; ++ch)
        for (int r = 0; r < x.h; ++r)
            for (int c = 0; c < x.w; ++c) {
                g.at(r, c, 2 * ch) = (c + 1 < x.w) ? x.at(r, c + 1, ch) - x.at(r, c, ch) : 0.0;
                g.at(r, c, 2 * ch + 1) = (r + 1 < x.h) ? x.at(r + 1, c, ch) - x.at(r, c, ch) : 0.0;
            }
    return g;
}

// exact adjoint of grad_forward (negative divergence)
Image grad_adjoint(const Image& g, int channels) {
    Image out(g.h, g.w, channels);
    for (int ch = 0; ch < channels; ++ch)
        for (int r = 0; r < g.h; ++r)
            for (int c = 0; c < g.w; ++c) {
                double gx = (c + 1 < g.w) ? g.at(r, c, 2 * ch) : 0.0;
                double gy = (r + 1 < g.h) ? g.at(r, c, 2 * ch + 1) : 0.0;
                double acc = -gx - gy;
                if (c > 0) acc += g.at(r, c - 1, 2 * ch);
                if (r > 0) acc += g.at(r - 1, c, 2 * ch + 1);
                out.at(r, c, ch) += acc;
            }
    return out;
}

double soft(double t, double thr) {
    if (t > thr) return t - thr;
    if (t < -thr) return t + thr;
    return 0.0;
}

}  // namespace

namespace {

// spectral norm estimate by power iteration on A^T A; deterministic
double operator_norm(const LinearOperator& op) {
    RandomStream rng(0x9d3f77ull);
    Image p = rng.normal_image(op.in_h(), op.in_w(), op.in_c());
    double s = 1.0;
    for (int it = 0; it < 30; ++it) {
        Image q = op.adjoint(op.apply(p));
        double qn = norm2(q);
        if (qn < 1e-300) return 1.0;
        s = std::sqrt(qn / std::max(1e-300, norm2(p)));
        p = q * (1.0 / qn);
    }
    return s;
}

}  // namespace

AdmmTvResult admm_tv(const Image& y, const LinearOperator& op, const AdmmTvConfig& cfg) {
    if (cfg.lambda <= 0.0) throw std::invalid_argument("admm_tv: lambda must be > 0");
    int h = op.in_h(), w = op.in_w(), c = op.in_c();

    // The data term is taken against the spectral-norm-normalized operator so
    // the lambda defaults mean the same thing for CT (||A|| ~ tens) as for
    // blur/superresolution (||A|| ~ 1).
    double inv_s = 1.0 / operator_norm(op);
    Image ys = y * inv_s;
    auto apply_n = [&](const Image& v) { return op.apply(v) * inv_s; };
    auto adjoint_n = [&](const Image& v) { return op.adjoint(v) * inv_s; };

    Image x = adjoint_n(ys);  // cheap data-backed start
    Image z = grad_forward(x);
    Image u(h, w, 2 * c);

    AdmmTvResult res;
    int bad_streak = 0;
    for (int it = 0; it < cfg.outer_iters; ++it) {
        // x-update: (A^T A + rho D^T D) x = A^T y + rho D^T (z - u), warm-started CG
        Image rhs = adjoint_n(ys) + grad_adjoint(z - u, c) * cfg.rho;
        Image r = rhs - (adjoint_n(apply_n(x)) + grad_adjoint(grad_forward(x), c) * cfg.rho);
        Image p = r;
        double rs = dot(r, r);
        for (int cg = 0; cg < cfg.cg_iters && rs > 1e-24; ++cg) {
            Image ap = adjoint_n(apply_n(p)) + grad_adjoint(grad_forward(p), c) * cfg.rho;
            double alpha = rs / std::max(1e-300, dot(p, ap));
            axpy(x, alpha, p);
            axpy(r, -alpha, ap);
            double rs_new = dot(r, r);
            p = r + p * (rs_new / rs);
            rs = rs_new;
        }

        Image dx = grad_forward(x);
        Image t = dx + u;
        for (size_t i = 0; i < z.v.size(); ++i) z.v[i] = soft(t.v[i], cfg.lambda / cfg.rho);
        u += dx - z;

        Image resid = ys - apply_n(x);
        double obj = 0.5 * dot(resid, resid);
        for (double g : dx.v) obj += cfg.lambda * std::abs(g);
        res.objective.push_back(obj);

        if (it >= 10 && res.objective[it] > res.objective[it - 1] * (1.0 + 1e-6)) {
            if (++bad_streak >= 10) throw std::runtime_error("admm_tv: objective diverging");
        } else {
            bad_streak = 0;
        }
    }
    res.x = std::move(x);
    return res;
}

}  // namespace padis
