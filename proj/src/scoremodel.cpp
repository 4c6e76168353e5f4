#include "padis/scoremodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace padis {

Image tweedie_score(const Image& denoised, const Image& x, double sigma) {
    require_same_shape(denoised, x, "tweedie_score");
    if (sigma <= 0.0) throw std::invalid_argument("tweedie_score: sigma must be > 0");
    Image s = denoised;
    double inv = 1.0 / (sigma * sigma);
    for (size_t i = 0; i < s.v.size(); ++i) s.v[i] = (s.v[i] - x.v[i]) * inv;
    return s;
}

Image eps_to_score(const Image& eps_out, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("eps_to_score: sigma must be > 0");
    return eps_out * (-1.0 / sigma);
}

Image score_to_eps(const Image& score, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("score_to_eps: sigma must be > 0");
    return score * (-sigma);
}

double vp_to_ve_sigma(double alpha_t) {
    if (!(alpha_t > 0.0 && alpha_t < 1.0))
        throw std::invalid_argument("vp_to_ve_sigma: alpha_t must be in (0,1)");
    return std::sqrt(1.0 - alpha_t) / std::sqrt(alpha_t);
}

Image border_denoise(const Image& x_border) { return Image(x_border.h, x_border.w, x_border.c); }

Image border_score(const Image& x_border, double sigma) {
    return tweedie_score(border_denoise(x_border), x_border, sigma);
}

GaussianPrior::GaussianPrior(Image mean_, Image var_) : mean(std::move(mean_)), var(std::move(var_)) {
    require_same_shape(mean, var, "GaussianPrior");
    for (double v : var.v)
        if (v < 0.0) throw std::invalid_argument("GaussianPrior: variances must be >= 0");
}

Image GaussianPrior::denoise(const Image& x, double sigma, const Image*) const {
    require_same_shape(x, mean, "GaussianPrior::denoise");
    if (sigma < 0.0) throw std::invalid_argument("GaussianPrior::denoise: sigma must be >= 0");
    if (sigma == 0.0) return x;
    Image d = x;
    double s2 = sigma * sigma;
    for (size_t i = 0; i < d.v.size(); ++i) {
        double g = var.v[i] / (var.v[i] + s2);
        d.v[i] = mean.v[i] + g * (x.v[i] - mean.v[i]);
    }
    return d;
}

Image GaussianPrior::vjp(const Image& x, double sigma, const Image*, const Image& v) const {
    require_same_shape(x, mean, "GaussianPrior::vjp");
    require_same_shape(v, mean, "GaussianPrior::vjp");
    if (sigma <= 0.0) throw std::invalid_argument("GaussianPrior::vjp: sigma must be > 0");
    Image out = v;
    double s2 = sigma * sigma;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= var.v[i] / (var.v[i] + s2);
    return out;
}

Image GaussianPrior::score(const Image& x, double sigma) const {
    require_same_shape(x, mean, "GaussianPrior::score");
    if (sigma <= 0.0) throw std::invalid_argument("GaussianPrior::score: sigma must be > 0");
    Image s = x;
    double s2 = sigma * sigma;
    for (size_t i = 0; i < s.v.size(); ++i) s.v[i] = -(x.v[i] - mean.v[i]) / (var.v[i] + s2);
    return s;
}

GaussianMixturePrior::GaussianMixturePrior(std::vector<Component> comps_) : comps(std::move(comps_)) {
    if (comps.empty() || comps.size() > 8)
        throw std::invalid_argument("GaussianMixturePrior: need 1..8 components");
    for (const Component& c : comps) {
        require_same_shape(c.mean, c.var, "GaussianMixturePrior");
        require_same_shape(c.mean, comps.front().mean, "GaussianMixturePrior");
        if (c.weight <= 0.0) throw std::invalid_argument("GaussianMixturePrior: weights must be > 0");
        for (double v : c.var.v)
            if (v <= 0.0) throw std::invalid_argument("GaussianMixturePrior: variances must be > 0");
    }
}

namespace {

// log N(x; mean, var + sigma^2 I) + log weight, for one component
double component_logp(const GaussianMixturePrior::Component& c, const Image& x, double sigma) {
    double s2 = sigma * sigma;
    double lp = std::log(c.weight);
    for (size_t i = 0; i < x.v.size(); ++i) {
        double t = c.var.v[i] + s2;
        double d = x.v[i] - c.mean.v[i];
        lp += -0.5 * (std::log(2.0 * M_PI * t) + d * d / t);
    }
    return lp;
}

std::vector<double> responsibilities(const GaussianMixturePrior& gmm, const Image& x, double sigma,
                                     double* logsum_out) {
    std::vector<double> lp(gmm.comps.size());
    for (size_t k = 0; k < gmm.comps.size(); ++k) lp[k] = component_logp(gmm.comps[k], x, sigma);
    double mx = *std::max_element(lp.begin(), lp.end());
    double sum = 0.0;
    for (double l : lp) sum += std::exp(l - mx);
    std::vector<double> r(lp.size());
    for (size_t k = 0; k < lp.size(); ++k) r[k] = std::exp(lp[k] - mx) / sum;
    if (logsum_out) *logsum_out = mx + std::log(sum);
    return r;
}

}  // namespace

Image GaussianMixturePrior::denoise(const Image& x, double sigma, const Image*) const {
    require_same_shape(x, comps.front().mean, "GaussianMixturePrior::denoise");
    if (sigma < 0.0) throw std::invalid_argument("GaussianMixturePrior: sigma must be >= 0");
    if (sigma == 0.0) return x;
    std::vector<double> r = responsibilities(*this, x, sigma, nullptr);
    Image d(x.h, x.w, x.c);
    double s2 = sigma * sigma;
    for (size_t k = 0; k < comps.size(); ++k) {
        const Component& c = comps[k];
        for (size_t i = 0; i < d.v.size(); ++i) {
            double g = c.var.v[i] / (c.var.v[i] + s2);
            d.v[i] += r[k] * (c.mean.v[i] + g * (x.v[i] - c.mean.v[i]));
        }
    }
    return d;
}

Image GaussianMixturePrior::vjp(const Image& x, double sigma, const Image*, const Image& v) const {
    require_same_shape(x, comps.front().mean, "GaussianMixturePrior::vjp");
    require_same_shape(v, x, "GaussianMixturePrior::vjp");
    if (sigma <= 0.0) throw std::invalid_argument("GaussianMixturePrior::vjp: sigma must be > 0");
    // D(x) = sum_k r_k(x) m_k(x) with m_k = mu_k + S_k (x - mu_k);
    // grad r_k = r_k (g_k - gbar), g_k the component log-density gradient.
    std::vector<double> r = responsibilities(*this, x, sigma, nullptr);
    double s2 = sigma * sigma;
    size_t d = x.v.size();
    std::vector<std::vector<double>> g(comps.size(), std::vector<double>(d));
    std::vector<double> gbar(d, 0.0);
    for (size_t k = 0; k < comps.size(); ++k) {
        for (size_t i = 0; i < d; ++i) {
            g[k][i] = -(x.v[i] - comps[k].mean.v[i]) / (comps[k].var.v[i] + s2);
            gbar[i] += r[k] * g[k][i];
        }
    }
    Image out(x.h, x.w, x.c);
    for (size_t k = 0; k < comps.size(); ++k) {
        const Component& c = comps[k];
        // m_k (g_k - gbar) . v  +  S_k v, each weighted by r_k
        double dirdot = 0.0;
        for (size_t i = 0; i < d; ++i) dirdot += (g[k][i] - gbar[i]) * v.v[i];
        for (size_t i = 0; i < d; ++i) {
            double sk = c.var.v[i] / (c.var.v[i] + s2);
            double mk = c.mean.v[i] + sk * (x.v[i] - c.mean.v[i]);
            out.v[i] += r[k] * (mk * dirdot + sk * v.v[i]);
        }
    }
    return out;
}

Image GaussianMixturePrior::score(const Image& x, double sigma) const {
    if (sigma <= 0.0) throw std::invalid_argument("GaussianMixturePrior::score: sigma must be > 0");
    std::vector<double> r = responsibilities(*this, x, sigma, nullptr);
    Image s(x.h, x.w, x.c);
    double s2 = sigma * sigma;
    for (size_t k = 0; k < comps.size(); ++k)
        for (size_t i = 0; i < s.v.size(); ++i)
            s.v[i] += r[k] * (-(x.v[i] - comps[k].mean.v[i]) / (comps[k].var.v[i] + s2));
    return s;
}

double GaussianMixturePrior::log_density(const Image& x, double sigma) const {
    double logsum = 0.0;
    responsibilities(*this, x, sigma, &logsum);
    return logsum;
}

namespace {

// shared decode of the patch top-left corner from the positional channels
std::pair<int, int> decode_location(const Image& pos, int canvas_side) {
    double denom = static_cast<double>(canvas_side - 1);
    int c0 = static_cast<int>(std::lround((pos.at(0, 0, 0) + 1.0) * denom / 2.0));
    int r0 = static_cast<int>(std::lround((pos.at(0, 0, 1) + 1.0) * denom / 2.0));
    if (r0 < 0 || c0 < 0 || r0 + pos.h > canvas_side || c0 + pos.w > canvas_side)
        throw std::invalid_argument("patch oracle: decoded location outside canvas");
    return {r0, c0};
}

}  // namespace

Image GaussianPatchOracle::denoise(const Image& x, double sigma, const Image* pos) const {
    if (!pos) throw std::invalid_argument("GaussianPatchOracle: needs positional channels");
    auto [r0, c0] = decode_location(*pos, canvas.mean.h);
    GaussianPrior slice(extract_patch(canvas.mean, r0, c0, x.h),
                        extract_patch(canvas.var, r0, c0, x.h));
    return slice.denoise(x, sigma, nullptr);
}

Image GaussianPatchOracle::vjp(const Image& x, double sigma, const Image* pos, const Image& v) const {
    if (!pos) throw std::invalid_argument("GaussianPatchOracle: needs positional channels");
    auto [r0, c0] = decode_location(*pos, canvas.mean.h);
    GaussianPrior slice(extract_patch(canvas.mean, r0, c0, x.h),
                        extract_patch(canvas.var, r0, c0, x.h));
    return slice.vjp(x, sigma, nullptr, v);
}

PatchProductPrior::PatchProductPrior(PartitionSpec spec_, std::vector<GaussianPrior> factors_)
    : spec(spec_), factors(std::move(factors_)) {
    spec.validate();
    if (static_cast<int>(factors.size()) != spec.patch_count())
        throw std::invalid_argument("PatchProductPrior: need one factor per patch");
    for (const GaussianPrior& f : factors)
        if (f.mean.h != spec.p || f.mean.w != spec.p)
            throw std::invalid_argument("PatchProductPrior: factor shape must be p x p");
}

GaussianPrior PatchProductPrior::canvas_prior() const {
    int side = spec.canvas_side();
    int c = factors.front().mean.c;
    Image mean(side, side, c), var(side, side, c);
    std::vector<PatchLocation> locs = patch_locations(spec);
    for (size_t r = 0; r < locs.size(); ++r) {
        scatter_patch(mean, factors[r].mean, locs[r].r0, locs[r].c0);
        scatter_patch(var, factors[r].var, locs[r].r0, locs[r].c0);
    }
    return GaussianPrior(std::move(mean), std::move(var));
}

namespace {

// Resolves the patch factor from the positional channels; the sub-pixel
// coordinates uniquely identify the top-left corner on the shared grid.
struct ProductPriorPatchModel : ScoreModel {
    const PatchProductPrior* prior;
    std::vector<PatchLocation> locs;

    explicit ProductPriorPatchModel(const PatchProductPrior* prior_)
        : prior(prior_), locs(patch_locations(prior_->spec)) {}

    int channels() const override { return prior->factors.front().channels(); }

    const GaussianPrior& factor_at(const Image* pos) const {
        if (!pos) throw std::invalid_argument("product prior patch model needs positional channels");
        int side = prior->spec.canvas_side();
        double denom = static_cast<double>(side - 1);
        int c0 = static_cast<int>(std::lround((pos->at(0, 0, 0) + 1.0) * denom / 2.0));
        int r0 = static_cast<int>(std::lround((pos->at(0, 0, 1) + 1.0) * denom / 2.0));
        for (size_t r = 0; r < locs.size(); ++r)
            if (locs[r].r0 == r0 && locs[r].c0 == c0) return prior->factors[r];
        throw std::invalid_argument("product prior patch model: location not on the fixed partition");
    }

    Image denoise(const Image& x, double sigma, const Image* pos) const override {
        return factor_at(pos).denoise(x, sigma, nullptr);
    }
    Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const override {
        return factor_at(pos).vjp(x, sigma, nullptr, v);
    }
};

}  // namespace

std::unique_ptr<ScoreModel> PatchProductPrior::make_patch_model() const {
    return std::make_unique<ProductPriorPatchModel>(this);
}

}  // namespace padis
