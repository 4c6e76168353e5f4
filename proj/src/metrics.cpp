#include "padis/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace padis {

double psnr(const Image& x, const Image& ref, double data_range) {
    require_same_shape(x, ref, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < x.v.size(); ++i) {
        double d = x.v[i] - ref.v[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.v.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

double psnr_csv_cap(double value) { return std::isfinite(value) ? std::min(value, 99.0) : 99.0; }

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
    std::vector<double> w(kWin * kWin);
    double sum = 0.0;
    double s2 = 2.0 * 1.5 * 1.5;
    for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
            double dr = r - kWin / 2, dc = c - kWin / 2;
            w[r * kWin + c] = std::exp(-(dr * dr + dc * dc) / s2);
            sum += w[r * kWin + c];
        }
    for (double& x : w) x /= sum;
    return w;
}

double ssim_channel(const Image& x, const Image& ref, int ch, const std::vector<double>& win) {
    int vh = x.h - kWin + 1, vw = x.w - kWin + 1;
    double acc = 0.0;
    for (int r = 0; r < vh; ++r)
        for (int c = 0; c < vw; ++c) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    double w = win[i * kWin + j];
                    double a = x.at(r + i, c + j, ch);
                    double b = ref.at(r + i, c + j, ch);
                    mx += w * a;
                    my += w * b;
                    mxx += w * a * a;
                    myy += w * b * b;
                    mxy += w * a * b;
                }
            double vx = mxx - mx * mx;
            double vy = myy - my * my;
            double cxy = mxy - mx * my;
            double num = (2 * mx * my + kC1) * (2 * cxy + kC2);
            double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
            acc += num / den;
        }
    return acc / (static_cast<double>(vh) * vw);
}

}  // namespace

double ssim(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "ssim");
    if (x.h < kWin || x.w < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    static const std::vector<double> win = gaussian_window();
    double acc = 0.0;
    for (int ch = 0; ch < x.c; ++ch) acc += ssim_channel(x, ref, ch, win);
    return acc / x.c;
}

}  // namespace padis
