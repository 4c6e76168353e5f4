#pragma once

#include "padis/tensor.hpp"

namespace padis {

// 10*log10(range^2 / MSE); identical images give +inf, capped at 99.0 dB when
// written to CSV. RGB is computed jointly over all channels.
double psnr(const Image& x, const Image& ref, double data_range = 1.0);

// Windowed SSIM: 11x11 Gaussian window sigma 1.5, C1=(0.01 L)^2, C2=(0.03 L)^2,
// L = 1, averaged over the valid (fully-windowed) region. Multi-channel images
// score each channel separately and return the mean.
double ssim(const Image& x, const Image& ref);

double psnr_csv_cap(double value);

}  // namespace padis
