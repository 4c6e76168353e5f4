#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace padis {

// 2D multi-channel image, plane-major layout: v[(ch*h + r)*w + c].
// Values are unitless intensities, nominally in [0,1] for pixel data.
struct Image {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<double> v;

    Image() = default;
    Image(int h_, int w_, int c_ = 1, double fill = 0.0)
        : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}

    double& at(int r, int col, int ch = 0) {
        return v[(static_cast<size_t>(ch) * h + r) * w + col];
    }
    double at(int r, int col, int ch = 0) const {
        return v[(static_cast<size_t>(ch) * h + r) * w + col];
    }
    size_t size() const { return v.size(); }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }

    Image& operator+=(const Image& o);
    Image& operator-=(const Image& o);
    Image& operator*=(double s);
    void fill(double s);
};

Image operator+(Image a, const Image& b);
Image operator-(Image a, const Image& b);
Image operator*(Image a, double s);
Image operator*(double s, Image a);

// a += s*b
void axpy(Image& a, double s, const Image& b);
double dot(const Image& a, const Image& b);
double norm2(const Image& a);
double mean(const Image& a);
bool all_finite(const Image& a);
void clamp01(Image& a);

// Throws std::invalid_argument when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace padis
