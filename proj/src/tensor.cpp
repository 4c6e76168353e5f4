#include "padis/tensor.hpp"

#include <algorithm>
#include <string>

namespace padis {

Image& Image::operator+=(const Image& o) {
    require_same_shape(*this, o, "operator+=");
    for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
}

Image& Image::operator-=(const Image& o) {
    require_same_shape(*this, o, "operator-=");
    for (size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
}

Image& Image::operator*=(double s) {
    for (double& x : v) x *= s;
    return *this;
}

void Image::fill(double s) { std::fill(v.begin(), v.end(), s); }

Image operator+(Image a, const Image& b) { a += b; return a; }
Image operator-(Image a, const Image& b) { a -= b; return a; }
Image operator*(Image a, double s) { a *= s; return a; }
Image operator*(double s, Image a) { a *= s; return a; }

void axpy(Image& a, double s, const Image& b) {
    require_same_shape(a, b, "axpy");
    for (size_t i = 0; i < a.v.size(); ++i) a.v[i] += s * b.v[i];
}

double dot(const Image& a, const Image& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

double norm2(const Image& a) { return std::sqrt(dot(a, a)); }

double mean(const Image& a) {
    if (a.v.empty()) return 0.0;
    double s = 0.0;
    for (double x : a.v) s += x;
    return s / static_cast<double>(a.v.size());
}

bool all_finite(const Image& a) {
    for (double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

void clamp01(Image& a) {
    for (double& x : a.v) x = std::min(1.0, std::max(0.0, x));
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                    std::to_string(a.h) + "x" + std::to_string(a.w) + "x" +
                                    std::to_string(a.c) + " vs " + std::to_string(b.h) + "x" +
                                    std::to_string(b.w) + "x" + std::to_string(b.c) + ")");
}

}  // namespace padis
