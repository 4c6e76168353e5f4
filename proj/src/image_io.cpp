#include "padis/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace padis {

namespace {

int read_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments per PNM spec
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw std::runtime_error("pnm: truncated header");
    int val = 0;
    while (ch != EOF && std::isdigit(ch)) {
        val = val * 10 + (ch - '0');
        ch = in.get();
    }
    return val;
}

uint16_t quantize(double x, int maxval) {
    double t = std::min(1.0, std::max(0.0, x));
    return static_cast<uint16_t>(std::lround(t * maxval));
}

}  // namespace

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pnm: cannot open " + path);
    char m0 = static_cast<char>(in.get());
    char m1 = static_cast<char>(in.get());
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw std::runtime_error("pnm: unsupported magic in " + path);
    int channels = (m1 == '6') ? 3 : 1;
    int w = read_pnm_token(in);
    int h = read_pnm_token(in);
    int maxval = read_pnm_token(in);
    if (w <= 0 || h <= 0 || (maxval != 255 && maxval != 65535))
        throw std::runtime_error("pnm: bad dimensions/maxval in " + path);
    if (maxval == 65535 && channels != 1)
        throw std::runtime_error("pnm: 16-bit supported for PGM only");
    int bytes_per = (maxval == 255) ? 1 : 2;
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * channels * bytes_per);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
        throw std::runtime_error("pnm: truncated pixel data in " + path);

    Image img(h, w, channels);
    size_t p = 0;
    for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col)
            for (int ch = 0; ch < channels; ++ch) {
                int raw;
                if (bytes_per == 1) {
                    raw = buf[p++];
                } else {
                    raw = (buf[p] << 8) | buf[p + 1];  // big-endian per PNM
                    p += 2;
                }
                img.at(r, col, ch) = static_cast<double>(raw) / maxval;
            }
    if (!all_finite(img)) throw std::runtime_error("pnm: non-finite values in " + path);
    return img;
}

void write_pgm(const std::string& path, const Image& img, int bits) {
    if (img.c != 1) throw std::invalid_argument("write_pgm: expected 1 channel");
    if (bits != 8 && bits != 16) throw std::invalid_argument("write_pgm: bits must be 8 or 16");
    int maxval = (bits == 8) ? 255 : 65535;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pnm: cannot write " + path);
    out << "P5\n" << img.w << " " << img.h << "\n" << maxval << "\n";
    for (int r = 0; r < img.h; ++r)
        for (int col = 0; col < img.w; ++col) {
            uint16_t q = quantize(img.at(r, col), maxval);
            if (bits == 8) {
                out.put(static_cast<char>(q));
            } else {
                out.put(static_cast<char>(q >> 8));
                out.put(static_cast<char>(q & 0xff));
            }
        }
}

void write_ppm(const std::string& path, const Image& img) {
    if (img.c != 3) throw std::invalid_argument("write_ppm: expected 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pnm: cannot write " + path);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    for (int r = 0; r < img.h; ++r)
        for (int col = 0; col < img.w; ++col)
            for (int ch = 0; ch < 3; ++ch)
                out.put(static_cast<char>(quantize(img.at(r, col, ch), 255)));
}

void write_pnm(const std::string& path, const Image& img, int bits) {
    if (img.c == 1)
        write_pgm(path, img, bits);
    else if (img.c == 3)
        write_ppm(path, img);
    else
        throw std::invalid_argument("write_pnm: unsupported channel count");
}

}  // namespace padis
