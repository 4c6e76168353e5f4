#pragma once

#include <string>

#include "padis/tensor.hpp"

namespace padis {

// Binary PGM (P5) / PPM (P6) with linear [0,max]<->[0,1] mapping.
// 8-bit by default; 16-bit PGM (big-endian samples, maxval 65535) supported
// for CT phantoms. Row-major, top-left origin.

Image read_pnm(const std::string& path);
void write_pgm(const std::string& path, const Image& img, int bits = 8);
void write_ppm(const std::string& path, const Image& img);
// picks PGM for 1 channel, PPM for 3
void write_pnm(const std::string& path, const Image& img, int bits = 8);

}  // namespace padis
