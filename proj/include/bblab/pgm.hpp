#pragma once

#include <string>

#include "bblab/signal.hpp"

namespace bblab {

struct Image {
  Signal pixels;  // row-major, values in [0, 255]
  int width = 0;
  int height = 0;
};

// Binary "P5" PGM with maxval 255. Pixel values are rounded and clamped to
// [0, 255] on write only.
Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Signal& pixels, int width, int height);

}  // namespace bblab
