#include "bblab/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image file: " + path);

  const std::string magic = next_token(in);
  if (magic != "P5") throw ParseError(path + ": not a binary P5 PGM (magic '" + magic + "')");
  const std::string ws = next_token(in), hs = next_token(in), ms = next_token(in);
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(ws);
    height = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw ParseError(path + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0) throw ParseError(path + ": bad image dimensions");
  if (maxval != 255) throw ParseError(path + ": expected maxval 255, got " + ms);

  Image img;
  img.width = width;
  img.height = height;
  img.pixels.values.resize(static_cast<std::size_t>(width) * height);
  std::string data(img.pixels.dim(), '\0');
  in.read(data.data(), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size())) {
    throw ParseError(path + ": truncated pixel data");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    img.pixels.values[i] = static_cast<double>(static_cast<unsigned char>(data[i]));
  }
  return img;
}

void write_pgm(const std::string& path, const Signal& pixels, int width, int height) {
  if (width <= 0 || height <= 0 ||
      pixels.dim() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("pgm write: pixel count does not match width*height");
  }
  check_finite(pixels);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image file: " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  std::string data(pixels.dim(), '\0');
  for (std::size_t i = 0; i < pixels.dim(); ++i) {
    const double v = std::clamp(std::round(pixels[i]), 0.0, 255.0);
    data[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bblab
