#include "bblab/watermark.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "bblab/errors.hpp"

namespace bblab {

Watermark generate_watermark(std::size_t dim, double strength, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("watermark dimension must be at least 1");
  if (strength <= 0.0) throw std::invalid_argument("watermark strength must be positive");

  Watermark wm;
  wm.strength = strength;
  wm.pattern.values.resize(dim);
  const std::size_t n_pos = (dim + 1) / 2;
  for (std::size_t i = 0; i < dim; ++i) {
    wm.pattern.values[i] = (i < n_pos) ? strength : -strength;
  }
  for (std::size_t i = dim; i > 1; --i) {
    std::swap(wm.pattern.values[i - 1], wm.pattern.values[rng.below(i)]);
  }
  // ||w||^2 = dim * strength^2 for a two-point pattern.
  wm.threshold = 0.5 * static_cast<double>(dim) * strength * strength;
  return wm;
}

Signal embed(const Signal& x, const Watermark& wm) { return add(x, wm.pattern); }

double correlate(const Signal& s, const Watermark& wm) { return dot(s, wm.pattern); }

bool detect(const Signal& s, const Watermark& wm) {
  return correlate(s, wm) >= wm.threshold;
}

BinarySession open_binary_session(const Watermark& wm, bool logging) {
  return BinarySession([wm](const Signal& q) { return detect(q, wm); }, logging);
}

NumericSession open_numeric_session(const Watermark& wm, bool logging) {
  return NumericSession([wm](const Signal& q) { return correlate(q, wm); }, logging);
}

namespace {
constexpr char kMagic[4] = {'B', 'B', 'W', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void save_watermark(const Watermark& wm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write watermark file: " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(wm.dim()));
  put(out, wm.strength);
  put(out, wm.threshold);
  for (double v : wm.pattern.values) put(out, v);
  if (!out) throw Error("write failed: " + path);
}

Watermark load_watermark(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open watermark file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(path + ": not a watermark sidecar file");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kVersion) throw ParseError(path + ": unsupported sidecar version");
  const auto dim = take<std::uint64_t>(in);
  Watermark wm;
  wm.strength = take<double>(in);
  wm.threshold = take<double>(in);
  wm.pattern.values.resize(dim);
  for (auto& v : wm.pattern.values) v = take<double>(in);
  if (!in) throw ParseError(path + ": truncated watermark file");
  return wm;
}

}  // namespace bblab
