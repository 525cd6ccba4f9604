#pragma once

#include <cstddef>
#include <vector>

namespace bblab {

// A point in media/feature space: pixel intensities or feature values.
// Values stay continuous (no rounding) while attacks run; quantization
// happens only on image export.
struct Signal {
  std::vector<double> values;

  Signal() = default;
  explicit Signal(std::vector<double> v) : values(std::move(v)) {}
  static Signal zeros(std::size_t n) { return Signal(std::vector<double>(n, 0.0)); }

  std::size_t dim() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const Signal& o) const { return values == o.values; }
};

void check_same_dim(const Signal& a, const Signal& b);
void check_finite(const Signal& s);

Signal add(const Signal& a, const Signal& b);
Signal sub(const Signal& a, const Signal& b);
Signal scaled(const Signal& a, double c);
double dot(const Signal& a, const Signal& b);
double norm(const Signal& s);

double squared_distance(const Signal& a, const Signal& b);
double euclidean_distance(const Signal& a, const Signal& b);

// Peak signal-to-noise ratio in decibels. Identical signals give +infinity
// (zero mean squared error has no finite dB value).
double psnr(const Signal& original, const Signal& modified, double max_value);

double mse(const Signal& a, const Signal& b);

}  // namespace bblab
