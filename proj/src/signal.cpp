#include "bblab/signal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bblab/errors.hpp"

namespace bblab {

void check_same_dim(const Signal& a, const Signal& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
}

void check_finite(const Signal& s) {
  for (double v : s.values) {
    if (!std::isfinite(v)) throw Error("signal contains a non-finite value");
  }
}

Signal add(const Signal& a, const Signal& b) {
  check_same_dim(a, b);
  Signal out = a;
  for (std::size_t i = 0; i < b.dim(); ++i) out.values[i] += b.values[i];
  return out;
}

Signal sub(const Signal& a, const Signal& b) {
  check_same_dim(a, b);
  Signal out = a;
  for (std::size_t i = 0; i < b.dim(); ++i) out.values[i] -= b.values[i];
  return out;
}

Signal scaled(const Signal& a, double c) {
  Signal out = a;
  for (double& v : out.values) v *= c;
  return out;
}

double dot(const Signal& a, const Signal& b) {
  check_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double norm(const Signal& s) { return std::sqrt(dot(s, s)); }

double squared_distance(const Signal& a, const Signal& b) {
  check_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(const Signal& a, const Signal& b) {
  return std::sqrt(squared_distance(a, b));
}

double mse(const Signal& a, const Signal& b) {
  check_same_dim(a, b);
  if (a.dim() == 0) throw Error("mse of empty signals");
  return squared_distance(a, b) / static_cast<double>(a.dim());
}

double psnr(const Signal& original, const Signal& modified, double max_value) {
  if (max_value <= 0.0) throw std::invalid_argument("psnr: max_value must be positive");
  const double e = mse(original, modified);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / e);
}

}  // namespace bblab
