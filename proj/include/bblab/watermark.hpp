#pragma once

#include <string>

#include "bblab/oracle.hpp"
#include "bblab/rng.hpp"
#include "bblab/signal.hpp"

namespace bblab {

// Additive spread-spectrum watermark: a secret +/-strength pattern plus the
// linear correlation detector threshold.
struct Watermark {
  Signal pattern;
  double threshold = 0.0;
  double strength = 0.0;

  std::size_t dim() const { return pattern.dim(); }
};

// Pattern is a balanced shuffle of +strength/-strength entries (zero sum, up
// to one element when dim is odd), so the correlation of unrelated content
// does not pick up a DC term. Threshold is half the score shift that
// embedding induces: eta = ||w||^2 / 2.
Watermark generate_watermark(std::size_t dim, double strength, Rng& rng);

Signal embed(const Signal& x, const Watermark& wm);
double correlate(const Signal& s, const Watermark& wm);

// Present iff correlate(s, wm) >= threshold; the boundary itself counts as
// present.
bool detect(const Signal& s, const Watermark& wm);

BinarySession open_binary_session(const Watermark& wm, bool logging = false);
NumericSession open_numeric_session(const Watermark& wm, bool logging = false);

// Binary sidecar (dim, strength, threshold, pattern) so separate embed and
// detect invocations can share the secret.
void save_watermark(const Watermark& wm, const std::string& path);
Watermark load_watermark(const std::string& path);

}  // namespace bblab
