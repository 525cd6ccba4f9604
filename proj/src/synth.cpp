#include "bblab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bblab/errors.hpp"

namespace bblab {

ImageKind image_kind_from_string(const std::string& name) {
  if (name == "gradient") return ImageKind::Gradient;
  if (name == "texture-noise") return ImageKind::TextureNoise;
  if (name == "blobs") return ImageKind::Blobs;
  throw std::invalid_argument("unknown image kind: " + name);
}

namespace {

void stretch_to_range(Signal& img) {
  double lo = img[0], hi = img[0];
  for (double v : img.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) {
    for (double& v : img.values) v = 128.0;
    return;
  }
  for (double& v : img.values) v = std::clamp((v - lo) * 255.0 / (hi - lo), 0.0, 255.0);
}

Signal gradient_image(int w, int h, Rng& rng) {
  // Positive slope along x keeps every row monotone.
  const double a = rng.uniform(0.4, 1.0) * 255.0 / std::max(1, w - 1);
  const double b = rng.uniform(-0.5, 0.5) * 255.0 / std::max(1, h - 1);
  const double c = rng.uniform(0.0, 64.0);
  Signal img = Signal::zeros(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img[static_cast<std::size_t>(y) * w + x] =
          std::clamp(a * x + b * y + c, 0.0, 255.0);
    }
  }
  return img;
}

Signal texture_noise_image(int w, int h, Rng& rng) {
  // Value noise: a coarse random lattice, bilinear interpolation, a little
  // fine grain, then a contrast stretch to fill the pixel range.
  const int cell = 4;
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (double& v : lattice) v = rng.uniform();

  Signal img = Signal::zeros(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const double fy = static_cast<double>(y) / cell;
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double tx = fx - x0, ty = fy - y0;
      auto at = [&](int gx, int gy) { return lattice[static_cast<std::size_t>(gy) * gw + gx]; };
      const double v = (1 - tx) * (1 - ty) * at(x0, y0) + tx * (1 - ty) * at(x0 + 1, y0) +
                       (1 - tx) * ty * at(x0, y0 + 1) + tx * ty * at(x0 + 1, y0 + 1);
      img[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  for (double& v : img.values) v += rng.uniform(-0.06, 0.06);
  stretch_to_range(img);
  return img;
}

Signal blobs_image(int w, int h, Rng& rng) {
  Signal img = Signal::zeros(static_cast<std::size_t>(w) * h);
  const double base = rng.uniform(0.2, 0.8);
  for (double& v : img.values) v = base;
  const int k = 3 + static_cast<int>(rng.below(5));
  for (int i = 0; i < k; ++i) {
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double s = rng.uniform(0.08, 0.3) * std::min(w, h);
    const double amp = rng.sign() * rng.uniform(0.4, 1.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img[static_cast<std::size_t>(y) * w + x] += amp * std::exp(-d2 / (2 * s * s));
      }
    }
  }
  stretch_to_range(img);
  return img;
}

}  // namespace

Signal synth_image(int width, int height, ImageKind kind, Rng& rng) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("synth_image: dimensions must be positive");
  }
  switch (kind) {
    case ImageKind::Gradient:
      return gradient_image(width, height, rng);
    case ImageKind::TextureNoise:
      return texture_noise_image(width, height, rng);
    case ImageKind::Blobs:
      return blobs_image(width, height, rng);
  }
  throw std::invalid_argument("synth_image: unknown kind");
}

namespace {

struct BlobSpec {
  int samples;
  int features;
  int informative;
  double sigma;
  double label_noise;
  double close_offset;  // per-feature center offset of close pairs, in sigmas
  std::vector<double> class_weights;
  // Indices of class pairs whose centers are pulled close together to
  // create overlap regions.
  std::vector<std::pair<int, int>> close_pairs;
};

LabeledDataset make_blob_dataset(const BlobSpec& spec, std::uint64_t seed) {
  Rng rng(seed, streams::kSynth);
  const int n_classes = static_cast<int>(spec.class_weights.size());

  std::vector<std::vector<double>> centers(n_classes, std::vector<double>(spec.informative));
  for (auto& c : centers) {
    for (double& v : c) v = rng.uniform(1.0, 9.0);
  }
  for (auto [a, b] : spec.close_pairs) {
    for (int f = 0; f < spec.informative; ++f) {
      centers[b][f] =
          centers[a][f] + rng.sign() * rng.uniform(0.7, 1.3) * spec.sigma * spec.close_offset;
    }
  }

  LabeledDataset ds;
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (int f = 0; f < spec.features; ++f) ds.feature_names.push_back("f" + std::to_string(f));

  double total_w = 0;
  for (double w : spec.class_weights) total_w += w;
  std::vector<int> counts(n_classes);
  int assigned = 0;
  for (int c = 0; c < n_classes; ++c) {
    counts[c] = static_cast<int>(std::floor(spec.class_weights[c] / total_w * spec.samples));
    assigned += counts[c];
  }
  for (int c = 0; assigned < spec.samples; c = (c + 1) % n_classes) {
    ++counts[c];
    ++assigned;
  }

  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < counts[c]; ++i) {
      Signal row;
      row.values.reserve(spec.features);
      for (int f = 0; f < spec.features; ++f) {
        if (f < spec.informative) {
          row.values.push_back(centers[c][f] + spec.sigma * rng.normal());
        } else {
          row.values.push_back(rng.uniform(0.0, 10.0));
        }
      }
      int label = c;
      if (rng.uniform() < spec.label_noise) label = static_cast<int>(rng.below(n_classes));
      ds.rows.push_back(std::move(row));
      ds.labels.push_back(label);
    }
  }

  // Deterministic shuffle so class blocks are interleaved.
  for (std::size_t i = ds.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(ds.rows[i - 1], ds.rows[j]);
    std::swap(ds.labels[i - 1], ds.labels[j]);
  }
  ds.recompute_ranges();
  return ds;
}

}  // namespace

const std::vector<std::string>& synth_dataset_names() {
  static const std::vector<std::string> names = {"iris", "carseats", "college",
                                                 "orange-juice", "wine"};
  return names;
}

LabeledDataset synth_dataset(const std::string& name, std::uint64_t seed) {
  BlobSpec spec;
  if (name == "iris") {
    spec = {150, 4, 4, 0.6, 0.0, 1.6, {1, 1, 1}, {{1, 2}}};
  } else if (name == "carseats") {
    spec = {400, 8, 5, 1.3, 0.04, 1.2, {1, 1}, {{0, 1}}};
  } else if (name == "college") {
    spec = {777, 17, 8, 1.2, 0.02, 1.5, {1, 2.5}, {{0, 1}}};
  } else if (name == "orange-juice") {
    spec = {1070, 11, 6, 1.7, 0.18, 0.8, {1.5, 1}, {{0, 1}}};
  } else if (name == "wine") {
    spec = {1599, 11, 7, 1.9, 0.25, 0.8, {0.05, 0.12, 0.42, 0.25, 0.12, 0.04},
            {{2, 3}, {1, 2}, {3, 4}}};
  } else {
    throw std::invalid_argument("unknown synthetic dataset: " + name);
  }
  return make_blob_dataset(spec, seed);
}

}  // namespace bblab
