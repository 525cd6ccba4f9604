#pragma once

#include <string>
#include <vector>

#include "bblab/dataset.hpp"
#include "bblab/rng.hpp"
#include "bblab/signal.hpp"

namespace bblab {

enum class ImageKind { Gradient, TextureNoise, Blobs };

ImageKind image_kind_from_string(const std::string& name);

// Grayscale stand-in images in [0, 255], row-major.
Signal synth_image(int width, int height, ImageKind kind, Rng& rng);

// Synthetic stand-ins for the benchmark datasets, shaped like the public
// originals (sample count, feature count, class structure) so experiments
// need no downloads. Names: iris, carseats, college, orange-juice, wine.
LabeledDataset synth_dataset(const std::string& name, std::uint64_t seed);

const std::vector<std::string>& synth_dataset_names();

}  // namespace bblab
