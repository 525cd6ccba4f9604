#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bblab/rng.hpp"
#include "bblab/signal.hpp"

namespace bblab {

struct LabeledDataset {
  std::vector<Signal> rows;
  std::vector<int> labels;  // index into class_names
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::string label_name = "label";
  std::vector<std::pair<double, double>> feature_ranges;  // per-dimension (min, max)

  std::size_t size() const { return rows.size(); }
  std::size_t dim() const { return rows.empty() ? feature_names.size() : rows[0].dim(); }
  void recompute_ranges();
};

// CSV with a header row; the label column is selected by name. Columns whose
// first data cell does not parse as a number are treated as categorical and
// one-hot encoded; a non-numeric cell inside a numeric column is a parse
// error with its row/column position.
LabeledDataset load_csv_dataset(const std::string& path, const std::string& label_column);

void save_csv_dataset(const LabeledDataset& ds, const std::string& path);

// Disjoint partition; train gets round(fraction * n) rows, shuffled
// reproducibly by the generator.
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double fraction, Rng& rng);

}  // namespace bblab
