#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "bblab/dataset.hpp"
#include "bblab/oracle.hpp"
#include "bblab/signal.hpp"

namespace bblab {

struct TreeParams {
  int min_samples_leaf = 5;
  int max_depth = 0;  // 0 means unbounded
};

// What a prediction query reveals: not just the label but the identity of
// the leaf that produced it and its confidence. This is the information
// channel the extraction attack uses to tell leaves apart.
struct LeafResponse {
  int label = -1;
  int leaf_id = -1;
  double confidence = 0.0;

  bool operator==(const LeafResponse& o) const {
    return label == o.label && leaf_id == o.leaf_id && confidence == o.confidence;
  }
};

struct TreeNode {
  // split node
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // leaf node
  int leaf_id = -1;
  int label = -1;
  double confidence = 0.0;
  std::size_t sample_count = 0;
  std::vector<int> samples;  // training rows routed to this leaf

  bool is_leaf() const { return leaf_id >= 0; }
};

class DecisionTree {
 public:
  LeafResponse predict(const Signal& q) const;  // go left iff value <= threshold

  int n_features() const { return n_features_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_leaves() const { return static_cast<int>(leaf_index_.size()); }
  const TreeNode& node(int i) const { return nodes_[i]; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::vector<int> leaf_ids() const;
  const TreeNode& leaf(int leaf_id) const;

  // Re-derives per-leaf training sample indices by routing rows through the
  // tree (used after deserialization, where indices are not stored).
  void assign_samples(const LabeledDataset& ds);

 private:
  std::vector<TreeNode> nodes_;
  std::map<int, int> leaf_index_;  // leaf_id -> node index
  std::vector<std::string> class_names_;
  int n_features_ = 0;

  void rebuild_leaf_index();

  friend DecisionTree train_tree(const LabeledDataset&, const TreeParams&);
  friend std::string tree_to_text(const DecisionTree&);
  friend DecisionTree tree_from_text(const std::string&);
};

// CART: binary axis-aligned splits chosen by Gini impurity, midpoint
// thresholds, ties broken by lowest feature index then lowest threshold.
// Deterministic given (data, params).
DecisionTree train_tree(const LabeledDataset& train, const TreeParams& params);

// Half-open feature boxes (lo, hi] per leaf; they partition the whole
// feature space, with +/-infinity on unbounded sides.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};
std::map<int, std::vector<Interval>> leaf_boxes(const DecisionTree& tree);

std::string tree_to_text(const DecisionTree& tree);
DecisionTree tree_from_text(const std::string& text);
void save_tree(const DecisionTree& tree, const std::string& path);
DecisionTree load_tree(const std::string& path);

using LeafSession = Session<LeafResponse>;
LeafSession open_tree_session(const DecisionTree& tree, bool logging = false);

}  // namespace bblab
