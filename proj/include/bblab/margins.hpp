#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bblab/dataset.hpp"
#include "bblab/dtree.hpp"
#include "bblab/rng.hpp"

namespace bblab {

// Inward stripe widths at the low and high edge of a leaf box, one pair per
// feature. Unbounded box sides get zero width.
struct StripePair {
  double low = 0.0;
  double high = 0.0;
};

struct SecurityMargin {
  std::map<int, std::vector<Interval>> boxes;        // leaf boxes, cached
  std::map<int, std::vector<StripePair>> stripes;    // per leaf, per feature
  double alarm_rate = 0.05;
};

// Fits a Gaussian KDE (Silverman bandwidth) to each leaf's training values
// per dimension and places the stripe edge at the quantile of boundary-
// adjacent probability mass implied by alarm_rate, split across the leaf's
// bounded sides. Leaves with fewer than 3 samples in a dimension fall back
// to a fixed fraction of the box width; empty leaves get zero-width margins.
SecurityMargin build_margins(const DecisionTree& tree, const LabeledDataset& train,
                             double alarm_rate);

bool in_margin(const SecurityMargin& margins, int leaf_id, const Signal& q);

enum class MarginReaction { Block, RandomResponse };

struct MarginConfig {
  double tau = 0.3;
  MarginReaction reaction = MarginReaction::Block;
  RngConfig rng;             // stream for fabricated responses
  int min_leaf_support = 16;  // a leaf's ratio joins the alarm statistic only
                             // after this many queries
};

// Per-deployment query monitor. Routes queries through the tree, counts
// per-leaf totals and margin hits, and reacts once the margin-query ratio
// crosses tau: block refuses all later queries, random-response fabricates
// labels from this query onward. Single-writer; query order matters.
class MarginState {
 public:
  MarginState(std::shared_ptr<const DecisionTree> tree,
              std::shared_ptr<const SecurityMargin> margins, const MarginConfig& cfg);

  LeafResponse stateful_predict(const Signal& q);  // throws BlockedError when blocked

  // Mean over visited leaves of margin_queries / total_queries; 0 with no
  // queries seen.
  double phi() const;
  // Same mean restricted to leaves with at least min_leaf_support queries;
  // this is the statistic the alarm threshold is compared against, so a
  // single early query cannot spike the ratio to 1.
  double phi_supported() const;

  bool flagged() const { return flagged_; }
  bool blocked() const { return blocked_; }
  std::uint64_t answered() const { return answered_; }
  const std::map<int, std::pair<std::uint64_t, std::uint64_t>>& counters() const {
    return counters_;  // leaf -> (total, margin)
  }

  std::string snapshot() const;

 private:
  std::shared_ptr<const DecisionTree> tree_;
  std::shared_ptr<const SecurityMargin> margins_;
  MarginConfig cfg_;
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> counters_;
  std::uint64_t answered_ = 0;
  bool flagged_ = false;
  bool blocked_ = false;
};

LeafSession open_defended_tree_session(std::shared_ptr<MarginState> state,
                                       bool logging = false);

void write_margin_csv(const std::string& path, const SecurityMargin& margins);

}  // namespace bblab
