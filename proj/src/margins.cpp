#include "bblab/margins.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

double std_dev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double silverman_bandwidth(std::vector<double> v) {
  const double sd = std_dev(v);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double q1 = v[(n - 1) / 4];
  const double q3 = v[(3 * (n - 1)) / 4];
  const double iqr = (q3 - q1) / 1.34;
  double scale = std::min(sd, iqr > 0 ? iqr : sd);
  if (scale <= 0) scale = sd;
  return 0.9 * scale * std::pow(static_cast<double>(n), -0.2);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

// KDE cumulative mass at x.
double kde_cdf(const std::vector<double>& v, double h, double x) {
  double s = 0.0;
  for (double c : v) s += normal_cdf((x - c) / h);
  return s / static_cast<double>(v.size());
}

}  // namespace

SecurityMargin build_margins(const DecisionTree& tree, const LabeledDataset& train,
                             double alarm_rate) {
  if (!(alarm_rate > 0.0 && alarm_rate < 0.5)) {
    throw std::invalid_argument("alarm_rate must be in (0, 0.5)");
  }
  SecurityMargin sm;
  sm.alarm_rate = alarm_rate;
  sm.boxes = leaf_boxes(tree);
  constexpr int kGrid = 512;
  constexpr double kFallbackFraction = 0.05;

  for (const auto& [leaf_id, box] : sm.boxes) {
    const TreeNode& leaf = tree.leaf(leaf_id);
    auto& stripes = sm.stripes[leaf_id];
    stripes.assign(box.size(), {});

    if (leaf.samples.empty()) {
      std::cerr << "warning: leaf " << leaf_id << " holds no training samples, "
                << "margins stay zero\n";
      continue;
    }

    // Effective box edges: unbounded sides fall back to the training range.
    std::vector<Interval> eff(box.size());
    int bounded_sides = 0;
    for (std::size_t f = 0; f < box.size(); ++f) {
      const bool lo_bounded = std::isfinite(box[f].lo);
      const bool hi_bounded = std::isfinite(box[f].hi);
      eff[f].lo = lo_bounded ? box[f].lo : train.feature_ranges[f].first;
      eff[f].hi = hi_bounded ? box[f].hi : train.feature_ranges[f].second;
      bounded_sides += (lo_bounded ? 1 : 0) + (hi_bounded ? 1 : 0);
    }
    if (bounded_sides == 0) continue;

    // Split the per-query alarm budget across the leaf's bounded sides. The
    // half factor compensates the KDE's smoothing bias on small leaves; the
    // per-side cap below enforces the rate against the actual samples.
    const double q_side = 0.5 * (1.0 - std::pow(1.0 - alarm_rate, 1.0 / bounded_sides));

    for (std::size_t f = 0; f < box.size(); ++f) {
      const double width = eff[f].hi - eff[f].lo;
      if (!(width > 0)) continue;
      std::vector<double> vals;
      vals.reserve(leaf.samples.size());
      for (int s : leaf.samples) vals.push_back(train.rows[s][f]);

      const bool lo_bounded = std::isfinite(box[f].lo);
      const bool hi_bounded = std::isfinite(box[f].hi);
      if (!lo_bounded && !hi_bounded) continue;

      double h = vals.size() >= 3 ? silverman_bandwidth(vals) : 0.0;
      if (h <= 0.0) {
        // Too little shape to estimate a density.
        if (lo_bounded) stripes[f].low = kFallbackFraction * width;
        if (hi_bounded) stripes[f].high = kFallbackFraction * width;
        continue;
      }

      const double total = kde_cdf(vals, h, eff[f].hi) - kde_cdf(vals, h, eff[f].lo);
      if (total <= 0.0) {
        if (lo_bounded) stripes[f].low = kFallbackFraction * width;
        if (hi_bounded) stripes[f].high = kFallbackFraction * width;
        continue;
      }
      const double step = width / kGrid;
      if (lo_bounded) {
        const double base = kde_cdf(vals, h, eff[f].lo);
        double stripe = width * 0.5;
        for (int g = 1; g <= kGrid; ++g) {
          const double x = eff[f].lo + g * step;
          if ((kde_cdf(vals, h, x) - base) / total >= q_side) {
            stripe = x - eff[f].lo;
            break;
          }
        }
        stripes[f].low = std::min(stripe, width * 0.5);
      }
      if (hi_bounded) {
        const double top = kde_cdf(vals, h, eff[f].hi);
        double stripe = width * 0.5;
        for (int g = 1; g <= kGrid; ++g) {
          const double x = eff[f].hi - g * step;
          if ((top - kde_cdf(vals, h, x)) / total >= q_side) {
            stripe = eff[f].hi - x;
            break;
          }
        }
        stripes[f].high = std::min(stripe, width * 0.5);
      }

      // Empirical false-alarm cap per side: the stripe may cover at most the
      // per-side alarm share of the leaf's own training values, so sides
      // whose data hugs the boundary get the narrow margins.
      const std::size_t allowed = static_cast<std::size_t>(
          alarm_rate * static_cast<double>(vals.size()) / bounded_sides);
      std::vector<double> dist;
      dist.reserve(vals.size());
      if (lo_bounded && stripes[f].low > 0) {
        dist.clear();
        for (double v : vals) dist.push_back(v - eff[f].lo);
        std::nth_element(dist.begin(), dist.begin() + allowed, dist.end());
        stripes[f].low =
            std::min(stripes[f].low, std::max(0.0, dist[allowed] * (1.0 - 1e-9)));
      }
      if (hi_bounded && stripes[f].high > 0) {
        dist.clear();
        for (double v : vals) dist.push_back(eff[f].hi - v);
        std::nth_element(dist.begin(), dist.begin() + allowed, dist.end());
        stripes[f].high =
            std::min(stripes[f].high, std::max(0.0, dist[allowed] * (1.0 - 1e-9)));
      }
    }
  }
  return sm;
}

bool in_margin(const SecurityMargin& margins, int leaf_id, const Signal& q) {
  const auto box_it = margins.boxes.find(leaf_id);
  const auto stripe_it = margins.stripes.find(leaf_id);
  if (box_it == margins.boxes.end() || stripe_it == margins.stripes.end()) return false;
  const auto& box = box_it->second;
  const auto& stripes = stripe_it->second;
  for (std::size_t f = 0; f < box.size(); ++f) {
    if (stripes[f].low > 0 && std::isfinite(box[f].lo) && q[f] - box[f].lo <= stripes[f].low) {
      return true;
    }
    if (stripes[f].high > 0 && std::isfinite(box[f].hi) &&
        box[f].hi - q[f] <= stripes[f].high) {
      return true;
    }
  }
  return false;
}

MarginState::MarginState(std::shared_ptr<const DecisionTree> tree,
                         std::shared_ptr<const SecurityMargin> margins,
                         const MarginConfig& cfg)
    : tree_(std::move(tree)), margins_(std::move(margins)), cfg_(cfg) {}

double MarginState::phi() const {
  double sum = 0.0;
  int visited = 0;
  for (const auto& [_, c] : counters_) {
    if (c.first == 0) continue;
    sum += static_cast<double>(c.second) / static_cast<double>(c.first);
    ++visited;
  }
  return visited == 0 ? 0.0 : sum / visited;
}

double MarginState::phi_supported() const {
  double sum = 0.0;
  int visited = 0;
  for (const auto& [_, c] : counters_) {
    if (c.first < static_cast<std::uint64_t>(cfg_.min_leaf_support)) continue;
    sum += static_cast<double>(c.second) / static_cast<double>(c.first);
    ++visited;
  }
  return visited == 0 ? 0.0 : sum / visited;
}

LeafResponse MarginState::stateful_predict(const Signal& q) {
  if (blocked_) throw BlockedError("margin defense: access blocked");

  const LeafResponse honest = tree_->predict(q);
  auto& c = counters_[honest.leaf_id];
  ++c.first;
  if (in_margin(*margins_, honest.leaf_id, q)) ++c.second;
  const std::uint64_t index = answered_++;

  if (!flagged_ && phi_supported() > cfg_.tau) {
    flagged_ = true;
    if (cfg_.reaction == MarginReaction::Block) {
      // This query still gets its honest answer; everything after is refused.
      blocked_ = true;
      return honest;
    }
  }
  if (flagged_ && cfg_.reaction == MarginReaction::RandomResponse) {
    const auto ids = tree_->leaf_ids();
    const std::uint64_t r = Rng::keyed_u64(cfg_.rng.seed, cfg_.rng.stream, index);
    const std::uint64_t r2 = Rng::keyed_u64(cfg_.rng.seed, cfg_.rng.stream + 1, index);
    LeafResponse fake;
    fake.label = static_cast<int>(r % tree_->class_names().size());
    const TreeNode& donor = tree_->leaf(ids[r2 % ids.size()]);
    fake.leaf_id = donor.leaf_id;
    fake.confidence = donor.confidence;
    return fake;
  }
  return honest;
}

std::string MarginState::snapshot() const {
  std::ostringstream out;
  out << "answered = " << answered_ << "\n";
  out << "phi = " << phi() << "\n";
  out << "phi_supported = " << phi_supported() << "\n";
  out << "flagged = " << (flagged_ ? 1 : 0) << "\n";
  out << "blocked = " << (blocked_ ? 1 : 0) << "\n";
  for (const auto& [leaf, c] : counters_) {
    out << "leaf " << leaf << " total " << c.first << " margin " << c.second << "\n";
  }
  return out.str();
}

LeafSession open_defended_tree_session(std::shared_ptr<MarginState> state, bool logging) {
  return LeafSession(
      [state = std::move(state)](const Signal& q) { return state->stateful_predict(q); },
      logging);
}

void write_margin_csv(const std::string& path, const SecurityMargin& margins) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write margin file: " + path);
  out << "leaf_id,feature,side,stripe_width\n";
  char buf[128];
  for (const auto& [leaf, stripes] : margins.stripes) {
    for (std::size_t f = 0; f < stripes.size(); ++f) {
      std::snprintf(buf, sizeof(buf), "%d,%zu,low,%.17g\n", leaf, f, stripes[f].low);
      out << buf;
      std::snprintf(buf, sizeof(buf), "%d,%zu,high,%.17g\n", leaf, f, stripes[f].high);
      out << buf;
    }
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bblab
