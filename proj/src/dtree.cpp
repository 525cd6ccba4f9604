#include "bblab/dtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

struct SplitChoice {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Builder {
  const LabeledDataset& ds;
  const TreeParams& params;
  std::vector<TreeNode> nodes;
  int next_leaf_id = 0;

  int make_leaf(const std::vector<int>& idx, const std::vector<int>& counts) {
    TreeNode n;
    n.leaf_id = next_leaf_id++;
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
      if (counts[c] > counts[best]) best = static_cast<int>(c);
    }
    n.label = best;
    n.confidence = static_cast<double>(counts[best]) / static_cast<double>(idx.size());
    n.sample_count = idx.size();
    n.samples = idx;
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size()) - 1;
  }

  SplitChoice best_split(const std::vector<int>& idx, const std::vector<int>& counts) {
    SplitChoice best;
    const int n = static_cast<int>(idx.size());
    const int n_classes = static_cast<int>(counts.size());
    const double parent = gini(counts, n);

    std::vector<std::pair<double, int>> col(n);  // (value, label)
    std::vector<int> left_counts(n_classes);
    for (int f = 0; f < static_cast<int>(ds.dim()); ++f) {
      for (int i = 0; i < n; ++i) {
        col[i] = {ds.rows[idx[i]][f], ds.labels[idx[i]]};
      }
      std::sort(col.begin(), col.end());
      std::fill(left_counts.begin(), left_counts.end(), 0);
      int n_left = 0;
      for (int i = 0; i + 1 < n; ++i) {
        ++left_counts[col[i].second];
        ++n_left;
        if (col[i].first == col[i + 1].first) continue;  // not a boundary
        if (n_left < params.min_samples_leaf || n - n_left < params.min_samples_leaf) continue;
        double gl = 1.0, gr = 1.0;
        for (int c = 0; c < n_classes; ++c) {
          const double pl = static_cast<double>(left_counts[c]) / n_left;
          const double pr = static_cast<double>(counts[c] - left_counts[c]) / (n - n_left);
          gl -= pl * pl;
          gr -= pr * pr;
        }
        const double weighted = (n_left * gl + (n - n_left) * gr) / n;
        const double gain = parent - weighted;
        const double thr = 0.5 * (col[i].first + col[i + 1].first);
        if (!best.found || gain > best.gain ||
            (gain == best.gain &&
             (f < best.feature || (f == best.feature && thr < best.threshold)))) {
          best.found = true;
          best.gain = gain;
          best.feature = f;
          best.threshold = thr;
        }
      }
    }
    if (best.found && best.gain <= 1e-12) best.found = false;
    return best;
  }

  int build(const std::vector<int>& idx, int depth) {
    std::vector<int> counts(ds.class_names.size(), 0);
    for (int i : idx) ++counts[ds.labels[i]];
    const int present = static_cast<int>(std::count_if(
        counts.begin(), counts.end(), [](int c) { return c > 0; }));

    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if (present <= 1 || depth_capped ||
        static_cast<int>(idx.size()) < 2 * params.min_samples_leaf) {
      return make_leaf(idx, counts);
    }
    const SplitChoice split = best_split(idx, counts);
    if (!split.found) return make_leaf(idx, counts);

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      (ds.rows[i][split.feature] <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    const int me = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[me].feature = split.feature;
    nodes[me].threshold = split.threshold;
    const int l = build(left_idx, depth + 1);
    const int r = build(right_idx, depth + 1);
    nodes[me].left = l;
    nodes[me].right = r;
    return me;
  }
};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void DecisionTree::rebuild_leaf_index() {
  leaf_index_.clear();
  for (int i = 0; i < n_nodes(); ++i) {
    if (nodes_[i].is_leaf()) {
      if (leaf_index_.count(nodes_[i].leaf_id)) throw Error("duplicate leaf id in tree");
      leaf_index_[nodes_[i].leaf_id] = i;
    }
  }
}

LeafResponse DecisionTree::predict(const Signal& q) const {
  if (static_cast<int>(q.dim()) != n_features_) {
    throw DimensionError("predict: query has " + std::to_string(q.dim()) +
                         " features, tree expects " + std::to_string(n_features_));
  }
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    i = (q[nodes_[i].feature] <= nodes_[i].threshold) ? nodes_[i].left : nodes_[i].right;
  }
  return {nodes_[i].label, nodes_[i].leaf_id, nodes_[i].confidence};
}

std::vector<int> DecisionTree::leaf_ids() const {
  std::vector<int> ids;
  ids.reserve(leaf_index_.size());
  for (const auto& [id, _] : leaf_index_) ids.push_back(id);
  return ids;
}

const TreeNode& DecisionTree::leaf(int leaf_id) const {
  auto it = leaf_index_.find(leaf_id);
  if (it == leaf_index_.end()) throw Error("no leaf with id " + std::to_string(leaf_id));
  return nodes_[it->second];
}

void DecisionTree::assign_samples(const LabeledDataset& ds) {
  if (static_cast<int>(ds.dim()) != n_features_) {
    throw DimensionError("assign_samples: dataset has " + std::to_string(ds.dim()) +
                         " features, tree expects " + std::to_string(n_features_));
  }
  for (auto& n : nodes_) n.samples.clear();

  for (std::size_t r = 0; r < ds.size(); ++r) {
    int i = 0;
    while (!nodes_[i].is_leaf()) {
      i = (ds.rows[r][nodes_[i].feature] <= nodes_[i].threshold) ? nodes_[i].left
                                                                 : nodes_[i].right;
    }
    nodes_[i].samples.push_back(static_cast<int>(r));
  }
  for (auto& n : nodes_) {
    if (n.is_leaf()) n.sample_count = n.samples.size();
  }
}

DecisionTree train_tree(const LabeledDataset& train, const TreeParams& params) {
  if (train.size() == 0) throw Error("cannot train on an empty dataset");
  if (params.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");

  Builder b{train, params, {}, 0};
  std::vector<int> all(train.size());
  std::iota(all.begin(), all.end(), 0);
  b.build(all, 0);

  DecisionTree tree;
  tree.nodes_ = std::move(b.nodes);
  tree.class_names_ = train.class_names;
  tree.n_features_ = static_cast<int>(train.dim());
  tree.rebuild_leaf_index();
  return tree;
}

std::map<int, std::vector<Interval>> leaf_boxes(const DecisionTree& tree) {
  std::map<int, std::vector<Interval>> boxes;
  std::vector<Interval> box(tree.n_features());
  // DFS carrying the running box; left child tightens hi, right tightens lo.
  struct Frame {
    int node;
    std::vector<Interval> box;
  };
  std::vector<Frame> stack{{0, box}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const TreeNode& n = tree.node(f.node);
    if (n.is_leaf()) {
      boxes[n.leaf_id] = std::move(f.box);
      continue;
    }
    Frame left{n.left, f.box};
    left.box[n.feature].hi = std::min(left.box[n.feature].hi, n.threshold);
    Frame right{n.right, std::move(f.box)};
    right.box[n.feature].lo = std::max(right.box[n.feature].lo, n.threshold);
    stack.push_back(std::move(left));
    stack.push_back(std::move(right));
  }
  return boxes;
}

std::string tree_to_text(const DecisionTree& tree) {
  std::ostringstream out;
  out << "bblab-tree 1\n";
  out << "features " << tree.n_features_ << "\n";
  out << "classes " << tree.class_names_.size();
  for (const auto& c : tree.class_names_) out << " " << c;
  out << "\n";
  out << "nodes " << tree.n_nodes() << "\n";
  for (int i = 0; i < tree.n_nodes(); ++i) {
    const TreeNode& n = tree.nodes_[i];
    if (n.is_leaf()) {
      out << "node " << i << " leaf " << n.leaf_id << " " << n.label << " "
          << fmt17(n.confidence) << " " << n.sample_count << "\n";
    } else {
      out << "node " << i << " split " << n.feature << " " << fmt17(n.threshold) << " "
          << n.left << " " << n.right << "\n";
    }
  }
  return out.str();
}

DecisionTree tree_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "bblab-tree" || version != 1) {
    throw ParseError("not a bblab tree file");
  }
  DecisionTree tree;
  std::size_t n_classes = 0, n_nodes = 0;
  if (!(in >> word >> tree.n_features_) || word != "features") {
    throw ParseError("tree file: expected features line");
  }
  if (!(in >> word >> n_classes) || word != "classes") {
    throw ParseError("tree file: expected classes line");
  }
  tree.class_names_.resize(n_classes);
  for (auto& c : tree.class_names_) in >> c;
  if (!(in >> word >> n_nodes) || word != "nodes") {
    throw ParseError("tree file: expected nodes line");
  }
  tree.nodes_.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    int idx = -1;
    std::string kind;
    if (!(in >> word >> idx >> kind) || word != "node" || idx < 0 ||
        idx >= static_cast<int>(n_nodes)) {
      throw ParseError("tree file: malformed node line");
    }
    TreeNode& n = tree.nodes_[idx];
    if (kind == "split") {
      if (!(in >> n.feature >> n.threshold >> n.left >> n.right)) {
        throw ParseError("tree file: malformed split node");
      }
    } else if (kind == "leaf") {
      if (!(in >> n.leaf_id >> n.label >> n.confidence >> n.sample_count)) {
        throw ParseError("tree file: malformed leaf node");
      }
    } else {
      throw ParseError("tree file: unknown node kind '" + kind + "'");
    }
  }
  tree.rebuild_leaf_index();
  return tree;
}

void save_tree(const DecisionTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write tree file: " + path);
  out << tree_to_text(tree);
  if (!out) throw Error("write failed: " + path);
}

DecisionTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open tree file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return tree_from_text(buf.str());
}

LeafSession open_tree_session(const DecisionTree& tree, bool logging) {
  return LeafSession([&tree](const Signal& q) { return tree.predict(q); }, logging);
}

}  // namespace bblab
