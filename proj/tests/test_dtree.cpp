#include <cmath>
#include <map>

#include "bblab/dtree.hpp"
#include "bblab/errors.hpp"
#include "bblab/rng.hpp"
#include "bblab/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bblab;

namespace {

LabeledDataset one_dim_two_class() {
  LabeledDataset ds;
  ds.class_names = {"lo", "hi"};
  ds.feature_names = {"x"};
  for (int i = 0; i < 10; ++i) {
    ds.rows.push_back(Signal({static_cast<double>(i)}));
    ds.labels.push_back(i < 5 ? 0 : 1);
  }
  ds.recompute_ranges();
  return ds;
}

bool box_contains(const std::vector<Interval>& box, const Signal& q) {
  for (std::size_t f = 0; f < box.size(); ++f) {
    if (!(q[f] > box[f].lo && q[f] <= box[f].hi)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("linearly separable data needs one split") {
  const LabeledDataset ds = one_dim_two_class();
  const DecisionTree tree = train_tree(ds, {5, 0});
  CHECK(tree.n_leaves() == 2);
  CHECK(tree.n_nodes() == 3);
  CHECK(tree.node(0).threshold == doctest::Approx(4.5));  // midpoint of 4 and 5
  CHECK(tree.predict(Signal({0.0})).label == 0);
  CHECK(tree.predict(Signal({9.0})).label == 1);
  CHECK(tree.predict(Signal({4.5})).label == 0);  // <= goes left
}

TEST_CASE("single-class data yields a single leaf") {
  LabeledDataset ds;
  ds.class_names = {"only"};
  ds.feature_names = {"x"};
  for (int i = 0; i < 12; ++i) {
    ds.rows.push_back(Signal({static_cast<double>(i % 3)}));
    ds.labels.push_back(0);
  }
  ds.recompute_ranges();
  const DecisionTree tree = train_tree(ds, {5, 0});
  CHECK(tree.n_leaves() == 1);
  const LeafResponse r = tree.predict(Signal({1.0}));
  CHECK(r.confidence == 1.0);
  CHECK(tree.predict(Signal({-100.0})).leaf_id == r.leaf_id);
  CHECK(tree.predict(Signal({100.0})).leaf_id == r.leaf_id);
}

TEST_CASE("predictions stay consistent with training rows") {
  const LabeledDataset ds = synth_dataset("iris", 31);
  const DecisionTree tree = train_tree(ds, {5, 0});
  const auto boxes = leaf_boxes(tree);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const LeafResponse r = tree.predict(ds.rows[i]);
    CHECK(r.confidence > 0.0);
    CHECK(r.confidence <= 1.0);
    CHECK(box_contains(boxes.at(r.leaf_id), ds.rows[i]));
  }
  CHECK_THROWS_AS(tree.predict(Signal({1.0})), DimensionError);
}

TEST_CASE("leaf boxes of a depth-1 tree") {
  const LabeledDataset ds = one_dim_two_class();
  const DecisionTree tree = train_tree(ds, {5, 0});
  const auto boxes = leaf_boxes(tree);
  REQUIRE(boxes.size() == 2);
  const int left = tree.predict(Signal({0.0})).leaf_id;
  const int right = tree.predict(Signal({9.0})).leaf_id;
  CHECK(std::isinf(boxes.at(left).at(0).lo));
  CHECK(boxes.at(left).at(0).hi == doctest::Approx(4.5));
  CHECK(boxes.at(right).at(0).lo == doctest::Approx(4.5));
  CHECK(std::isinf(boxes.at(right).at(0).hi));
  // clamped to the observed range [0, 9] this is [0, 4.5] and (4.5, 9]
}

TEST_CASE("leaf boxes partition feature space") {
  const LabeledDataset ds = synth_dataset("carseats", 13);
  const DecisionTree tree = train_tree(ds, {5, 0});
  const auto boxes = leaf_boxes(tree);
  Rng rng(99, 7);
  for (int rep = 0; rep < 100000 / 100; ++rep) {
    // batch of 100 random points per rep keeps this readable
    for (int j = 0; j < 100; ++j) {
      Signal q = Signal::zeros(ds.dim());
      for (auto& v : q.values) v = rng.uniform(-12, 12);
      int containing = 0;
      int leaf_from_box = -1;
      for (const auto& [id, box] : boxes) {
        if (box_contains(box, q)) {
          ++containing;
          leaf_from_box = id;
        }
      }
      CHECK(containing == 1);
      CHECK(leaf_from_box == tree.predict(q).leaf_id);
    }
  }
}

TEST_CASE("training is deterministic") {
  const LabeledDataset ds = synth_dataset("iris", 77);
  const DecisionTree a = train_tree(ds, {5, 0});
  const DecisionTree b = train_tree(ds, {5, 0});
  CHECK(tree_to_text(a) == tree_to_text(b));
}

TEST_CASE("confidence equals the majority fraction") {
  const LabeledDataset ds = synth_dataset("orange-juice", 3);
  const DecisionTree tree = train_tree(ds, {5, 0});
  tree.leaf_ids();
  for (int id : tree.leaf_ids()) {
    const TreeNode& leaf = tree.leaf(id);
    std::map<int, int> counts;
    for (int s : leaf.samples) ++counts[ds.labels[s]];
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    CHECK(leaf.confidence ==
          doctest::Approx(static_cast<double>(best) / leaf.samples.size()));
    CHECK(counts[leaf.label] == best);
  }
}

TEST_CASE("serialization round trip") {
  const LabeledDataset ds = synth_dataset("iris", 8);
  const DecisionTree tree = train_tree(ds, {5, 0});
  const std::string text = tree_to_text(tree);
  const DecisionTree back = tree_from_text(text);
  CHECK(tree_to_text(back) == text);
  CHECK(back.predict(ds.rows[0]) == tree.predict(ds.rows[0]));

  testutil::TempFile f(".tree");
  save_tree(tree, f.path());
  CHECK(tree_to_text(load_tree(f.path())) == text);
  CHECK_THROWS_AS(tree_from_text("garbage"), ParseError);
}

TEST_CASE("assign_samples recovers training routing") {
  const LabeledDataset ds = synth_dataset("iris", 21);
  const DecisionTree tree = train_tree(ds, {5, 0});
  DecisionTree copy = tree_from_text(tree_to_text(tree));
  copy.assign_samples(ds);
  for (int id : tree.leaf_ids()) {
    CHECK(copy.leaf(id).samples == tree.leaf(id).samples);
  }
}

TEST_CASE("iris stand-in matches the reported leaf count") {
  // Published average is 4.6 leaves; the stand-in must land within 30%.
  double total = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const LabeledDataset ds = synth_dataset("iris", 100 + rep);
    Rng rng(100 + rep, streams::kSplit);
    auto [train, test] = split_dataset(ds, 0.5, rng);
    total += train_tree(train, {5, 0}).n_leaves();
  }
  const double avg = total / 5.0;
  CHECK(avg >= 4.6 * 0.7);
  CHECK(avg <= 4.6 * 1.3);
}

TEST_CASE("wine stand-in matches the reported leaf count") {
  // Published average is 89.4 leaves.
  double total = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const LabeledDataset ds = synth_dataset("wine", 100 + rep);
    Rng rng(100 + rep, streams::kSplit);
    auto [train, test] = split_dataset(ds, 0.5, rng);
    total += train_tree(train, {5, 0}).n_leaves();
  }
  const double avg = total / 5.0;
  CHECK(avg >= 89.4 * 0.7);
  CHECK(avg <= 89.4 * 1.3);
}

TEST_CASE("tree sessions count queries") {
  const LabeledDataset ds = one_dim_two_class();
  const DecisionTree tree = train_tree(ds, {5, 0});
  LeafSession s = open_tree_session(tree);
  s.query(Signal({1.0}));
  s.query(Signal({8.0}));
  CHECK(s.count() == 2);
}
