#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bblab/errors.hpp"
#include "bblab/oneclass.hpp"
#include "bblab/rng.hpp"
#include "bblab/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bblab;

namespace {

Signal flat_image(std::size_t n, double value) {
  return Signal(std::vector<double>(n, value));
}

// Reference oracle: full sort of all member distances, mean of the first k.
double brute_force_knn(const Signal& q, const OneClassModel& m) {
  std::vector<double> d;
  for (const auto& member : m.reference_points.members) {
    d.push_back(squared_distance(q, member));
  }
  std::sort(d.begin(), d.end());
  double sum = 0;
  for (int i = 0; i < m.k; ++i) sum += std::sqrt(d[i]);
  return sum / m.k;
}

OneClassModel tiny_model(std::vector<Signal> members, int k, double delta) {
  OneClassModel m;
  for (auto& s : members) {
    m.reference_points.members.push_back(std::move(s));
    m.reference_points.provenance.push_back({"noise", 0.0});
  }
  m.k = k;
  m.delta = delta;
  return m;
}

}  // namespace

TEST_CASE("identity transforms reproduce the marked image") {
  const Signal marked = flat_image(16, 100.0);
  Recipe r;
  r.noise_amplitudes = {};
  r.denoise_windows = {};
  r.jpeg_levels = {};
  r.contrast_scales = {1.0};
  r.brightness_offsets = {0.0};
  r.include_reference = false;
  Rng rng(1, streams::kVariations);
  const VariationSet vs = make_variations(marked, 4, 4, r, rng);
  REQUIRE(vs.size() == 2);
  CHECK(vs.members[0].values == marked.values);  // contrast 1.0
  CHECK(vs.members[1].values == marked.values);  // brightness 0
}

TEST_CASE("brightness offset moves by b*sqrt(N) before clipping") {
  const Signal marked = flat_image(64, 100.0);
  Recipe r;
  r.noise_amplitudes = {};
  r.denoise_windows = {};
  r.jpeg_levels = {};
  r.contrast_scales = {};
  r.brightness_offsets = {15.0};
  r.include_reference = false;
  Rng rng(2, streams::kVariations);
  const VariationSet vs = make_variations(marked, 8, 8, r, rng);
  REQUIRE(vs.size() == 1);
  CHECK(euclidean_distance(vs.members[0], marked) == doctest::Approx(15.0 * 8.0));
}

TEST_CASE("default recipe covers all five distortion kinds") {
  Rng img_rng(3, streams::kSynth);
  const Signal marked = synth_image(16, 16, ImageKind::TextureNoise, img_rng);
  Rng rng(3, streams::kVariations);
  const VariationSet vs = make_variations(marked, 16, 16, Recipe{}, rng);
  CHECK(vs.size() >= 20);
  std::set<std::string> kinds;
  for (const auto& p : vs.provenance) kinds.insert(p.kind);
  for (const char* kind : {"noise", "denoise", "jpeg", "contrast", "brightness"}) {
    CHECK(kinds.count(kind) == 1);
  }
  CHECK(kinds.count("identity") == 1);  // the reference itself is included
  for (const auto& m : vs.members) {
    CHECK(std::all_of(m.values.begin(), m.values.end(),
                      [](double v) { return v >= 0.0 && v <= 255.0; }));
  }
  Recipe empty;
  empty.noise_amplitudes = empty.denoise_windows = empty.jpeg_levels =
      empty.contrast_scales = empty.brightness_offsets = {};
  empty.include_reference = false;
  CHECK_THROWS_AS(make_variations(marked, 16, 16, empty, rng), Error);
}

TEST_CASE("recipe files round trip through the key-value format") {
  testutil::TempFile f(".cfg");
  f.write(
      "# variation recipe\n"
      "noise = 4, 8\n"
      "denoise = 3\n"
      "jpeg = 16, 32\n"
      "contrast = 0.9, 1.1\n"
      "brightness = -10, 10\n");
  const Recipe r = load_recipe(f.path());
  CHECK(r.noise_amplitudes == std::vector<double>{4, 8});
  CHECK(r.denoise_windows == std::vector<double>{3});
  CHECK(r.jpeg_levels == std::vector<double>{16, 32});
  CHECK(r.contrast_scales == std::vector<double>{0.9, 1.1});
  CHECK(r.brightness_offsets == std::vector<double>{-10, 10});
  CHECK(r.member_count() == 9 + 1);

  testutil::TempFile bad(".cfg");
  bad.write("noise - 1\n");
  CHECK_THROWS_AS(load_recipe(bad.path()), ParseError);
}

TEST_CASE("anomaly distance reference values") {
  const OneClassModel self = tiny_model({Signal({2, 2})}, 1, 1.0);
  CHECK(anomaly_distance(Signal({2, 2}), self) == 0.0);

  const OneClassModel m =
      tiny_model({Signal({0, 0}), Signal({3, 0}), Signal({10, 0})}, 2, 1.0);
  CHECK(anomaly_distance(Signal({1, 0}), m) == doctest::Approx(1.5));  // (1+2)/2

  const OneClassModel permuted =
      tiny_model({Signal({10, 0}), Signal({0, 0}), Signal({3, 0})}, 2, 1.0);
  CHECK(anomaly_distance(Signal({1, 0}), permuted) ==
        anomaly_distance(Signal({1, 0}), m));

  CHECK_THROWS_AS(anomaly_distance(Signal({1}), m), DimensionError);
  const OneClassModel too_small = tiny_model({Signal({0, 0})}, 2, 1.0);
  CHECK_THROWS_AS(anomaly_distance(Signal({1, 0}), too_small), Error);
}

TEST_CASE("anomaly distance equals the brute-force oracle") {
  Rng rng(17, 5);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t dim = 1 + rng.below(6);
    const std::size_t n_members = 1 + rng.below(12);
    std::vector<Signal> members;
    for (std::size_t i = 0; i < n_members; ++i) {
      Signal s = Signal::zeros(dim);
      for (auto& v : s.values) v = rng.uniform(-20, 20);
      members.push_back(std::move(s));
    }
    const int k = 1 + static_cast<int>(rng.below(n_members));
    const OneClassModel m = tiny_model(std::move(members), k, 1.0);
    Signal q = Signal::zeros(dim);
    for (auto& v : q.values) v = rng.uniform(-30, 30);
    CHECK(anomaly_distance(q, m) == brute_force_knn(q, m));
  }
}

TEST_CASE("a larger reference set never increases the distance") {
  Rng rng(19, 6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t dim = 2 + rng.below(4);
    std::vector<Signal> members;
    for (int i = 0; i < 6; ++i) {
      Signal s = Signal::zeros(dim);
      for (auto& v : s.values) v = rng.uniform(-10, 10);
      members.push_back(std::move(s));
    }
    OneClassModel small = tiny_model(members, 3, 1.0);
    Signal extra = Signal::zeros(dim);
    for (auto& v : extra.values) v = rng.uniform(-10, 10);
    OneClassModel big = small;
    big.reference_points.members.push_back(extra);
    big.reference_points.provenance.push_back({"noise", 0.0});

    Signal q = Signal::zeros(dim);
    for (auto& v : q.values) v = rng.uniform(-15, 15);
    CHECK(anomaly_distance(q, big) <= anomaly_distance(q, small) + 1e-12);
  }
}

TEST_CASE("guard is transparent for plausible queries") {
  Rng img_rng(4, streams::kSynth);
  const Signal x = synth_image(8, 8, ImageKind::TextureNoise, img_rng);
  Rng wm_rng(4, streams::kWatermark);
  const Watermark wm = generate_watermark(64, 8.0, wm_rng);
  const Signal marked = embed(x, wm);
  Rng var_rng(4, streams::kVariations);
  OneClassModel model;
  model.reference_points = make_variations(marked, 8, 8, Recipe{}, var_rng);
  model.k = 3;

  GuardPolicy policy{GuardReaction::RandomDecision, {4, streams::kGuardPolicy}};

  // members themselves are plausible at any reasonable threshold
  model.delta = 500.0;
  GuardState state;
  for (const auto& member : model.reference_points.members) {
    if (anomaly_distance(member, model) < model.delta) {
      CHECK(guarded_detect(member, wm, model, policy, state) == detect(member, wm));
    }
  }

  // delta -> infinity degenerates to the plain detector for any query
  model.delta = std::numeric_limits<double>::infinity();
  Rng q_rng(5, 7);
  for (int rep = 0; rep < 20; ++rep) {
    Signal q = Signal::zeros(64);
    for (auto& v : q.values) v = q_rng.uniform(-1000, 1000);
    CHECK(guarded_detect(q, wm, model, policy, state) == detect(q, wm));
  }
}

TEST_CASE("blocking policy refuses after one implausible query") {
  const Signal marked = flat_image(16, 128.0);
  OneClassModel model = tiny_model({marked}, 1, 10.0);
  const Watermark wm{flat_image(16, 1.0), 1.0, 1.0};
  GuardPolicy policy{GuardReaction::Block, {1, streams::kGuardPolicy}};
  GuardState state;

  CHECK(guarded_detect(marked, wm, model, policy, state) == detect(marked, wm));

  const Signal far = flat_image(16, 250.0);
  CHECK_THROWS_AS(guarded_detect(far, wm, model, policy, state), BlockedError);
  CHECK(state.blocked);
  // even a plausible query is refused once the session is blocked
  CHECK_THROWS_AS(guarded_detect(marked, wm, model, policy, state), BlockedError);
}

TEST_CASE("half-gray attack start is implausible") {
  Rng img_rng(6, streams::kSynth);
  const Signal x = synth_image(16, 16, ImageKind::TextureNoise, img_rng);
  Rng wm_rng(6, streams::kWatermark);
  const Watermark wm = generate_watermark(256, 8.0, wm_rng);
  const Signal marked = embed(x, wm);
  Rng var_rng(6, streams::kVariations);
  OneClassModel model;
  model.reference_points = make_variations(marked, 16, 16, Recipe{}, var_rng);
  model.k = 3;
  // a workable band: benign members stay inside, gross edits fall outside
  model.delta = 450.0;

  Signal half_gray = marked;
  for (std::size_t i = 0; i < half_gray.dim() / 2; ++i) half_gray.values[i] = 128.0;
  CHECK(anomaly_distance(half_gray, model) >= model.delta);

  GuardPolicy policy{GuardReaction::Block, {6, streams::kGuardPolicy}};
  GuardState state;
  CHECK_THROWS_AS(guarded_detect(half_gray, wm, model, policy, state), BlockedError);
}

TEST_CASE("random decisions are reproducible per query index") {
  const Signal member = flat_image(8, 0.0);
  OneClassModel model = tiny_model({member}, 1, 1.0);
  const Watermark wm{flat_image(8, 1.0), 100.0, 1.0};
  GuardPolicy policy{GuardReaction::RandomDecision, {99, streams::kGuardPolicy}};

  const Signal far = flat_image(8, 200.0);
  GuardState s1, s2;
  std::vector<bool> first, second;
  for (int i = 0; i < 32; ++i) first.push_back(guarded_detect(far, wm, model, policy, s1));
  for (int i = 0; i < 32; ++i) second.push_back(guarded_detect(far, wm, model, policy, s2));
  CHECK(first == second);
  // a fair coin, not a constant answer
  CHECK(std::count(first.begin(), first.end(), true) > 0);
  CHECK(std::count(first.begin(), first.end(), false) > 0);
  CHECK(s1.implausible_queries == 32);
}

TEST_CASE("evaluate_guard smoke and determinism") {
  std::vector<Signal> originals;
  for (int i = 0; i < 2; ++i) {
    Rng rng(42, streams::kSynth + i);
    originals.push_back(synth_image(8, 8, ImageKind::TextureNoise, rng));
  }
  Rng wm_rng(42, streams::kWatermark);
  const Watermark wm = generate_watermark(64, 10.0, wm_rng);

  GuardEvalConfig cfg;
  cfg.delta_grid = {200.0, 1e9};
  cfg.fp_splits = 4;
  cfg.seed = 42;
  cfg.attack.max_iterations = 1;

  const auto rows = evaluate_guard(originals, 8, 8, wm, Recipe{}, cfg);
  REQUIRE(rows.size() == 3);  // grid plus the undefended baseline
  CHECK(std::isinf(rows.back().delta));
  for (const auto& r : rows) {
    CHECK(r.removal_rate >= 0.0);
    CHECK(r.removal_rate <= 1.0);
    CHECK(r.benign_fp_rate >= 0.0);
    CHECK(r.benign_fp_rate <= 1.0);
    CHECK(r.mean_queries > 0.0);
  }
  const auto again = evaluate_guard(originals, 8, 8, wm, Recipe{}, cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].removal_rate == again[i].removal_rate);
    CHECK(rows[i].mean_psnr_db == again[i].mean_psnr_db);
    CHECK(rows[i].mean_queries == again[i].mean_queries);
  }

  testutil::TempFile f(".csv");
  write_guard_eval_csv(f.path(), rows, 64);
  std::ifstream in(f.path());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "delta,delta_per_pixel,removal_rate,mean_psnr_db,benign_fp_rate,mean_queries");
}
