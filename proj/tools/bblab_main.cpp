// Command-line harness: watermark pipeline, sensitivity attack, guard sweep,
// tree training, extraction attacks and the stateful margin defense, plus a
// report aggregator. Every run writes a manifest next to its results so the
// outputs can be regenerated from the manifest alone.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bblab/bnsa.hpp"
#include "bblab/dataset.hpp"
#include "bblab/dtree.hpp"
#include "bblab/errors.hpp"
#include "bblab/experiments.hpp"
#include "bblab/extract.hpp"
#include "bblab/margins.hpp"
#include "bblab/oneclass.hpp"
#include "bblab/pgm.hpp"
#include "bblab/synth.hpp"
#include "bblab/watermark.hpp"

namespace fs = std::filesystem;
using namespace bblab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value) {
    entries.emplace_back(key, value);
  }
  void add(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries.emplace_back(key, buf);
  }
  void add(const std::string& key, std::uint64_t value) {
    entries.emplace_back(key, std::to_string(value));
  }
  void add(const std::string& key, int value) { entries.emplace_back(key, std::to_string(value)); }

  void write(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.txt");
    out << "command = " << command << "\n";
    out << "version = " << kVersion << "\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  }
};

fs::path prepare_outdir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) values.push_back(std::stod(tok));
  }
  return values;
}

std::string fmt_double(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

Signal load_or_synth_image(const std::string& image, const std::string& synth_kind, int width,
                           int height, std::uint64_t seed, int* out_w, int* out_h) {
  if (!image.empty()) {
    const Image img = read_pgm(image);
    *out_w = img.width;
    *out_h = img.height;
    return img.pixels;
  }
  Rng rng(seed, streams::kSynth);
  *out_w = width;
  *out_h = height;
  return synth_image(width, height, image_kind_from_string(synth_kind), rng);
}

LabeledDataset load_or_synth_dataset(const std::string& data, const std::string& label_col,
                                     const std::string& synth, std::uint64_t seed,
                                     std::string* name) {
  if (!data.empty()) {
    *name = fs::path(data).stem().string();
    return load_csv_dataset(data, label_col);
  }
  if (synth.empty()) throw Error("either --data or --synth is required");
  *name = synth;
  return synth_dataset(synth, seed);
}

// ---------------------------------------------------------------- wm-embed
int cmd_wm_embed(const std::string& image, const std::string& synth_kind, int width,
                 int height, double strength, const std::string& wm_in,
                 const std::string& out, std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  int w = 0, h = 0;
  const Signal x = load_or_synth_image(image, synth_kind, width, height, seed, &w, &h);

  Watermark wm;
  if (!wm_in.empty()) {
    wm = load_watermark(wm_in);
  } else {
    Rng rng(seed, streams::kWatermark);
    wm = generate_watermark(x.dim(), strength, rng);
    save_watermark(wm, (dir / "watermark.wm").string());
  }
  const Signal marked = embed(x, wm);
  write_pgm((dir / "marked.pgm").string(), marked, w, h);
  write_pgm((dir / "original.pgm").string(), x, w, h);

  Manifest m;
  m.command = "wm-embed";
  m.add("seed", seed);
  m.add("image", image.empty() ? "synth:" + synth_kind : image);
  m.add("width", w);
  m.add("height", h);
  m.add("strength", wm.strength);
  m.add("wm_in", wm_in.empty() ? "-" : wm_in);
  m.write(dir);

  std::cout << "embedded watermark (strength " << wm.strength << ", dim " << wm.dim()
            << "), psnr " << fmt_double(psnr(x, marked, 255.0), 2) << " dB\n"
            << "marked image: " << (dir / "marked.pgm").string() << "\n";
  return 0;
}

// --------------------------------------------------------------- wm-detect
int cmd_wm_detect(const std::string& image, const std::string& wm_path, bool numeric,
                  const std::string& out) {
  const Image img = read_pgm(image);
  const Watermark wm = load_watermark(wm_path);
  const bool present = detect(img.pixels, wm);

  std::ostringstream result;
  result << "decision = " << (present ? "present" : "absent") << "\n";
  if (numeric) {
    NumericSession session = open_numeric_session(wm);
    result << "score = " << session.query(img.pixels) << "\n";
    result << "threshold = " << wm.threshold << "\n";
  }
  std::cout << result.str();
  if (!out.empty()) {
    const fs::path dir = prepare_outdir(out);
    std::ofstream(dir / "detect.txt") << result.str();
    Manifest m;
    m.command = "wm-detect";
    m.add("image", image);
    m.add("wm", wm_path);
    m.add("numeric", numeric ? 1 : 0);
    m.write(dir);
  }
  return 0;
}

// --------------------------------------------------------------- wm-attack
int cmd_wm_attack(const std::string& image, const std::string& wm_path, double delta,
                  const std::string& reaction, const std::string& recipe_path,
                  const std::string& start, const AttackConfig& acfg, const std::string& out,
                  std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  const Image img = read_pgm(image);
  const Watermark wm = load_watermark(wm_path);
  const Recipe recipe = recipe_path.empty() ? Recipe{} : load_recipe(recipe_path);

  std::shared_ptr<GuardState> guard_state;
  BinarySession session = [&] {
    if (delta <= 0) return open_binary_session(wm);
    auto model = std::make_shared<OneClassModel>();
    Rng var_rng(seed, streams::kVariations);
    model->reference_points =
        make_variations(img.pixels, img.width, img.height, recipe, var_rng);
    model->k = 3;
    model->delta = delta;
    GuardPolicy policy{reaction == "block" ? GuardReaction::Block
                                           : GuardReaction::RandomDecision,
                       {seed, streams::kGuardPolicy}};
    guard_state = std::make_shared<GuardState>();
    return open_guarded_session(wm, model, policy, guard_state);
  }();

  Signal target = img.pixels;
  if (start == "gray") {
    try {
      target = gray_start(session, img.pixels);
    } catch (const Error& e) {
      std::cout << "gray start unavailable (" << e.what() << "), using the image itself\n";
    }
  }

  Rng attack_rng(seed, streams::kAttack);
  const AttackResult res = bnsa(session, target, acfg, attack_rng);

  write_pgm((dir / "final.pgm").string(), res.final_signal, img.width, img.height);
  write_attack_trace_csv((dir / "trace.csv").string(), res);

  std::ostringstream summary;
  summary << "queries = " << res.queries_used << "\n"
          << "removed = " << (res.removed ? 1 : 0) << "\n"
          << "true_removed = " << (detect(res.final_signal, wm) ? 0 : 1) << "\n"
          << "distortion = " << res.distortion << "\n"
          << "psnr_to_marked_db = " << fmt_double(res.psnr_to_original, 2) << "\n"
          << "outer_iterations = " << res.outer_iterations << "\n";
  std::ofstream(dir / "attack.txt") << summary.str();
  std::cout << summary.str();

  Manifest m;
  m.command = "wm-attack";
  m.add("seed", seed);
  m.add("image", image);
  m.add("wm", wm_path);
  m.add("delta", delta);
  m.add("reaction", reaction);
  m.add("recipe", recipe_path.empty() ? "-" : recipe_path);
  m.add("start", start);
  m.add("bisection_tolerance", acfg.bisection_tolerance);
  m.add("probe_step", acfg.probe_step);
  m.add("max_iterations", acfg.max_iterations);
  m.write(dir);
  return 0;
}

// ----------------------------------------------------------- wm-guard-eval
int cmd_wm_guard_eval(int count, int width, int height, const std::string& kind,
                      double strength, const std::string& delta_grid,
                      const std::string& reaction, int fp_splits,
                      const std::string& recipe_path, const AttackConfig& acfg,
                      const std::string& out, std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  const Recipe recipe = recipe_path.empty() ? Recipe{} : load_recipe(recipe_path);

  std::vector<Signal> originals;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, streams::kSynth + i);
    originals.push_back(synth_image(width, height, image_kind_from_string(kind), rng));
  }
  Rng wm_rng(seed, streams::kWatermark);
  const Watermark wm =
      generate_watermark(static_cast<std::size_t>(width) * height, strength, wm_rng);

  GuardEvalConfig cfg;
  cfg.delta_grid = parse_grid(delta_grid);
  cfg.reaction = reaction == "block" ? GuardReaction::Block : GuardReaction::RandomDecision;
  cfg.attack = acfg;
  cfg.fp_splits = fp_splits;
  cfg.seed = seed;

  const auto rows = evaluate_guard(originals, width, height, wm, recipe, cfg);
  write_guard_eval_csv((dir / "guard_eval.csv").string(), rows, wm.dim());

  Manifest m;
  m.command = "wm-guard-eval";
  m.add("seed", seed);
  m.add("count", count);
  m.add("width", width);
  m.add("height", height);
  m.add("kind", kind);
  m.add("strength", strength);
  m.add("delta_grid", delta_grid);
  m.add("reaction", reaction);
  m.add("fp_splits", fp_splits);
  m.add("recipe", recipe_path.empty() ? "-" : recipe_path);
  m.add("max_iterations", acfg.max_iterations);
  m.write(dir);

  std::cout << "delta        removal  psnr_db  benign_fp\n";
  for (const auto& r : rows) {
    std::printf("%-12.6g %-8.2f %-8.2f %-8.3f\n", r.delta, r.removal_rate, r.mean_psnr_db,
                r.benign_fp_rate);
  }
  std::cout << "wrote " << (dir / "guard_eval.csv").string() << "\n";
  return 0;
}

// --------------------------------------------------------------- tree-train
int cmd_tree_train(const std::string& data, const std::string& label_col,
                   const std::string& synth, double split_fraction, int min_leaf,
                   int max_depth, const std::string& out, std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  std::string name;
  const LabeledDataset ds = load_or_synth_dataset(data, label_col, synth, seed, &name);
  if (data.empty()) save_csv_dataset(ds, (dir / "dataset.csv").string());

  Rng split_rng(seed, streams::kSplit);
  auto [train, test] = split_dataset(ds, split_fraction, split_rng);
  const DecisionTree tree = train_tree(train, {min_leaf, max_depth});

  save_tree(tree, (dir / "tree.txt").string());
  save_csv_dataset(train, (dir / "train.csv").string());
  save_csv_dataset(test, (dir / "test.csv").string());

  Manifest m;
  m.command = "tree-train";
  m.add("seed", seed);
  m.add("dataset", name);
  m.add("data", data.empty() ? "synth:" + synth : data);
  m.add("label_column", label_col);
  m.add("split_fraction", split_fraction);
  m.add("min_leaf", min_leaf);
  m.add("max_depth", max_depth);
  m.write(dir);

  std::cout << "trained tree on " << train.size() << " rows (" << name << "): "
            << tree.n_leaves() << " leaves, " << tree.n_nodes() << " nodes\n"
            << "tree file: " << (dir / "tree.txt").string() << "\n";
  return 0;
}

// ------------------------------------------------------------- tree-extract
int cmd_tree_extract(const std::string& tree_path, const std::string& train_csv,
                     const std::string& label_col, const std::string& defense,
                     double alarm_rate, double tau, int min_support, int cover_ratio,
                     const std::string& cover_source, double leak_fraction, double epsilon,
                     std::uint64_t budget, const std::string& out, std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  auto tree = std::make_shared<DecisionTree>(load_tree(tree_path));
  LabeledDataset train = load_csv_dataset(train_csv, label_col);
  tree->assign_samples(train);

  ExtractionConfig ec;
  ec.search_epsilon = epsilon;
  ec.query_budget = budget;
  ec.cover_ratio = cover_ratio;
  ec.cover_source =
      cover_source == "leaked" ? CoverSource::LeakedTraining : CoverSource::RandomUniform;
  ec.leak_fraction = leak_fraction;
  for (const auto& [lo, hi] : train.feature_ranges) ec.feature_ranges.push_back({lo, hi});

  std::shared_ptr<MarginState> state;
  LeafSession session = [&] {
    if (defense == "none") return open_tree_session(*tree);
    auto margins = std::make_shared<SecurityMargin>(build_margins(*tree, train, alarm_rate));
    write_margin_csv((dir / "margins.csv").string(), *margins);
    MarginConfig mc;
    mc.tau = tau;
    mc.reaction = defense == "random" ? MarginReaction::RandomResponse : MarginReaction::Block;
    mc.min_leaf_support = min_support;
    mc.rng = {seed, streams::kDefense};
    state = std::make_shared<MarginState>(tree, margins, mc);
    return open_defended_tree_session(state);
  }();

  LabeledDataset leaked;
  ExtractedModel model;
  if (cover_ratio > 0) {
    Rng cover_rng(seed, streams::kCovers);
    if (ec.cover_source == CoverSource::LeakedTraining) {
      Rng leak_rng(seed, streams::kCovers + 1);
      std::vector<std::size_t> order(train.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[leak_rng.below(i)]);
      }
      leaked.class_names = train.class_names;
      leaked.feature_names = train.feature_names;
      const std::size_t n = std::max<std::size_t>(
          1, static_cast<std::size_t>(leak_fraction * static_cast<double>(train.size())));
      for (std::size_t i = 0; i < n; ++i) {
        leaked.rows.push_back(train.rows[order[i]]);
        leaked.labels.push_back(train.labels[order[i]]);
      }
      leaked.recompute_ranges();
      model = adapted_extract(session, ec, cover_rng, &leaked);
    } else {
      model = adapted_extract(session, ec, cover_rng);
    }
  } else {
    model = extract_tree(session, ec);
  }

  const double p = score_extraction(*tree, model);
  std::ofstream(dir / "extracted.txt") << extracted_to_text(model);
  if (state) std::ofstream(dir / "state_snapshot.txt") << state->snapshot();

  std::ofstream summary(dir / "summary.csv");
  summary << "dataset,defense,reaction,cover_ratio,cover_source,leak_fraction,q_total,"
             "q_attack,p,phi_final,terminated_by\n";
  summary << fs::path(train_csv).stem().string() << "," << (defense == "none" ? "none" : "margin")
          << "," << defense << "," << cover_ratio << ","
          << (cover_ratio > 0 ? cover_source : "-") << "," << fmt_double(leak_fraction, 2)
          << "," << model.queries_spent << "," << model.attack_queries << ","
          << fmt_double(p, 4) << "," << fmt_double(state ? state->phi() : 0.0, 4) << ","
          << to_string(model.terminated_by) << "\n";

  Manifest m;
  m.command = "tree-extract";
  m.add("seed", seed);
  m.add("tree", tree_path);
  m.add("train", train_csv);
  m.add("label_column", label_col);
  m.add("defense", defense);
  m.add("alarm_rate", alarm_rate);
  m.add("tau", tau);
  m.add("min_support", min_support);
  m.add("cover_ratio", cover_ratio);
  m.add("cover_source", cover_source);
  m.add("leak_fraction", leak_fraction);
  m.add("epsilon", epsilon);
  m.add("budget", budget);
  m.write(dir);

  std::cout << "extraction finished: p = " << fmt_double(p, 2) << ", queries = "
            << model.queries_spent << " (attack " << model.attack_queries << "), "
            << to_string(model.terminated_by) << "\n";
  return 0;
}

// --------------------------------------------------------- tree-defend-eval
int cmd_tree_defend_eval(const std::string& data, const std::string& label_col,
                         const std::string& synth, int repetitions, double alarm_rate,
                         double tau, int min_support, std::uint64_t budget,
                         bool with_cover_grid, const std::string& out, std::uint64_t seed) {
  const fs::path dir = prepare_outdir(out);
  std::string name;
  const LabeledDataset ds = load_or_synth_dataset(data, label_col, synth, seed, &name);

  TreeExperimentConfig cfg;
  cfg.seed = seed;
  cfg.alarm_rate = alarm_rate;
  cfg.tau = tau;
  cfg.min_leaf_support = min_support;
  cfg.query_budget = budget;

  const auto rows = run_defend_eval(ds, name, repetitions, cfg);
  write_defend_eval_csv((dir / "defend_eval.csv").string(), rows);

  if (with_cover_grid) {
    const auto cells = run_cover_grid(ds, {1, 5, 40}, {0.1, 0.2, 0.3, 0.4, 0.5},
                                      repetitions, cfg);
    write_cover_grid_csv((dir / "cover_grid.csv").string(), cells);
  }

  Manifest m;
  m.command = "tree-defend-eval";
  m.add("seed", seed);
  m.add("dataset", name);
  m.add("data", data.empty() ? "synth:" + synth : data);
  m.add("repetitions", repetitions);
  m.add("alarm_rate", alarm_rate);
  m.add("tau", tau);
  m.add("min_support", min_support);
  m.add("budget", budget);
  m.add("cover_grid", with_cover_grid ? 1 : 0);
  m.write(dir);

  std::map<std::string, std::pair<double, double>> agg;  // setting -> (q, p) sums
  std::map<std::string, int> counts;
  for (const auto& r : rows) {
    agg[r.setting].first += static_cast<double>(r.q_total);
    agg[r.setting].second += r.p;
    counts[r.setting] += 1;
  }
  std::cout << "setting    mean_Q     mean_p\n";
  for (const auto& [setting, sums] : agg) {
    std::printf("%-10s %-10.0f %.3f\n", setting.c_str(), sums.first / counts[setting],
                sums.second / counts[setting]);
  }
  std::cout << "wrote " << (dir / "defend_eval.csv").string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- report
int cmd_report(const std::string& in_dir, const std::string& out) {
  struct Key {
    std::string dataset, setting;
    bool operator<(const Key& o) const {
      return std::tie(dataset, setting) < std::tie(o.dataset, o.setting);
    }
  };
  struct Agg {
    double q = 0, p = 0, phi = 0;
    int n = 0;
  };
  std::map<Key, Agg> table;

  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    if (entry.path().filename() != "defend_eval.csv") continue;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::vector<std::string> cells;
      std::string tok;
      while (std::getline(ss, tok, ',')) cells.push_back(tok);
      if (cells.size() < 11) continue;
      Agg& a = table[{cells[0], cells[2]}];
      a.q += std::stod(cells[4]);
      a.p += std::stod(cells[6]);
      a.phi += std::stod(cells[7]);
      a.n += 1;
    }
  }
  if (table.empty()) {
    std::cerr << "no defend_eval.csv files under " << in_dir << "\n";
    return 1;
  }

  std::ostringstream rep;
  rep << "dataset,setting,runs,mean_q,mean_p,mean_phi\n";
  std::printf("%-14s %-10s %6s %10s %8s %8s\n", "dataset", "setting", "runs", "mean_Q",
              "mean_p", "mean_phi");
  for (const auto& [key, a] : table) {
    std::printf("%-14s %-10s %6d %10.0f %8.3f %8.3f\n", key.dataset.c_str(),
                key.setting.c_str(), a.n, a.q / a.n, a.p / a.n, a.phi / a.n);
    rep << key.dataset << "," << key.setting << "," << a.n << "," << fmt_double(a.q / a.n, 1)
        << "," << fmt_double(a.p / a.n, 4) << "," << fmt_double(a.phi / a.n, 4) << "\n";
  }
  if (!out.empty()) {
    const fs::path dir = prepare_outdir(out);
    std::ofstream(dir / "report.csv") << rep.str();
    std::cout << "wrote " << (dir / "report.csv").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"black-box attack and defense laboratory"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out = "bblab-out";
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_option("--out", out, "output directory")->capture_default_str();

  // wm-embed
  std::string image, synth_kind = "texture-noise", wm_in;
  int width = 32, height = 32;
  double strength = 2.5;
  auto* embed_cmd = app.add_subcommand("wm-embed", "embed a watermark into an image");
  embed_cmd->add_option("--image", image, "input PGM image (P5)");
  embed_cmd->add_option("--synth-kind", synth_kind, "gradient|texture-noise|blobs")
      ->capture_default_str();
  embed_cmd->add_option("--width", width)->capture_default_str();
  embed_cmd->add_option("--height", height)->capture_default_str();
  embed_cmd->add_option("--strength", strength, "per-pixel watermark amplitude")
      ->capture_default_str();
  embed_cmd->add_option("--wm-in", wm_in, "reuse an existing watermark sidecar");

  // wm-detect
  std::string det_image, det_wm;
  bool numeric = false;
  auto* detect_cmd = app.add_subcommand("wm-detect", "run the correlation detector");
  detect_cmd->add_option("--image", det_image)->required();
  detect_cmd->add_option("--wm", det_wm)->required();
  detect_cmd->add_flag("--numeric", numeric, "also print the raw score");

  // wm-attack
  std::string atk_image, atk_wm, reaction = "random", recipe_path, start = "random";
  double delta = 0.0;
  AttackConfig acfg;
  auto* attack_cmd = app.add_subcommand("wm-attack", "sensitivity attack on the detector");
  attack_cmd->add_option("--image", atk_image, "marked PGM image")->required();
  attack_cmd->add_option("--wm", atk_wm)->required();
  attack_cmd->add_option("--delta", delta, "guard threshold; 0 disables the guard")
      ->capture_default_str();
  attack_cmd->add_option("--reaction", reaction, "random|block")->capture_default_str();
  attack_cmd->add_option("--recipe", recipe_path, "variation recipe file");
  attack_cmd->add_option("--start", start, "random|gray starting position")
      ->capture_default_str();
  attack_cmd->add_option("--tolerance", acfg.bisection_tolerance)->capture_default_str();
  attack_cmd->add_option("--probe-step", acfg.probe_step)->capture_default_str();
  attack_cmd->add_option("--max-iterations", acfg.max_iterations)->capture_default_str();

  // wm-guard-eval
  int count = 20, fp_splits = 10;
  int ge_width = 32, ge_height = 32;
  double ge_strength = 12.0;
  std::string ge_kind = "texture-noise", delta_grid = "300,600,1200,2400,4800,1000000";
  std::string ge_reaction = "random", ge_recipe;
  AttackConfig ge_acfg;
  ge_acfg.max_iterations = 3;
  ge_acfg.bisection_tolerance = 1e-5;
  auto* guard_cmd = app.add_subcommand("wm-guard-eval", "sweep the guard threshold");
  guard_cmd->add_option("--count", count, "number of synthetic images")->capture_default_str();
  guard_cmd->add_option("--width", ge_width)->capture_default_str();
  guard_cmd->add_option("--height", ge_height)->capture_default_str();
  guard_cmd->add_option("--kind", ge_kind)->capture_default_str();
  guard_cmd->add_option("--strength", ge_strength, "desk-scale default keeps detection reliable")
      ->capture_default_str();
  guard_cmd->add_option("--delta-grid", delta_grid)->capture_default_str();
  guard_cmd->add_option("--reaction", ge_reaction, "random|block")->capture_default_str();
  guard_cmd->add_option("--fp-splits", fp_splits)->capture_default_str();
  guard_cmd->add_option("--recipe", ge_recipe, "variation recipe file");
  guard_cmd->add_option("--max-iterations", ge_acfg.max_iterations)->capture_default_str();

  // tree-train
  std::string data, label_col = "label", synth_name;
  double split_fraction = 0.5;
  int min_leaf = 5, max_depth = 0;
  auto* train_cmd = app.add_subcommand("tree-train", "train a CART tree");
  train_cmd->add_option("--data", data, "dataset CSV with a header row");
  train_cmd->add_option("--label-col", label_col)->capture_default_str();
  train_cmd->add_option("--synth", synth_name,
                        "iris|carseats|college|orange-juice|wine stand-in");
  train_cmd->add_option("--split-fraction", split_fraction)->capture_default_str();
  train_cmd->add_option("--min-leaf", min_leaf)->capture_default_str();
  train_cmd->add_option("--max-depth", max_depth, "0 means unbounded")->capture_default_str();

  // tree-extract
  std::string tree_path, ex_train, ex_label = "label", defense = "none",
              cover_source = "random";
  double alarm_rate = 0.05, tau = 0.3, leak_fraction = 0.0, epsilon = 1e-3;
  int min_support = 16, cover_ratio = 0;
  std::uint64_t budget = 100000;
  auto* extract_cmd = app.add_subcommand("tree-extract", "run the extraction attack");
  extract_cmd->add_option("--tree", tree_path)->required();
  extract_cmd->add_option("--train", ex_train, "training CSV (margins and attacker ranges)")
      ->required();
  extract_cmd->add_option("--label-col", ex_label)->capture_default_str();
  extract_cmd->add_option("--defense", defense, "none|block|random")->capture_default_str();
  extract_cmd->add_option("--alarm-rate", alarm_rate)->capture_default_str();
  extract_cmd->add_option("--tau", tau)->capture_default_str();
  extract_cmd->add_option("--min-support", min_support)->capture_default_str();
  extract_cmd->add_option("--cover-ratio", cover_ratio, "cover queries per attack query")
      ->capture_default_str();
  extract_cmd->add_option("--cover-source", cover_source, "random|leaked")
      ->capture_default_str();
  extract_cmd->add_option("--leak-fraction", leak_fraction)->capture_default_str();
  extract_cmd->add_option("--epsilon", epsilon, "search resolution per feature range")
      ->capture_default_str();
  extract_cmd->add_option("--budget", budget)->capture_default_str();

  // tree-defend-eval
  std::string de_data, de_label = "label", de_synth;
  int repetitions = 5;
  double de_alarm = 0.05, de_tau = 0.3;
  int de_support = 16;
  std::uint64_t de_budget = 100000;
  bool with_cover_grid = false;
  auto* defend_cmd =
      app.add_subcommand("tree-defend-eval", "full defense evaluation on one dataset");
  defend_cmd->add_option("--data", de_data);
  defend_cmd->add_option("--label-col", de_label)->capture_default_str();
  defend_cmd->add_option("--synth", de_synth);
  defend_cmd->add_option("--repetitions", repetitions)->capture_default_str();
  defend_cmd->add_option("--alarm-rate", de_alarm)->capture_default_str();
  defend_cmd->add_option("--tau", de_tau)->capture_default_str();
  defend_cmd->add_option("--min-support", de_support)->capture_default_str();
  defend_cmd->add_option("--budget", de_budget)->capture_default_str();
  defend_cmd->add_flag("--with-cover-grid", with_cover_grid,
                       "also run the informed-attacker cover grid");

  // report
  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "aggregate result CSVs");
  report_cmd->add_option("--dir", report_dir, "directory to scan")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (embed_cmd->parsed()) {
      return cmd_wm_embed(image, synth_kind, width, height, strength, wm_in, out, seed);
    }
    if (detect_cmd->parsed()) return cmd_wm_detect(det_image, det_wm, numeric, out);
    if (attack_cmd->parsed()) {
      return cmd_wm_attack(atk_image, atk_wm, delta, reaction, recipe_path, start, acfg, out,
                           seed);
    }
    if (guard_cmd->parsed()) {
      return cmd_wm_guard_eval(count, ge_width, ge_height, ge_kind, ge_strength, delta_grid,
                               ge_reaction, fp_splits, ge_recipe, ge_acfg, out, seed);
    }
    if (train_cmd->parsed()) {
      return cmd_tree_train(data, label_col, synth_name, split_fraction, min_leaf, max_depth,
                            out, seed);
    }
    if (extract_cmd->parsed()) {
      return cmd_tree_extract(tree_path, ex_train, ex_label, defense, alarm_rate, tau,
                              min_support, cover_ratio, cover_source, leak_fraction, epsilon,
                              budget, out, seed);
    }
    if (defend_cmd->parsed()) {
      return cmd_tree_defend_eval(de_data, de_label, de_synth, repetitions, de_alarm, de_tau,
                                  de_support, de_budget, with_cover_grid, out, seed);
    }
    if (report_cmd->parsed()) return cmd_report(report_dir, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
