#include "bblab/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

ExtractionConfig extraction_config(const LabeledDataset& ds, const TreeExperimentConfig& cfg) {
  ExtractionConfig ec;
  ec.search_epsilon = cfg.search_epsilon;
  ec.query_budget = cfg.query_budget;
  ec.divergence_limit = cfg.divergence_limit;
  ec.feature_ranges.reserve(ds.feature_ranges.size());
  for (const auto& [lo, hi] : ds.feature_ranges) ec.feature_ranges.push_back({lo, hi});
  return ec;
}

LabeledDataset leak_subset(const LabeledDataset& train, double fraction, Rng& rng) {
  LabeledDataset out;
  out.class_names = train.class_names;
  out.feature_names = train.feature_names;
  out.label_name = train.label_name;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n = std::max<std::size_t>(
      1, static_cast<std::size_t>(fraction * static_cast<double>(train.size())));
  for (std::size_t i = 0; i < n && i < order.size(); ++i) {
    out.rows.push_back(train.rows[order[i]]);
    out.labels.push_back(train.labels[order[i]]);
  }
  out.recompute_ranges();
  return out;
}

}  // namespace

HonestReplayResult honest_replay(std::shared_ptr<const DecisionTree> tree,
                                 std::shared_ptr<const SecurityMargin> margins,
                                 const LabeledDataset& test, const MarginConfig& cfg) {
  MarginState state(std::move(tree), std::move(margins), cfg);
  HonestReplayResult res;
  for (const Signal& row : test.rows) {
    try {
      state.stateful_predict(row);
    } catch (const BlockedError&) {
      break;
    }
    res.max_phi_supported = std::max(res.max_phi_supported, state.phi_supported());
  }
  res.final_phi = state.phi();
  res.final_phi_supported = state.phi_supported();
  res.flagged = state.flagged();
  return res;
}

std::vector<DefendEvalRow> run_defend_eval(const LabeledDataset& ds, const std::string& name,
                                           int repetitions, const TreeExperimentConfig& cfg) {
  std::vector<DefendEvalRow> rows;
  for (int rep = 0; rep < repetitions; ++rep) {
    Rng split_rng(cfg.seed, streams::kSplit + rep);
    auto [train, test] = split_dataset(ds, cfg.split_fraction, split_rng);
    auto tree = std::make_shared<DecisionTree>(train_tree(train, cfg.tree_params));
    auto margins =
        std::make_shared<SecurityMargin>(build_margins(*tree, train, cfg.alarm_rate));
    const ExtractionConfig ec = extraction_config(ds, cfg);

    const auto base_row = [&](const std::string& setting) {
      DefendEvalRow r;
      r.dataset = name;
      r.repetition = rep;
      r.setting = setting;
      r.leaves = tree->n_leaves();
      return r;
    };
    const auto margin_cfg = [&](MarginReaction reaction, std::uint64_t stream) {
      MarginConfig mc;
      mc.tau = cfg.tau;
      mc.reaction = reaction;
      mc.min_leaf_support = cfg.min_leaf_support;
      mc.rng = {cfg.seed, streams::kDefense + stream + 977 * rep};
      return mc;
    };

    {  // honest test-set replay
      DefendEvalRow r = base_row("honest");
      const HonestReplayResult hr =
          honest_replay(tree, margins, test, margin_cfg(MarginReaction::Block, 0));
      r.q_total = r.q_attack = test.size();
      r.phi_final = hr.final_phi;
      r.max_phi = hr.max_phi_supported;
      r.flagged = hr.flagged;
      r.terminated_by = "completed";
      rows.push_back(r);
    }
    {  // unmodified attack, no defense
      DefendEvalRow r = base_row("original");
      LeafSession session = open_tree_session(*tree);
      const ExtractedModel m = extract_tree(session, ec);
      r.q_total = m.queries_spent;
      r.q_attack = m.attack_queries;
      r.p = score_extraction(*tree, m);
      r.terminated_by = to_string(m.terminated_by);
      rows.push_back(r);
    }
    {  // blocking defense
      DefendEvalRow r = base_row("block");
      auto state =
          std::make_shared<MarginState>(tree, margins, margin_cfg(MarginReaction::Block, 1));
      LeafSession session = open_defended_tree_session(state);
      const ExtractedModel m = extract_tree(session, ec);
      r.q_total = m.queries_spent;
      r.q_attack = m.attack_queries;
      r.p = score_extraction(*tree, m);
      r.phi_final = state->phi();
      r.flagged = state->flagged();
      r.terminated_by = to_string(m.terminated_by);
      rows.push_back(r);
    }
    {  // random-response defense
      DefendEvalRow r = base_row("random");
      auto state = std::make_shared<MarginState>(
          tree, margins, margin_cfg(MarginReaction::RandomResponse, 2));
      LeafSession session = open_defended_tree_session(state);
      const ExtractedModel m = extract_tree(session, ec);
      r.q_total = m.queries_spent;
      r.q_attack = m.attack_queries;
      r.p = score_extraction(*tree, m);
      r.phi_final = state->phi();
      r.flagged = state->flagged();
      r.terminated_by = to_string(m.terminated_by);
      rows.push_back(r);
    }
    {  // adapted attack with random covers against the blocking defense
      DefendEvalRow r = base_row("adapted");
      ExtractionConfig adapted = ec;
      adapted.cover_ratio = cfg.adapted_cover_ratio;
      adapted.cover_source = CoverSource::RandomUniform;
      auto state =
          std::make_shared<MarginState>(tree, margins, margin_cfg(MarginReaction::Block, 3));
      LeafSession session = open_defended_tree_session(state);
      Rng cover_rng(cfg.seed, streams::kCovers + 31 * rep);
      const ExtractedModel m = adapted_extract(session, adapted, cover_rng);
      r.q_total = m.queries_spent;
      r.q_attack = m.attack_queries;
      r.p = score_extraction(*tree, m);
      r.phi_final = state->phi();
      r.flagged = state->flagged();
      r.terminated_by = to_string(m.terminated_by);
      rows.push_back(r);
    }
  }
  return rows;
}

void write_defend_eval_csv(const std::string& path, const std::vector<DefendEvalRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write eval file: " + path);
  out << "dataset,repetition,setting,leaves,q_total,q_attack,p,phi_final,max_phi,flagged,"
         "terminated_by\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.dataset << "," << r.repetition << "," << r.setting << "," << r.leaves << ","
        << r.q_total << "," << r.q_attack << ",";
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,", r.p, r.phi_final, r.max_phi);
    out << buf << (r.flagged ? 1 : 0) << "," << r.terminated_by << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

std::vector<CoverGridCell> run_cover_grid(const LabeledDataset& ds,
                                          const std::vector<int>& cover_ratios,
                                          const std::vector<double>& leak_fractions,
                                          int repetitions, const TreeExperimentConfig& cfg) {
  std::vector<CoverGridCell> cells;
  for (int ratio : cover_ratios) {
    for (double frac : leak_fractions) {
      cells.push_back({ratio, frac, 0.0});
    }
  }
  for (int rep = 0; rep < repetitions; ++rep) {
    Rng split_rng(cfg.seed, streams::kSplit + rep);
    auto [train, test] = split_dataset(ds, cfg.split_fraction, split_rng);
    auto tree = std::make_shared<DecisionTree>(train_tree(train, cfg.tree_params));
    auto margins =
        std::make_shared<SecurityMargin>(build_margins(*tree, train, cfg.alarm_rate));
    const ExtractionConfig base = extraction_config(ds, cfg);

    std::size_t cell = 0;
    std::size_t ratio_idx = 0;
    for (int ratio : cover_ratios) {
      for (double frac : leak_fractions) {
        // One leak order per repetition: larger fractions extend smaller
        // ones, so the informed attacker only ever gains knowledge along
        // the grid axis.
        Rng leak_rng(cfg.seed, streams::kCovers + 7919 * rep);
        const LabeledDataset leaked = leak_subset(train, frac, leak_rng);

        ExtractionConfig ec = base;
        ec.cover_ratio = ratio;
        ec.cover_source = CoverSource::LeakedTraining;
        ec.leak_fraction = frac;

        MarginConfig mc;
        mc.tau = cfg.tau;
        mc.reaction = MarginReaction::Block;
        mc.min_leaf_support = cfg.min_leaf_support;
        mc.rng = {cfg.seed, streams::kDefense + 7919 * rep + cell};
        auto state = std::make_shared<MarginState>(tree, margins, mc);
        LeafSession session = open_defended_tree_session(state);
        Rng cover_rng(cfg.seed, streams::kCovers + 104729 * rep + 31 * ratio_idx + 1);
        const ExtractedModel m = adapted_extract(session, ec, cover_rng, &leaked);
        cells[cell].p_mean += score_extraction(*tree, m) / repetitions;
        ++cell;
      }
      ++ratio_idx;
    }
  }
  return cells;
}

void write_cover_grid_csv(const std::string& path, const std::vector<CoverGridCell>& cells) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cover grid file: " + path);
  out << "cover_ratio,leak_fraction,p_mean\n";
  char buf[64];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof(buf), "%d,%.2f,%.4f\n", c.cover_ratio, c.leak_fraction, c.p_mean);
    out << buf;
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bblab
