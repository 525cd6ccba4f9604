#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bblab/dataset.hpp"
#include "bblab/dtree.hpp"
#include "bblab/extract.hpp"
#include "bblab/margins.hpp"

namespace bblab {

struct TreeExperimentConfig {
  TreeParams tree_params;
  double split_fraction = 0.5;
  double alarm_rate = 0.05;
  double tau = 0.3;
  int min_leaf_support = 8;
  double search_epsilon = 1e-3;
  std::uint64_t query_budget = 100000;
  int divergence_limit = 64;
  int adapted_cover_ratio = 40;
  std::uint64_t seed = 1;
};

struct DefendEvalRow {
  std::string dataset;
  int repetition = 0;
  std::string setting;  // honest | original | block | random | adapted
  std::uint64_t q_total = 0;
  std::uint64_t q_attack = 0;
  double p = 0.0;
  double phi_final = 0.0;
  double max_phi = 0.0;  // supported statistic, tracked across the sequence
  bool flagged = false;
  int leaves = 0;
  std::string terminated_by;
};

// One repetition: 50/50 split, tree + margins from the training half, then
// honest replay, the plain extraction, both defended variants and the
// adapted cover-query attack against the blocking defense.
std::vector<DefendEvalRow> run_defend_eval(const LabeledDataset& ds, const std::string& name,
                                           int repetitions, const TreeExperimentConfig& cfg);

void write_defend_eval_csv(const std::string& path, const std::vector<DefendEvalRow>& rows);

struct HonestReplayResult {
  double final_phi = 0.0;
  double final_phi_supported = 0.0;
  double max_phi_supported = 0.0;
  bool flagged = false;
};

HonestReplayResult honest_replay(std::shared_ptr<const DecisionTree> tree,
                                 std::shared_ptr<const SecurityMargin> margins,
                                 const LabeledDataset& test, const MarginConfig& cfg);

struct CoverGridCell {
  int cover_ratio = 0;
  double leak_fraction = 0.0;
  double p_mean = 0.0;
};

// Informed-attacker grid: leaked-training covers at several cover ratios and
// leak fractions against the blocking defense, averaged over repetitions.
std::vector<CoverGridCell> run_cover_grid(const LabeledDataset& ds,
                                          const std::vector<int>& cover_ratios,
                                          const std::vector<double>& leak_fractions,
                                          int repetitions, const TreeExperimentConfig& cfg);

void write_cover_grid_csv(const std::string& path, const std::vector<CoverGridCell>& cells);

}  // namespace bblab
