#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bblab/dataset.hpp"
#include "bblab/dtree.hpp"
#include "bblab/rng.hpp"

namespace bblab {

enum class CoverSource { RandomUniform, LeakedTraining };

struct ExtractionConfig {
  double search_epsilon = 1e-3;  // line-search resolution, fraction of each feature range
  std::vector<Interval> feature_ranges;  // ranges the attacker assumes
  int cover_ratio = 0;                   // cover queries per attack query (0, 1, 5, 40)
  CoverSource cover_source = CoverSource::RandomUniform;
  double leak_fraction = 0.0;  // share of training data known, when leaked
  std::uint64_t query_budget = 100000;
  int divergence_limit = 64;  // distinct boundaries per leaf and feature before aborting
};

enum class Termination { Completed, Blocked, BudgetExhausted, RandomizedDivergence };
std::string to_string(Termination t);

struct ExtractedLeaf {
  int leaf_id = -1;
  Signal witness;
  std::vector<Interval> box;  // reconstructed per-feature intervals
  bool completed = false;     // every feature line search finished
};

struct ExtractedModel {
  std::map<int, ExtractedLeaf> leaves;
  std::uint64_t queries_spent = 0;   // all oracle queries, covers included
  std::uint64_t attack_queries = 0;  // extraction queries only
  Termination terminated_by = Termination::Completed;

  std::size_t completed_count() const;
};

// Recursive per-feature line searches over the assumed ranges, starting from
// the range midpoint; every newly observed leaf id is queued with a witness
// and extracted in turn. Repeated points are answered from a local cache
// instead of the oracle. Stops when the queue drains, the budget runs out,
// the oracle blocks, or one leaf accumulates implausibly many boundaries
// (the random-response defense fingerprint).
ExtractedModel extract_tree(LeafSession& session, const ExtractionConfig& cfg);

// Same attack with cover_ratio chaff queries before every attack query.
ExtractedModel adapted_extract(LeafSession& session, const ExtractionConfig& cfg,
                               Rng& cover_rng, const LabeledDataset* leaked = nullptr);

Signal make_cover_query(const ExtractionConfig& cfg, Rng& rng,
                        const LabeledDataset* leaked = nullptr);

// Fraction of true leaves whose boundary search fully completed.
double score_extraction(const DecisionTree& truth, const ExtractedModel& extracted);

// Leaf summary in the tree text idiom plus one box line per feature.
std::string extracted_to_text(const ExtractedModel& model);

}  // namespace bblab
