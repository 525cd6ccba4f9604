#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bblab/bnsa.hpp"
#include "bblab/oracle.hpp"
#include "bblab/rng.hpp"
#include "bblab/signal.hpp"
#include "bblab/watermark.hpp"

namespace bblab {

struct Distortion {
  std::string kind;  // identity | noise | denoise | jpeg | contrast | brightness
  double param = 0.0;
};

// Plausible variations of one marked image: the reference set of the
// one-class model.
struct VariationSet {
  std::vector<Signal> members;
  std::vector<Distortion> provenance;

  std::size_t size() const { return members.size(); }
};

// Distortion parameter grids. JPEG-like compression is approximated by 8x8
// block mean-quantization: within each block the residual against the block
// mean is quantized to multiples of the level.
struct Recipe {
  std::vector<double> noise_amplitudes = {5, 10, 20, 30};
  std::vector<double> denoise_windows = {2, 3, 4, 5};
  std::vector<double> jpeg_levels = {8, 16, 32, 64};
  std::vector<double> contrast_scales = {0.7, 0.85, 1.15, 1.3};
  std::vector<double> brightness_offsets = {-30, -15, 15, 30};
  bool include_reference = true;  // the marked image itself joins the set

  std::size_t member_count() const;
};

// Key-value recipe file: "noise = 5, 10, 20" style lines.
Recipe load_recipe(const std::string& path);

VariationSet make_variations(const Signal& marked, int width, int height,
                             const Recipe& recipe, Rng& rng);

struct OneClassModel {
  VariationSet reference_points;
  int k = 3;
  double delta = 0.0;  // implausibility threshold
};

// Mean Euclidean distance from q to its k nearest reference members.
double anomaly_distance(const Signal& q, const OneClassModel& model);

enum class GuardReaction { RandomDecision, Block };

struct GuardPolicy {
  GuardReaction reaction = GuardReaction::RandomDecision;
  RngConfig rng;  // stream for the random decisions, keyed by query index
};

struct GuardState {
  bool blocked = false;
  std::uint64_t query_index = 0;
  std::uint64_t implausible_queries = 0;
};

// The plausibility-gated detector: answers the two-class detector only for
// queries inside the one-class region; outside it returns a coin flip or
// blocks the session. Throws BlockedError once blocked.
bool guarded_detect(const Signal& q, const Watermark& wm, const OneClassModel& model,
                    const GuardPolicy& policy, GuardState& state);

BinarySession open_guarded_session(const Watermark& wm, std::shared_ptr<OneClassModel> model,
                                   const GuardPolicy& policy, std::shared_ptr<GuardState> state,
                                   bool logging = false);

struct GuardEvalRow {
  double delta = 0.0;  // +infinity marks the undefended baseline row
  double removal_rate = 0.0;
  double mean_psnr_db = 0.0;  // attack outcome versus the unmarked original
  double benign_fp_rate = 0.0;
  double mean_queries = 0.0;
};

struct GuardEvalConfig {
  std::vector<double> delta_grid;
  GuardReaction reaction = GuardReaction::RandomDecision;
  AttackConfig attack;
  int fp_splits = 10;            // known/unknown partitions per image
  double known_fraction = 0.75;  // share of variations the model keeps
  std::uint64_t seed = 1;
};

// Runs the sensitivity attack through the guarded detector for every delta
// and reports removal rate, outcome quality and the benign false-positive
// rate from held-out variations. A delta = infinity baseline row (plain
// detector) is appended last.
std::vector<GuardEvalRow> evaluate_guard(const std::vector<Signal>& originals, int width,
                                         int height, const Watermark& wm,
                                         const Recipe& recipe, const GuardEvalConfig& cfg);

void write_guard_eval_csv(const std::string& path, const std::vector<GuardEvalRow>& rows,
                          std::size_t dim);

}  // namespace bblab
