#include "bblab/extract.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include "bblab/errors.hpp"

namespace bblab {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Completed:
      return "completed";
    case Termination::Blocked:
      return "blocked";
    case Termination::BudgetExhausted:
      return "budget_exhausted";
    case Termination::RandomizedDivergence:
      return "randomized_divergence";
  }
  return "unknown";
}

std::size_t ExtractedModel::completed_count() const {
  std::size_t n = 0;
  for (const auto& [_, leaf] : leaves) n += leaf.completed ? 1 : 0;
  return n;
}

Signal make_cover_query(const ExtractionConfig& cfg, Rng& rng, const LabeledDataset* leaked) {
  const std::size_t dim = cfg.feature_ranges.size();
  Signal q = Signal::zeros(dim);
  if (cfg.cover_source == CoverSource::LeakedTraining) {
    if (leaked == nullptr || leaked->size() == 0) {
      throw Error("cover source is leaked training data but none was provided");
    }
    const Signal& row = leaked->rows[rng.below(leaked->size())];
    for (std::size_t f = 0; f < dim; ++f) {
      // Small jitter keeps repeated covers from being byte-identical.
      const double width = cfg.feature_ranges[f].hi - cfg.feature_ranges[f].lo;
      q.values[f] = row[f] + rng.uniform(-0.01, 0.01) * width;
    }
    return q;
  }
  for (std::size_t f = 0; f < dim; ++f) {
    const auto& r = cfg.feature_ranges[f];
    q.values[f] = r.hi > r.lo ? rng.uniform(r.lo, r.hi) : r.lo;
  }
  return q;
}

namespace {

struct StopSearch {};

struct Extractor {
  LeafSession& session;
  const ExtractionConfig& cfg;
  Rng* cover_rng;
  const LabeledDataset* leaked;

  ExtractedModel model;
  std::deque<int> queue;
  std::map<std::vector<double>, LeafResponse> cache;
  std::uint64_t start_count;
  std::uint64_t cover_counter = 0;
  Termination stop_reason = Termination::Completed;
  bool stopped = false;

  Extractor(LeafSession& s, const ExtractionConfig& c, Rng* rng, const LabeledDataset* lk)
      : session(s), cfg(c), cover_rng(rng), leaked(lk), start_count(s.count()) {}

  std::uint64_t spent() const { return session.count() - start_count; }

  void halt(Termination why) {
    stopped = true;
    stop_reason = why;
    throw StopSearch{};
  }

  // Leaked-row covers cycle through the known rows instead of resampling;
  // that spreads them over the leaves as evenly as the leak allows.
  Signal next_cover() {
    if (cfg.cover_source == CoverSource::LeakedTraining && leaked != nullptr &&
        leaked->size() > 0) {
      const Signal& row = leaked->rows[cover_counter++ % leaked->size()];
      Signal q = row;
      for (std::size_t f = 0; f < q.dim(); ++f) {
        const double width = cfg.feature_ranges[f].hi - cfg.feature_ranges[f].lo;
        q.values[f] += cover_rng->uniform(-0.01, 0.01) * width;
      }
      return q;
    }
    return make_cover_query(cfg, *cover_rng, leaked);
  }

  LeafResponse ask(const Signal& q) {
    if (auto it = cache.find(q.values); it != cache.end()) return it->second;
    if (cover_rng != nullptr) {
      for (int j = 0; j < cfg.cover_ratio; ++j) {
        if (spent() >= cfg.query_budget) halt(Termination::BudgetExhausted);
        try {
          session.query(next_cover());
        } catch (const BlockedError&) {
          halt(Termination::Blocked);
        }
      }
    }
    if (spent() >= cfg.query_budget) halt(Termination::BudgetExhausted);
    LeafResponse r;
    try {
      r = session.query(q);
    } catch (const BlockedError&) {
      halt(Termination::Blocked);
    }
    ++model.attack_queries;
    cache.emplace(q.values, r);
    observe(q, r);
    return r;
  }

  void observe(const Signal& q, const LeafResponse& r) {
    if (model.leaves.count(r.leaf_id)) return;
    ExtractedLeaf leaf;
    leaf.leaf_id = r.leaf_id;
    leaf.witness = q;
    leaf.box.resize(cfg.feature_ranges.size());
    model.leaves.emplace(r.leaf_id, std::move(leaf));
    queue.push_back(r.leaf_id);
  }

  void line_search(ExtractedLeaf& rec, int f) {
    const double lo = cfg.feature_ranges[f].lo;
    const double hi = cfg.feature_ranges[f].hi;
    if (!(hi > lo)) {
      rec.box[f] = {lo, hi};
      return;
    }
    const double eps = cfg.search_epsilon * (hi - lo);
    Signal probe = rec.witness;
    const auto id_at = [&](double v) {
      probe.values[f] = v;
      return ask(probe).leaf_id;
    };

    std::vector<double> cuts;
    int boundaries = 0;
    // Recursive interval refinement: splits wherever the leaf id changes,
    // down to the search resolution.
    const auto recurse = [&](auto&& self, double a, int id_a, double b, int id_b) -> void {
      if (id_a == id_b) return;  // assume one region between equal responses
      if (b - a <= eps) {
        cuts.push_back(0.5 * (a + b));
        if (++boundaries > cfg.divergence_limit) halt(Termination::RandomizedDivergence);
        return;
      }
      const double m = 0.5 * (a + b);
      const int id_m = id_at(m);
      self(self, a, id_a, m, id_m);
      self(self, m, id_m, b, id_b);
    };
    const int id_lo = id_at(lo);
    const int id_hi = id_at(hi);
    recurse(recurse, lo, id_lo, hi, id_hi);

    // The reconstructed interval is the cut-free segment around the witness.
    const double wf = rec.witness[f];
    double seg_lo = lo, seg_hi = hi;
    for (double c : cuts) {
      if (c <= wf) {
        seg_lo = std::max(seg_lo, c);
      } else {
        seg_hi = std::min(seg_hi, c);
      }
    }
    rec.box[f] = {seg_lo, seg_hi};
  }

  void run() {
    if (cfg.feature_ranges.empty()) throw Error("extraction needs assumed feature ranges");
    Signal mid = Signal::zeros(cfg.feature_ranges.size());
    for (std::size_t f = 0; f < mid.dim(); ++f) {
      mid.values[f] = 0.5 * (cfg.feature_ranges[f].lo + cfg.feature_ranges[f].hi);
    }
    try {
      ask(mid);
      while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        ExtractedLeaf& rec = model.leaves.at(id);
        for (int f = 0; f < static_cast<int>(cfg.feature_ranges.size()); ++f) {
          line_search(rec, f);
        }
        rec.completed = true;
      }
    } catch (const StopSearch&) {
    }
    model.queries_spent = spent();
    model.terminated_by = stopped ? stop_reason : Termination::Completed;
  }
};

}  // namespace

ExtractedModel extract_tree(LeafSession& session, const ExtractionConfig& cfg) {
  Extractor ex(session, cfg, nullptr, nullptr);
  ex.run();
  return std::move(ex.model);
}

ExtractedModel adapted_extract(LeafSession& session, const ExtractionConfig& cfg,
                               Rng& cover_rng, const LabeledDataset* leaked) {
  if (cfg.cover_ratio < 1) throw Error("adapted attack needs cover_ratio >= 1");
  Extractor ex(session, cfg, &cover_rng, leaked);
  ex.run();
  return std::move(ex.model);
}

double score_extraction(const DecisionTree& truth, const ExtractedModel& extracted) {
  const std::vector<int> ids = truth.leaf_ids();
  if (ids.empty()) return 0.0;
  std::size_t hit = 0;
  for (int id : ids) {
    auto it = extracted.leaves.find(id);
    if (it != extracted.leaves.end() && it->second.completed) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(ids.size());
}

std::string extracted_to_text(const ExtractedModel& model) {
  std::ostringstream out;
  out << "bblab-extracted 1\n";
  out << "leaves " << model.leaves.size() << "\n";
  char buf[128];
  for (const auto& [id, leaf] : model.leaves) {
    out << "leaf " << id << " " << (leaf.completed ? "completed" : "partial") << "\n";
    for (std::size_t f = 0; f < leaf.box.size(); ++f) {
      std::snprintf(buf, sizeof(buf), "box %d %zu %.17g %.17g\n", id, f, leaf.box[f].lo,
                    leaf.box[f].hi);
      out << buf;
    }
  }
  out << "queries " << model.queries_spent << " attack " << model.attack_queries << "\n";
  out << "terminated " << to_string(model.terminated_by) << "\n";
  return out.str();
}

}  // namespace bblab
