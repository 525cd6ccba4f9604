#include "bblab/oneclass.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bblab/errors.hpp"

namespace bblab {

std::size_t Recipe::member_count() const {
  return noise_amplitudes.size() + denoise_windows.size() + jpeg_levels.size() +
         contrast_scales.size() + brightness_offsets.size() + (include_reference ? 1 : 0);
}

Recipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open recipe file: " + path);
  Recipe r;
  r.noise_amplitudes.clear();
  r.denoise_windows.clear();
  r.jpeg_levels.clear();
  r.contrast_scales.clear();
  r.brightness_offsets.clear();

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string eq;
    ls >> eq;
    if (eq != "=") throw ParseError(path + ": line " + std::to_string(line_no) + ": expected '='");
    std::vector<double> values;
    std::string rest;
    std::getline(ls, rest);
    std::istringstream vs(rest);
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
    }
    if (key == "noise") {
      r.noise_amplitudes = values;
    } else if (key == "denoise") {
      r.denoise_windows = values;
    } else if (key == "jpeg") {
      r.jpeg_levels = values;
    } else if (key == "contrast") {
      r.contrast_scales = values;
    } else if (key == "brightness") {
      r.brightness_offsets = values;
    } else if (key == "include_reference") {
      r.include_reference = !values.empty() && values[0] != 0.0;
    } else {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return r;
}

namespace {

void clip_pixels(Signal& s) {
  for (double& v : s.values) v = std::clamp(v, 0.0, 255.0);
}

Signal add_noise(const Signal& x, double amplitude, Rng& rng) {
  Signal out = x;
  for (double& v : out.values) v += rng.uniform(-amplitude, amplitude);
  clip_pixels(out);
  return out;
}

Signal mean_filter(const Signal& x, int w, int h, int window) {
  Signal out = Signal::zeros(x.dim());
  const int r = std::max(1, window) / 2;
  const int r_hi = std::max(1, window) - r - 1;
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      double sum = 0.0;
      int count = 0;
      for (int dy = -r; dy <= r_hi; ++dy) {
        for (int dx = -r; dx <= r_hi; ++dx) {
          const int ny = y + dy, nx = xx + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          sum += x[static_cast<std::size_t>(ny) * w + nx];
          ++count;
        }
      }
      out[static_cast<std::size_t>(y) * w + xx] = sum / count;
    }
  }
  return out;
}

Signal block_quantize(const Signal& x, int w, int h, double level) {
  Signal out = x;
  const int block = 8;
  for (int by = 0; by < h; by += block) {
    for (int bx = 0; bx < w; bx += block) {
      const int ye = std::min(by + block, h), xe = std::min(bx + block, w);
      double mean = 0.0;
      int count = 0;
      for (int y = by; y < ye; ++y) {
        for (int xx = bx; xx < xe; ++xx) {
          mean += x[static_cast<std::size_t>(y) * w + xx];
          ++count;
        }
      }
      mean /= count;
      for (int y = by; y < ye; ++y) {
        for (int xx = bx; xx < xe; ++xx) {
          const std::size_t i = static_cast<std::size_t>(y) * w + xx;
          out[i] = mean + std::round((x[i] - mean) / level) * level;
        }
      }
    }
  }
  clip_pixels(out);
  return out;
}

Signal contrast(const Signal& x, double scale) {
  Signal out = x;
  for (double& v : out.values) v = 128.0 + scale * (v - 128.0);
  clip_pixels(out);
  return out;
}

Signal brightness(const Signal& x, double offset) {
  Signal out = x;
  for (double& v : out.values) v += offset;
  clip_pixels(out);
  return out;
}

}  // namespace

VariationSet make_variations(const Signal& marked, int width, int height,
                             const Recipe& recipe, Rng& rng) {
  if (marked.dim() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("make_variations: dim != width*height");
  }
  if (recipe.member_count() == 0) throw Error("variation recipe produces no members");

  VariationSet vs;
  vs.members.reserve(recipe.member_count());
  const auto push = [&](Signal s, const std::string& kind, double param) {
    vs.members.push_back(std::move(s));
    vs.provenance.push_back({kind, param});
  };

  if (recipe.include_reference) push(marked, "identity", 0.0);
  for (double a : recipe.noise_amplitudes) push(add_noise(marked, a, rng), "noise", a);
  for (double w : recipe.denoise_windows) {
    push(mean_filter(marked, width, height, static_cast<int>(w)), "denoise", w);
  }
  for (double l : recipe.jpeg_levels) push(block_quantize(marked, width, height, l), "jpeg", l);
  for (double c : recipe.contrast_scales) push(contrast(marked, c), "contrast", c);
  for (double b : recipe.brightness_offsets) push(brightness(marked, b), "brightness", b);
  return vs;
}

double anomaly_distance(const Signal& q, const OneClassModel& model) {
  const auto& members = model.reference_points.members;
  if (model.k <= 0 || static_cast<std::size_t>(model.k) > members.size()) {
    throw Error("anomaly_distance: k must be in [1, member count]");
  }
  const std::size_t n = q.dim();
  const std::size_t k = static_cast<std::size_t>(model.k);

  // Squared distances of the k nearest members, kept sorted ascending.
  // Members are abandoned early once their partial sum exceeds the current
  // k-th best; the surviving exact values match a brute-force scan.
  std::vector<double> best;
  best.reserve(k + 1);
  for (const Signal& m : members) {
    check_same_dim(q, m);
    const double bound =
        best.size() == k ? best.back() : std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const double d0 = q[i] - m[i];
      const double d1 = q[i + 1] - m[i + 1];
      const double d2 = q[i + 2] - m[i + 2];
      const double d3 = q[i + 3] - m[i + 3];
      sum += d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
      if (sum > bound) break;
    }
    if (sum <= bound) {
      for (; i < n; ++i) {
        const double d = q[i] - m[i];
        sum += d * d;
      }
    }
    if (sum > bound) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), sum), sum);
    if (best.size() > k) best.pop_back();
  }
  double total = 0.0;
  for (double sq : best) total += std::sqrt(sq);
  return total / static_cast<double>(k);
}

bool guarded_detect(const Signal& q, const Watermark& wm, const OneClassModel& model,
                    const GuardPolicy& policy, GuardState& state) {
  if (state.blocked) throw BlockedError("guard: session is blocked");
  const std::uint64_t index = state.query_index++;
  const bool plausible = std::isinf(model.delta) || anomaly_distance(q, model) < model.delta;
  if (plausible) return detect(q, wm);

  ++state.implausible_queries;
  if (policy.reaction == GuardReaction::Block) {
    state.blocked = true;
    throw BlockedError("guard: implausible query, session blocked");
  }
  return Rng::keyed_coin(policy.rng.seed, policy.rng.stream, index);
}

BinarySession open_guarded_session(const Watermark& wm, std::shared_ptr<OneClassModel> model,
                                   const GuardPolicy& policy, std::shared_ptr<GuardState> state,
                                   bool logging) {
  return BinarySession(
      [wm, model = std::move(model), policy, state = std::move(state)](const Signal& q) {
        return guarded_detect(q, wm, *model, policy, *state);
      },
      logging);
}

std::vector<GuardEvalRow> evaluate_guard(const std::vector<Signal>& originals, int width,
                                         int height, const Watermark& wm,
                                         const Recipe& recipe, const GuardEvalConfig& cfg) {
  if (originals.empty()) throw Error("evaluate_guard: no images");
  if (cfg.delta_grid.empty()) throw Error("evaluate_guard: empty delta grid");

  std::vector<double> deltas = cfg.delta_grid;
  deltas.push_back(std::numeric_limits<double>::infinity());  // undefended baseline

  std::vector<GuardEvalRow> rows;
  for (std::size_t di = 0; di < deltas.size(); ++di) {
    GuardEvalRow row;
    row.delta = deltas[di];
    double psnr_sum = 0.0;
    double fp_sum = 0.0;
    double query_sum = 0.0;
    int removed = 0;

    for (std::size_t img = 0; img < originals.size(); ++img) {
      const Signal& x = originals[img];
      const Signal marked = embed(x, wm);
      Rng var_rng(cfg.seed, streams::kVariations + img);
      auto model = std::make_shared<OneClassModel>();
      model->reference_points = make_variations(marked, width, height, recipe, var_rng);
      model->k = 3;
      model->delta = deltas[di];

      GuardPolicy policy{cfg.reaction,
                         {cfg.seed, streams::kGuardPolicy + img * 131 + di}};
      auto state = std::make_shared<GuardState>();
      BinarySession session = open_guarded_session(wm, model, policy, state);

      // Same attack stream across deltas: the sweep compares thresholds, not
      // starting rays.
      Rng attack_rng(cfg.seed, streams::kAttack + img);
      const AttackResult res = bnsa(session, marked, cfg.attack, attack_rng);

      if (!detect(res.final_signal, wm)) ++removed;
      psnr_sum += psnr(x, res.final_signal, 255.0);
      query_sum += static_cast<double>(res.queries_used);

      // Benign false positives: held-out variations against a model built
      // from the known partition.
      const auto& vs = model->reference_points;
      std::size_t fp = 0, held_total = 0;
      for (int rep = 0; rep < cfg.fp_splits; ++rep) {
        Rng split_rng(cfg.seed, streams::kFpSplits + img * 131 + rep);
        std::vector<std::size_t> order(vs.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[split_rng.below(i)]);
        }
        const std::size_t n_known = static_cast<std::size_t>(
            std::llround(cfg.known_fraction * static_cast<double>(vs.size())));
        OneClassModel known;
        known.k = 3;
        known.delta = deltas[di];
        for (std::size_t i = 0; i < n_known; ++i) {
          known.reference_points.members.push_back(vs.members[order[i]]);
          known.reference_points.provenance.push_back(vs.provenance[order[i]]);
        }
        for (std::size_t i = n_known; i < order.size(); ++i) {
          ++held_total;
          if (anomaly_distance(vs.members[order[i]], known) >= deltas[di]) ++fp;
        }
      }
      fp_sum += held_total == 0 ? 0.0 : static_cast<double>(fp) / held_total;
    }

    const double n = static_cast<double>(originals.size());
    row.removal_rate = removed / n;
    row.mean_psnr_db = psnr_sum / n;
    row.benign_fp_rate = fp_sum / n;
    row.mean_queries = query_sum / n;
    rows.push_back(row);
  }
  return rows;
}

void write_guard_eval_csv(const std::string& path, const std::vector<GuardEvalRow>& rows,
                          std::size_t dim) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write guard eval file: " + path);
  out << "delta,delta_per_pixel,removal_rate,mean_psnr_db,benign_fp_rate,mean_queries\n";
  char buf[256];
  const double root_n = std::sqrt(static_cast<double>(dim));
  for (const auto& r : rows) {
    // delta/sqrt(N) is the per-pixel distance, comparable across sizes.
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.4f,%.4f,%.4f,%.1f\n", r.delta,
                  r.delta / root_n, r.removal_rate, r.mean_psnr_db, r.benign_fp_rate,
                  r.mean_queries);
    out << buf;
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bblab
