#include "bblab/bnsa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "bblab/errors.hpp"

namespace bblab {

namespace {

// Evaluates points along origin + alpha * (*dir) into a reused buffer.
struct Ray {
  const Signal& origin;
  const Signal* dir;
  Signal buf;

  Ray(const Signal& o, const Signal* d) : origin(o), dir(d), buf(Signal::zeros(o.dim())) {}

  const Signal& at(double alpha) {
    const std::size_t n = origin.dim();
    for (std::size_t i = 0; i < n; ++i) buf.values[i] = origin[i] + alpha * (*dir)[i];
    return buf;
  }

  bool query(BinarySession& s, double alpha) { return s.query(at(alpha)); }
};

// Bisection between a present response and an absent response (either
// order); returns the absent endpoint.
BoundaryHit bisect(BinarySession& session, Ray& ray, double alpha_present,
                   double alpha_absent, double tol) {
  while (std::abs(alpha_present - alpha_absent) > tol) {
    const double m = 0.5 * (alpha_present + alpha_absent);
    if (ray.query(session, m)) {
      alpha_present = m;
    } else {
      alpha_absent = m;
    }
  }
  BoundaryHit hit;
  hit.alpha = alpha_absent;
  hit.point = ray.at(alpha_absent);
  return hit;
}

// Warm-started boundary search around a known-good guess (origin is
// present). Expands or shrinks the bracket until the responses differ.
BoundaryHit bisect_around(BinarySession& session, Ray& ray, double guess,
                          const AttackConfig& cfg, int dimension = -1) {
  const double spread = 0.25;
  double lo = guess * (1.0 - spread);
  double hi = guess * (1.0 + spread);
  const bool r_lo = ray.query(session, lo);
  const bool r_hi = ray.query(session, hi);
  if (r_lo != r_hi) {
    return r_lo ? bisect(session, ray, lo, hi, cfg.bisection_tolerance)
                : bisect(session, ray, hi, lo, cfg.bisection_tolerance);
  }
  if (r_lo) {
    // Both present: the flip lies above.
    double prev = hi;
    double width = guess * spread;
    for (int k = 1; k <= cfg.bracket_doublings; ++k) {
      width *= 2.0;
      const double next = guess + width;
      if (!ray.query(session, next)) {
        return bisect(session, ray, prev, next, cfg.bisection_tolerance);
      }
      prev = next;
    }
    throw BracketError("re-mapping failed to bracket the boundary", dimension);
  }
  // Both absent: the flip lies below; alpha 0 is the present origin.
  double prev = lo;
  double down = lo;
  while (down > cfg.bisection_tolerance) {
    down *= 0.5;
    if (ray.query(session, down)) {
      return bisect(session, ray, down, prev, cfg.bisection_tolerance);
    }
    prev = down;
  }
  return bisect(session, ray, 0.0, prev, cfg.bisection_tolerance);
}

Signal random_unit_direction(std::size_t dim, Rng& rng) {
  Signal u = Signal::zeros(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& v : u.values) v = rng.normal();
    n = norm(u);
  }
  for (auto& v : u.values) v /= n;
  return u;
}

}  // namespace

BoundaryHit locate_boundary(BinarySession& session, const Signal& origin,
                            const Signal& direction, const AttackConfig& cfg) {
  check_same_dim(origin, direction);
  if (norm(direction) == 0.0) throw BracketError("direction is zero");

  if (!session.query(origin)) {
    return {0.0, origin};  // already on the absent side
  }
  Ray ray(origin, &direction);
  double prev = 0.0;
  double alpha = 1.0;
  for (int k = 0; k <= cfg.bracket_doublings; ++k) {
    if (!ray.query(session, alpha)) {
      return bisect(session, ray, prev, alpha, cfg.bisection_tolerance);
    }
    prev = alpha;
    alpha *= 2.0;
  }
  throw BracketError(
      "boundary not bracketed after " + std::to_string(cfg.bracket_doublings) +
      " doublings (direction may be parallel to the boundary)");
}

Signal estimate_gradient(BinarySession& session, const Signal& boundary_point,
                         const Signal& origin, const AttackConfig& cfg) {
  check_same_dim(boundary_point, origin);
  const std::size_t n = origin.dim();

  Signal t = sub(boundary_point, origin);  // alpha* == 1 by construction
  const double t_sq = dot(t, t);

  Ray ray(origin, &t);
  // Re-measure the base distance through the same bisection so its absent-
  // side bias cancels in the differences.
  const BoundaryHit base = bisect_around(session, ray, 1.0, cfg);
  const double d0 = base.alpha * base.alpha * t_sq;

  Signal grad = Signal::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = t.values[i];
    t.values[i] = saved + cfg.probe_step;
    const double probe_sq = t_sq + 2.0 * saved * cfg.probe_step + cfg.probe_step * cfg.probe_step;
    const BoundaryHit hit = bisect_around(session, ray, 1.0, cfg, static_cast<int>(i));
    const double d_i = hit.alpha * hit.alpha * probe_sq;
    grad.values[i] = (d_i - d0) / cfg.probe_step;
    t.values[i] = saved;
  }
  return grad;
}

AttackResult bnsa(BinarySession& session, const Signal& marked, const AttackConfig& cfg,
                  Rng& rng) {
  const std::uint64_t start_count = session.count();
  AttackResult res;
  res.final_signal = marked;

  bool present = false;
  try {
    present = session.query(marked);
  } catch (const BlockedError&) {
    res.queries_used = session.count() - start_count;
    return res;
  }
  if (!present) {
    res.removed = true;
    res.distortion = 0.0;
    res.psnr_to_original = psnr(marked, marked, 255.0);
    res.queries_used = session.count() - start_count;
    res.trace.push_back({0, 0.0, res.queries_used});
    return res;
  }

  // Random starting line; both of its rays are probed and the nearer
  // boundary crossing wins. Fresh lines are drawn when neither ray brackets.
  std::optional<BoundaryHit> first;
  const auto locate_or_null = [&](const Signal& dir) -> std::optional<BoundaryHit> {
    try {
      return locate_boundary(session, marked, dir, cfg);
    } catch (const BracketError&) {
      return std::nullopt;
    }
  };
  try {
    for (int attempt = 0; attempt < 4 && !first; ++attempt) {
      const Signal u = random_unit_direction(marked.dim(), rng);
      auto fwd = locate_or_null(u);
      auto bwd = locate_or_null(scaled(u, -1.0));
      if (fwd && bwd) {
        first = (squared_distance(fwd->point, marked) <= squared_distance(bwd->point, marked))
                    ? fwd
                    : bwd;
      } else {
        first = fwd ? fwd : bwd;
      }
    }
  } catch (const BlockedError&) {
  }
  if (!first) {
    res.queries_used = session.count() - start_count;
    res.psnr_to_original = psnr(marked, marked, 255.0);
    return res;
  }

  Signal best_point = first->point;
  double best_d = squared_distance(best_point, marked);
  res.trace.push_back({0, best_d, session.count() - start_count});

  const auto eval_direction = [&](const Signal& dir) -> std::optional<BoundaryHit> {
    Ray ray(marked, &dir);
    try {
      return bisect_around(session, ray, 1.0, cfg);
    } catch (const BracketError&) {
      return std::nullopt;
    }
  };

  try {
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
      Signal grad = estimate_gradient(session, best_point, marked, cfg);
      const double gn = norm(grad);
      if (gn == 0.0) break;
      for (auto& v : grad.values) v /= gn;

      Signal t = sub(best_point, marked);
      const double scale = norm(t);

      double cand_d = std::numeric_limits<double>::infinity();
      double cand_gamma = 0.0;
      Signal cand_point;
      const auto eval_gamma = [&](double gamma) -> double {
        Signal dir = t;
        for (std::size_t i = 0; i < dir.dim(); ++i) dir.values[i] -= gamma * grad[i];
        if (norm(dir) == 0.0) return std::numeric_limits<double>::infinity();
        auto hit = eval_direction(dir);
        if (!hit) return std::numeric_limits<double>::infinity();
        const double d = squared_distance(hit->point, marked);
        if (d < cand_d) {
          cand_d = d;
          cand_gamma = gamma;
          cand_point = std::move(hit->point);
        }
        return d;
      };

      if (cfg.step_rule == StepRule::Backtracking) {
        for (int e = -4; e <= 3; ++e) eval_gamma(scale * std::pow(2.0, e));
        if (std::isfinite(cand_d)) {
          // Golden-section refinement around the best grid step.
          double a = cand_gamma * 0.5, b = cand_gamma * 2.0;
          constexpr double kInvPhi = 0.6180339887498949;
          double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
          double f1 = eval_gamma(x1), f2 = eval_gamma(x2);
          for (int r = 0; r < 10; ++r) {
            if (f1 < f2) {
              b = x2;
              x2 = x1;
              f2 = f1;
              x1 = b - kInvPhi * (b - a);
              f1 = eval_gamma(x1);
            } else {
              a = x1;
              x1 = x2;
              f1 = f2;
              x2 = a + kInvPhi * (b - a);
              f2 = eval_gamma(x2);
            }
          }
        }
      } else {
        eval_gamma(scale);
      }

      if (!std::isfinite(cand_d) || cand_d >= best_d * (1.0 - cfg.improvement_tol)) {
        break;  // no meaningful descent left
      }
      best_point = std::move(cand_point);
      best_d = cand_d;
      ++res.outer_iterations;
      res.trace.push_back({res.outer_iterations, best_d, session.count() - start_count});
    }
  } catch (const BracketError&) {
    // keep best-so-far
  } catch (const BlockedError&) {
    res.final_signal = best_point;
    res.distortion = best_d;
    res.psnr_to_original = psnr(marked, best_point, 255.0);
    res.queries_used = session.count() - start_count;
    return res;  // removed stays false: the oracle refused to confirm
  }

  res.final_signal = best_point;
  res.distortion = best_d;
  res.psnr_to_original = psnr(marked, best_point, 255.0);
  try {
    res.removed = !session.query(best_point);
  } catch (const BlockedError&) {
    res.removed = false;
  }
  res.queries_used = session.count() - start_count;
  return res;
}

Signal gray_start(BinarySession& session, const Signal& marked) {
  Signal probe = marked;
  for (std::size_t k = 0; k <= marked.dim(); ++k) {
    if (k > 0) probe.values[k - 1] = 128.0;
    if (!session.query(probe)) return probe;
  }
  throw Error("gray_start: watermark still detected on the fully gray image");
}

void write_attack_trace_csv(const std::string& path, const AttackResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file: " + path);
  out << "iteration,distortion,cumulative_queries\n";
  char buf[64];
  for (const auto& p : result.trace) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.distortion);
    out << p.iteration << "," << buf << "," << p.cumulative_queries << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace bblab
