#include "anonsched/rate_distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anonsched/parallel.hpp"

namespace anonsched {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Finite entries of each row with positive prior mass.
struct Sparse {
  std::size_t columns = 0;
  std::vector<double> prior;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
};

Sparse sparsify(const DistortionProblem& problem) {
  Sparse sp;
  const std::size_t n = problem.prior.size();
  if (n == 0 || problem.distortion.size() != n) throw std::invalid_argument("distortion problem: shape mismatch");
  sp.columns = problem.distortion.front().size();
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (problem.distortion[s].size() != sp.columns) throw std::invalid_argument("distortion problem: ragged rows");
    if (!(problem.prior[s] >= 0.0)) throw std::invalid_argument("distortion problem: negative probability");
    total += problem.prior[s];
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t c = 0; c < sp.columns; ++c) {
      const double d = problem.distortion[s][c];
      if (std::isnan(d) || d < 0.0) throw std::invalid_argument("distortion problem: entries must be >= 0");
      if (std::isfinite(d)) row.emplace_back(c, d);
    }
    if (row.empty()) throw std::invalid_argument("distortion problem: a row has no finite entry");
    sp.rows.push_back(std::move(row));
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("distortion problem: prior does not sum to 1");
  sp.prior = problem.prior;
  return sp;
}

std::vector<std::vector<double>> point_mass_rows(const Sparse& sp, std::size_t column) {
  std::vector<std::vector<double>> q(sp.rows.size(), std::vector<double>(sp.columns, 0.0));
  for (auto& row : q) row[column] = 1.0;
  return q;
}

// Best single reproduction letter, or columns == npos if none is finite everywhere.
std::pair<std::size_t, double> best_common_column(const Sparse& sp) {
  std::vector<double> total(sp.columns, 0.0);
  std::vector<std::size_t> hits(sp.columns, 0);
  std::size_t needed = 0;
  for (std::size_t s = 0; s < sp.rows.size(); ++s) {
    if (sp.prior[s] == 0.0) continue;
    ++needed;
    for (const auto& [c, d] : sp.rows[s]) {
      total[c] += sp.prior[s] * d;
      ++hits[c];
    }
  }
  std::size_t best = sp.columns;
  for (std::size_t c = 0; c < sp.columns; ++c) {
    if (hits[c] == needed && (best == sp.columns || total[c] < total[best])) best = c;
  }
  return {best, best == sp.columns ? kInf : total[best]};
}

}  // namespace

BlahutArimotoError::BlahutArimotoError(const std::string& what, BaSolution best_, double gap_)
    : std::runtime_error(what), best(std::move(best_)), gap(gap_) {}

double mutual_information_bits(std::span<const double> prior, const std::vector<std::vector<double>>& conditional) {
  if (conditional.size() != prior.size()) throw std::invalid_argument("mutual_information: shape mismatch");
  if (conditional.empty()) return 0.0;
  std::vector<double> marginal(conditional.front().size(), 0.0);
  for (std::size_t s = 0; s < prior.size(); ++s) {
    for (std::size_t c = 0; c < marginal.size(); ++c) marginal[c] += prior[s] * conditional[s][c];
  }
  double info = 0.0;
  for (std::size_t s = 0; s < prior.size(); ++s) {
    if (prior[s] == 0.0) continue;
    for (std::size_t c = 0; c < marginal.size(); ++c) {
      const double q = conditional[s][c];
      const double joint = prior[s] * q;
      if (joint > 0.0 && marginal[c] > 0.0) info += joint * (std::log2(q) - std::log2(marginal[c]));
    }
  }
  return std::max(0.0, info);
}

double expected_distortion(const DistortionProblem& problem, const std::vector<std::vector<double>>& conditional) {
  double total = 0.0;
  for (std::size_t s = 0; s < problem.prior.size(); ++s) {
    if (problem.prior[s] == 0.0) continue;
    for (std::size_t c = 0; c < conditional[s].size(); ++c) {
      if (conditional[s][c] > 0.0) total += problem.prior[s] * conditional[s][c] * problem.distortion[s][c];
    }
  }
  return total;
}

BaSolution blahut_arimoto_slope(const DistortionProblem& problem, double beta, const BaOptions& options,
                                std::span<const double> warm) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("blahut_arimoto: slope must be finite, >= 0");
  const Sparse sp = sparsify(problem);
  const std::size_t n = sp.rows.size();

  // Row weights exp(-beta (d - min_row d)); the shift cancels in every ratio.
  std::vector<std::vector<double>> weight(n);
  std::vector<double> shift(n, 0.0);
  std::vector<bool> reachable(sp.columns, false);
  for (std::size_t s = 0; s < n; ++s) {
    double lo = kInf;
    for (const auto& [c, d] : sp.rows[s]) lo = std::min(lo, d);
    shift[s] = lo;
    for (const auto& [c, d] : sp.rows[s]) {
      weight[s].push_back(std::exp(-beta * (d - lo)));
      if (sp.prior[s] > 0.0) reachable[c] = true;
    }
  }

  std::vector<double> q(sp.columns, 0.0);
  if (!warm.empty()) {
    if (warm.size() != sp.columns) throw std::invalid_argument("blahut_arimoto: warm start has the wrong size");
    for (std::size_t c = 0; c < sp.columns; ++c) q[c] = reachable[c] ? warm[c] : 0.0;
  }
  double mass = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(mass > 0.0)) {
    for (std::size_t c = 0; c < sp.columns; ++c) q[c] = reachable[c] ? 1.0 : 0.0;
    mass = std::accumulate(q.begin(), q.end(), 0.0);
  }
  // Keep every reachable letter alive so the iteration can move mass anywhere.
  for (std::size_t c = 0; c < sp.columns; ++c) {
    if (reachable[c]) q[c] = std::max(q[c] / mass, 1e-300);
  }
  mass = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= mass;

  std::vector<double> ratio(sp.columns), trial(sp.columns), trial_ratio(sp.columns);
  // F(q) = I + beta D at the best conditional for q, in nats; fills ratio[c] = sum_s p w / Z.
  auto evaluate = [&](const std::vector<double>& qq, std::vector<double>& rr) {
    double f = 0.0;
    std::fill(rr.begin(), rr.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      if (sp.prior[s] == 0.0) continue;
      double zs = 0.0;
      for (std::size_t k = 0; k < sp.rows[s].size(); ++k) zs += qq[sp.rows[s][k].first] * weight[s][k];
      f -= sp.prior[s] * (std::log(zs) - beta * shift[s]);
      for (std::size_t k = 0; k < sp.rows[s].size(); ++k) rr[sp.rows[s][k].first] += sp.prior[s] * weight[s][k] / zs;
    }
    return f;
  };
  auto normalize = [](std::vector<double>& qq) {
    const double total = std::accumulate(qq.begin(), qq.end(), 0.0);
    for (double& v : qq) v /= total;
  };

  // Frank-Wolfe step toward the letter with the steepest descent. Revives
  // letters whose mass decayed to nothing but now pay off.
  auto revive = [&](double f) {
    std::size_t j = 0;
    for (std::size_t c = 1; c < sp.columns; ++c) {
      if (ratio[c] > ratio[j]) j = c;
    }
    if (!(ratio[j] > 1.0) || q[j] > 1e-6) return f;
    for (double t = 0.5; t > 1e-18; t *= 0.5) {
      for (std::size_t c = 0; c < sp.columns; ++c) trial[c] = (1.0 - t) * q[c] + (c == j ? t : 0.0);
      const double ft = evaluate(trial, trial_ratio);
      if (ft < f) {
        q.swap(trial);
        ratio.swap(trial_ratio);
        return ft;
      }
    }
    return f;
  };

  // Newton step on the letters carrying mass, with the simplex constraint.
  // Components driven to zero are left at a tiny floor.
  auto newton = [&](double f) {
    std::vector<std::size_t> support;
    for (std::size_t c = 0; c < sp.columns; ++c) {
      if (q[c] > 1e-12) support.push_back(c);
    }
    const std::size_t k = support.size();
    if (k < 2 || k > 400) return f;
    std::vector<std::size_t> slot(sp.columns, k);
    for (std::size_t a = 0; a < k; ++a) slot[support[a]] = a;
    // Augmented system [H 1; 1' 0][d; mu] = [ratio; 0].
    std::vector<std::vector<double>> m(k + 1, std::vector<double>(k + 2, 0.0));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t s = 0; s < n; ++s) {
      if (sp.prior[s] == 0.0) continue;
      double zs = 0.0;
      row.clear();
      for (std::size_t e = 0; e < sp.rows[s].size(); ++e) {
        const std::size_t c = sp.rows[s][e].first;
        zs += q[c] * weight[s][e];
        if (slot[c] < k) row.emplace_back(slot[c], weight[s][e]);
      }
      const double scale = sp.prior[s] / (zs * zs);
      for (const auto& [a, wa] : row) {
        for (const auto& [b, wb] : row) m[a][b] += scale * wa * wb;
      }
    }
    double ridge = 0.0;
    for (std::size_t a = 0; a < k; ++a) ridge = std::max(ridge, m[a][a]);
    for (std::size_t a = 0; a < k; ++a) {
      m[a][a] += 1e-13 * ridge;
      m[a][k] = 1.0;
      m[k][a] = 1.0;
      m[a][k + 1] = ratio[support[a]];
    }
    for (std::size_t col = 0; col <= k; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r <= k; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      }
      if (m[piv][col] == 0.0) return f;
      std::swap(m[col], m[piv]);
      for (std::size_t r = col + 1; r <= k; ++r) {
        const double factor = m[r][col] / m[col][col];
        if (factor == 0.0) continue;
        for (std::size_t cc = col; cc <= k + 1; ++cc) m[r][cc] -= factor * m[col][cc];
      }
    }
    std::vector<double> x(k + 1);
    for (std::size_t r = k + 1; r-- > 0;) {
      double acc = m[r][k + 1];
      for (std::size_t cc = r + 1; cc <= k; ++cc) acc -= m[r][cc] * x[cc];
      x[r] = acc / m[r][r];
    }
    double t_max = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      if (x[a] < 0.0) t_max = std::min(t_max, -q[support[a]] / x[a]);
    }
    for (double t = t_max; t > 1e-12 * t_max; t *= 0.5) {
      trial = q;
      for (std::size_t a = 0; a < k; ++a) trial[support[a]] = std::max(q[support[a]] + t * x[a], 1e-300);
      normalize(trial);
      const double ft = evaluate(trial, trial_ratio);
      if (ft < f) {
        q.swap(trial);
        ratio.swap(trial_ratio);
        return ft;
      }
    }
    return f;
  };

  double previous = kInf;
  double gap = kInf;
  std::size_t it = 0;
  auto snapshot = [&] {
    BaSolution sol;
    sol.beta = beta;
    sol.gap = gap;
    sol.iterations = it;
    sol.conditional.assign(n, std::vector<double>(sp.columns, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
      double zs = 0.0;
      for (std::size_t k = 0; k < sp.rows[s].size(); ++k) zs += q[sp.rows[s][k].first] * weight[s][k];
      for (std::size_t k = 0; k < sp.rows[s].size(); ++k) {
        sol.conditional[s][sp.rows[s][k].first] = q[sp.rows[s][k].first] * weight[s][k] / zs;
      }
    }
    sol.distortion = expected_distortion(problem, sol.conditional);
    sol.rate_bits = mutual_information_bits(sp.prior, sol.conditional);
    return sol;
  };

  double objective = evaluate(q, ratio);
  for (; it < options.max_iter; ++it) {
    if (objective > previous + 1e-12 * std::max(1.0, std::abs(previous))) {
      throw std::logic_error("blahut_arimoto: objective increased between iterations");
    }
    previous = objective;
    // Blahut's bound: F(q) - min F <= log max_c ratio[c].
    double max_ratio = 0.0;
    for (std::size_t c = 0; c < sp.columns; ++c) {
      if (reachable[c]) max_ratio = std::max(max_ratio, ratio[c]);
    }
    gap = std::log(max_ratio);
    if (gap <= options.gap_tol) return snapshot();
    for (std::size_t c = 0; c < sp.columns; ++c) q[c] *= ratio[c];
    normalize(q);
    objective = evaluate(q, ratio);
    if (it % 8 == 7) {
      objective = revive(objective);
      objective = newton(objective);
    }
  }
  BaSolution best = snapshot();
  throw BlahutArimotoError("blahut_arimoto: no convergence within " + std::to_string(options.max_iter) +
                               " iterations at slope " + std::to_string(beta),
                           std::move(best), gap);
}

BaSolution distortion_rate(const DistortionProblem& problem, double rate_bits, const BaOptions& options) {
  if (!(rate_bits >= 0.0)) throw std::invalid_argument("distortion_rate: rate must be >= 0");
  const Sparse sp = sparsify(problem);
  const auto [column, zero_rate_distortion] = best_common_column(sp);
  BaSolution zero;
  zero.distortion = zero_rate_distortion;
  zero.rate_bits = 0.0;
  zero.beta = 0.0;
  zero.gap = 0.0;
  if (column < sp.columns) zero.conditional = point_mass_rows(sp, column);
  if (rate_bits == 0.0) {
    if (column == sp.columns) throw std::domain_error("distortion_rate: no reproduction is finite for every source");
    return zero;
  }

  BaSolution hi = blahut_arimoto_slope(problem, options.beta_max, options);
  if (hi.rate_bits <= rate_bits) return hi;

  auto marginal = [&](const BaSolution& s) {
    std::vector<double> m(sp.columns, 0.0);
    for (std::size_t r = 0; r < sp.rows.size(); ++r) {
      for (std::size_t c = 0; c < sp.columns; ++c) m[c] += sp.prior[r] * s.conditional[r][c];
    }
    return m;
  };

  // Lower end: shrink the slope until the rate falls below the target.
  BaSolution lo;
  bool have_lo = false;
  double beta = 1.0;
  for (; beta > 1e-8; beta *= 0.25) {
    BaSolution s = blahut_arimoto_slope(problem, beta, options);
    if (s.rate_bits <= rate_bits) {
      lo = std::move(s);
      have_lo = true;
      break;
    }
    if (beta < options.beta_max) {
      hi = std::move(s);
    }
  }
  if (!have_lo) {
    if (column == sp.columns) {
      throw std::domain_error("distortion_rate: rate below the smallest rate with finite distortion");
    }
    lo = zero;
  } else {
    // Upper end: grow the slope from the lower end until the rate exceeds the target.
    for (double b = lo.beta * 2.0; b < options.beta_max && hi.beta > b; b *= 2.0) {
      BaSolution s = blahut_arimoto_slope(problem, b, options, marginal(lo));
      if (s.rate_bits >= rate_bits) {
        hi = std::move(s);
        break;
      }
      lo = std::move(s);
    }
    for (int step = 0; step < 200; ++step) {
      if (hi.rate_bits - lo.rate_bits <= options.rate_tol || hi.beta / lo.beta - 1.0 < 1e-13) break;
      const double mid = std::sqrt(lo.beta * hi.beta);
      BaSolution s = blahut_arimoto_slope(problem, mid, options, marginal(hi));
      if (s.rate_bits <= rate_bits) {
        lo = std::move(s);
      } else {
        hi = std::move(s);
      }
    }
  }

  // Time-share the two bracketing solutions; I is convex in the conditional, so
  // the mixture's rate stays at or below the target while distortion is linear.
  const double span = hi.rate_bits - lo.rate_bits;
  const double theta = span > 0.0 ? std::clamp((hi.rate_bits - rate_bits) / span, 0.0, 1.0) : 1.0;
  BaSolution out;
  out.beta = have_lo ? std::sqrt(lo.beta * hi.beta) : hi.beta;
  out.gap = std::max(lo.gap, hi.gap);
  out.iterations = lo.iterations + hi.iterations;
  out.conditional.assign(sp.rows.size(), std::vector<double>(sp.columns, 0.0));
  for (std::size_t s = 0; s < sp.rows.size(); ++s) {
    for (std::size_t c = 0; c < sp.columns; ++c) {
      out.conditional[s][c] = theta * lo.conditional[s][c] + (1.0 - theta) * hi.conditional[s][c];
    }
  }
  out.distortion = theta * lo.distortion + (1.0 - theta) * hi.distortion;
  out.rate_bits = mutual_information_bits(sp.prior, out.conditional);
  return out;
}

DistortionProblem to_problem(const SessionPrior& prior, const DistortionMatrix& matrix) {
  return {prior.probabilities, matrix.dense()};
}

TradeoffCurve tradeoff_curve(const SessionPrior& prior, const DistortionMatrix& matrix, double expected_visible,
                             std::span<const double> alphas, const BaOptions& options) {
  const auto problem = to_problem(prior, matrix);
  TradeoffCurve curve;
  curve.visible_rate = expected_visible;
  curve.entropy_bits = entropy_bits(prior);
  curve.points.resize(alphas.size());
  parallel_for(alphas.size(), [&](std::size_t k) {
    const double alpha = alphas[k];
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("tradeoff_curve: alpha must be in [0, 1]");
    const double rate = std::max(0.0, curve.entropy_bits * (1.0 - alpha));
    const auto sol = distortion_rate(problem, rate, options);
    auto& pt = curve.points[k];
    pt.alpha = alpha;
    pt.distortion = sol.distortion;
    pt.rate = expected_visible - sol.distortion;
    pt.info_bits = sol.rate_bits;
    pt.policy.choices.resize(prior.sessions.size());
    for (std::size_t s = 0; s < prior.sessions.size(); ++s) {
      for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
        const double q = sol.conditional[s][c];
        if (q > 0.0) pt.policy.choices[s].emplace_back(matrix.covert_of[s].at(c), q);
      }
    }
  });
  return curve;
}

}  // namespace anonsched
