#include "anonsched/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace anonsched {
namespace {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  // Row `rows_` holds the reduced costs; its rhs slot holds -objective.
  double& cost(std::size_t c) { return at(rows_, c); }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t k = 0; k <= cols_; ++k) at(r, k) /= p;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k <= cols_; ++k) at(i, k) -= f * at(r, k);
      at(i, c) = 0.0;
    }
    basis[r] = c;
  }

  // Maximizes the current cost row over columns [0, usable). Returns false if unbounded.
  bool optimize(std::size_t usable, double tol) {
    for (std::size_t guard = 0;; ++guard) {
      if (guard > 100000) throw std::runtime_error("lp: iteration limit");
      std::size_t enter = usable;
      for (std::size_t c = 0; c < usable; ++c) {
        if (cost(c) > tol) {
          enter = c;
          break;
        }
      }
      if (enter == usable) return true;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double coef = at(r, enter);
        if (coef <= tol) continue;
        const double ratio = rhs(r) / coef;
        if (ratio < best - tol || (ratio <= best + tol && leave < rows_ && basis[r] < basis[leave])) {
          best = std::min(best, ratio);
          leave = r;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t> basis;

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

}  // namespace

LpResult lp_maximize(std::span<const double> objective, std::span<const LpConstraint> constraints, double tol) {
  const std::size_t n = objective.size();
  const std::size_t m = constraints.size();
  using Sense = LpConstraint::Sense;

  // Normalize to nonnegative right-hand sides.
  std::vector<LpConstraint> rows(constraints.begin(), constraints.end());
  std::size_t slack_count = 0, artificial_count = 0;
  for (auto& row : rows) {
    if (row.coeffs.size() != n) throw std::invalid_argument("lp: constraint width mismatch");
    if (row.rhs < 0.0) {
      for (double& v : row.coeffs) v = -v;
      row.rhs = -row.rhs;
      if (row.sense == Sense::LessEqual) {
        row.sense = Sense::GreaterEqual;
      } else if (row.sense == Sense::GreaterEqual) {
        row.sense = Sense::LessEqual;
      }
    }
    if (row.sense != Sense::Equal) ++slack_count;
    if (row.sense != Sense::LessEqual) ++artificial_count;
  }

  // Columns: originals, slacks/surpluses, artificials.
  const std::size_t first_slack = n;
  const std::size_t first_artificial = n + slack_count;
  const std::size_t cols = first_artificial + artificial_count;
  Tableau t(m, cols);
  t.basis.assign(m, 0);
  std::size_t slack = first_slack, artificial = first_artificial;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) t.at(r, c) = rows[r].coeffs[c];
    t.rhs(r) = rows[r].rhs;
    switch (rows[r].sense) {
      case Sense::LessEqual:
        t.at(r, slack) = 1.0;
        t.basis[r] = slack++;
        break;
      case Sense::GreaterEqual:
        t.at(r, slack++) = -1.0;
        t.at(r, artificial) = 1.0;
        t.basis[r] = artificial++;
        break;
      case Sense::Equal:
        t.at(r, artificial) = 1.0;
        t.basis[r] = artificial++;
        break;
    }
  }

  LpResult result;
  if (artificial_count > 0) {
    // Phase 1: maximize -sum(artificials), expressed in reduced-cost form.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis[r] < first_artificial) continue;
      for (std::size_t c = 0; c <= cols; ++c) {
        if (c < first_artificial || c == cols) t.at(m, c) += t.at(r, c);
      }
    }
    t.optimize(first_artificial, tol);
    double scale = 1.0;
    for (const auto& row : rows) scale = std::max(scale, std::abs(row.rhs));
    if (std::abs(t.rhs(m)) > 10.0 * tol * scale * static_cast<double>(m)) {
      result.status = LpResult::Status::Infeasible;
      return result;
    }
    // Drive remaining (zero-level) artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis[r] < first_artificial) continue;
      for (std::size_t c = 0; c < first_artificial; ++c) {
        if (std::abs(t.at(r, c)) > tol) {
          t.pivot(r, c);
          break;
        }
      }
    }
  }

  // Phase 2 cost row: c_j - c_B B^-1 A_j.
  for (std::size_t c = 0; c <= cols; ++c) t.cost(c) = c < n ? objective[c] : 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis[r];
    if (b >= n) continue;
    const double cb = objective[b];
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) t.cost(c) -= cb * t.at(r, c);
  }
  if (!t.optimize(first_artificial, tol)) {
    result.status = LpResult::Status::Unbounded;
    return result;
  }
  result.status = LpResult::Status::Optimal;
  result.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis[r] < n) result.x[t.basis[r]] = std::max(0.0, t.rhs(r));
  }
  result.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) result.objective += objective[c] * result.x[c];
  return result;
}

}  // namespace anonsched
