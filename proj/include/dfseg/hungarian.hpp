#pragma once

// Minimum-cost one-to-one assignment (Kuhn-Munkres with potentials,
// O(n^3)) with a deterministic choice among tied optima.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

struct MatchPair {
  std::size_t query = 0;
  std::size_t target = 0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct Assignment {
  std::vector<MatchPair> pairs;  // sorted by query index
  double total_cost = 0.0;
};

namespace detail {

// Square assignment solver state. Rows are queries, columns targets; the
// matrix is padded with a constant so every query/target pairing with a
// padding index costs the same.
class SquareAssignment {
 public:
  SquareAssignment(const Tensor& cost, std::size_t rows, std::size_t cols)
      : cost_(cost), rows_(rows), cols_(cols), n_(std::max(rows, cols)) {
    double scale = 1.0;
    for (double c : cost.values()) scale = std::max(scale, std::abs(c));
    tol_ = 1e-10 * scale;
  }

  void solve() {
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = n_;
    u_.assign(n + 1, 0.0);
    v_.assign(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
      p[0] = i;
      std::size_t j0 = 0;
      std::vector<double> minv(n + 1, inf);
      std::vector<char> used(n + 1, 0);
      do {
        used[j0] = 1;
        const std::size_t i0 = p[j0];
        double delta = inf;
        std::size_t j1 = 0;
        for (std::size_t j = 1; j <= n; ++j) {
          if (used[j]) continue;
          const double cur = at(i0 - 1, j - 1) - u_[i0] - v_[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
        for (std::size_t j = 0; j <= n; ++j) {
          if (used[j]) {
            u_[p[j]] += delta;
            v_[j] -= delta;
          } else {
            minv[j] -= delta;
          }
        }
        j0 = j1;
      } while (p[j0] != 0);
      do {
        const std::size_t j1 = way[j0];
        p[j0] = p[j1];
        j0 = j1;
      } while (j0 != 0);
    }
    row_of_.assign(n, 0);
    col_of_.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
      row_of_[j - 1] = p[j] - 1;
      col_of_[p[j] - 1] = j - 1;
    }
  }

  // Among optimal assignments, walk real targets in ascending order and give
  // each the smallest query index still compatible with optimality. The
  // optimal set is the perfect matchings of the tight-edge subgraph; an edge
  // can be forced in iff an alternating path closes the swap.
  void canonicalize() {
    fixed_row_.assign(n_, 0);
    fixed_col_.assign(n_, 0);
    for (std::size_t j = 0; j < cols_; ++j) {
      for (std::size_t i = 0; i < rows_; ++i) {
        if (fixed_row_[i] || !tight(i, j)) continue;
        if (row_of_[j] == i || force_edge(i, j)) break;
      }
      fixed_col_[j] = 1;
      fixed_row_[row_of_[j]] = 1;
    }
  }

  Assignment result() const {
    Assignment a;
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t j = col_of_[i];
      if (j < cols_) {
        a.pairs.push_back({i, j});
        a.total_cost += cost_(i, j);
      }
    }
    return a;
  }

 private:
  double at(std::size_t i, std::size_t j) const {
    return (i < rows_ && j < cols_) ? cost_(i, j) : 0.0;
  }

  bool tight(std::size_t i, std::size_t j) const {
    return at(i, j) - u_[i + 1] - v_[j + 1] <= tol_;
  }

  bool force_edge(std::size_t i, std::size_t j) {
    const std::size_t start = row_of_[j];
    const std::size_t goal = col_of_[i];
    std::vector<std::size_t> parent(n_, n_);
    std::vector<char> seen_row(n_, 0);
    std::vector<std::size_t> queue{start};
    seen_row[start] = 1;
    bool found = false;
    for (std::size_t head = 0; head < queue.size() && !found; ++head) {
      const std::size_t r = queue[head];
      for (std::size_t t = 0; t < n_; ++t) {
        if (t == j || fixed_col_[t] || parent[t] != n_ || t == col_of_[r] || !tight(r, t)) continue;
        parent[t] = r;
        if (t == goal) {
          found = true;
          break;
        }
        const std::size_t next = row_of_[t];
        if (!seen_row[next] && next != i) {
          seen_row[next] = 1;
          queue.push_back(next);
        }
      }
    }
    if (!found) return false;
    std::vector<MatchPair> path;
    for (std::size_t t = goal;;) {
      const std::size_t r = parent[t];
      path.push_back({r, t});
      if (r == start) break;
      t = col_of_[r];
    }
    for (const auto& e : path) {
      col_of_[e.query] = e.target;
      row_of_[e.target] = e.query;
    }
    col_of_[i] = j;
    row_of_[j] = i;
    return true;
  }

  const Tensor& cost_;
  std::size_t rows_, cols_, n_;
  double tol_ = 0.0;
  std::vector<double> u_, v_;
  std::vector<std::size_t> row_of_, col_of_;
  std::vector<char> fixed_row_, fixed_col_;
};

}  // namespace detail

// cost: queries x targets. Returns min(N_q, N_t) pairs minimizing the
// summed cost. Ties resolve to the lexicographically smallest pair list
// ordered by (target, query).
inline Assignment hungarian(const Tensor& cost) {
  detail::require_rank(cost, 2, "hungarian cost");
  for (double c : cost.values()) {
    if (!std::isfinite(c)) throw ValidationError("hungarian: cost matrix has a non-finite entry");
  }
  detail::SquareAssignment solver(cost, cost.dim(0), cost.dim(1));
  solver.solve();
  solver.canonicalize();
  return solver.result();
}

}  // namespace dfseg
