#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "warpband/error.hpp"

namespace warpband {

/// Dinic max-flow on real capacities. Residual capacities at or below
/// eps = 64 * DBL_EPSILON * (largest finite capacity) count as saturated.
class MaxFlow {
public:
  static constexpr double infinite = std::numeric_limits<double>::infinity();

  explicit MaxFlow(int nodes) : head_(nodes, -1) {
    if (nodes < 2)
      throw ArgumentError("max-flow needs at least two nodes");
  }

  int node_count() const { return static_cast<int>(head_.size()); }

  /// Arc from -> to with capacity cap and reverse capacity rev.
  void add_edge(int from, int to, double cap, double rev = 0.0) {
    if (from < 0 || to < 0 || from >= node_count() || to >= node_count() || from == to)
      throw ArgumentError("max-flow edge endpoints out of range");
    if (!(cap >= 0.0) || !(rev >= 0.0))
      throw ArgumentError("max-flow capacities must be nonnegative");
    push_arc(from, to, cap);
    push_arc(to, from, rev);
    for (double c : {cap, rev})
      if (std::isfinite(c))
        max_cap_ = std::max(max_cap_, c);
  }

  double solve(int source, int sink) {
    source_ = source;
    eps_ = 64.0 * DBL_EPSILON * std::max(max_cap_, 1e-300);
    double flow = 0.0;
    level_.assign(node_count(), -1);
    while (build_levels(source, sink)) {
      cursor_ = head_;
      while (true) {
        const double pushed = augment(source, sink, infinite);
        if (!(pushed > 0.0))
          break;
        if (std::isinf(pushed))
          throw NumericalError("max-flow: infinite-capacity source-sink path");
        flow += pushed;
      }
    }
    solved_ = true;
    return flow;
  }

  /// Nodes reachable from the source in the residual graph: the minimal
  /// source side among all minimum cuts.
  std::vector<char> source_side() const {
    if (!solved_)
      throw ArgumentError("max-flow: solve() first");
    std::vector<char> seen(node_count(), 0);
    std::vector<int> stack{source_};
    seen[source_] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int a = head_[v]; a >= 0; a = next_[a])
        if (residual(a) > eps_ && !seen[to_[a]]) {
          seen[to_[a]] = 1;
          stack.push_back(to_[a]);
        }
    }
    return seen;
  }

private:
  void push_arc(int from, int to, double cap) {
    to_.push_back(to);
    cap_.push_back(cap);
    flow_.push_back(0.0);
    next_.push_back(head_[from]);
    head_[from] = static_cast<int>(to_.size()) - 1;
  }

  double residual(int a) const {
    return std::isinf(cap_[a]) ? infinite : cap_[a] - flow_[a];
  }

  bool build_levels(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> queue;
    level_[s] = 0;
    queue.push(s);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      for (int a = head_[v]; a >= 0; a = next_[a])
        if (level_[to_[a]] < 0 && residual(a) > eps_) {
          level_[to_[a]] = level_[v] + 1;
          queue.push(to_[a]);
        }
    }
    return level_[t] >= 0;
  }

  double augment(int v, int t, double limit) {
    if (v == t)
      return limit;
    for (int &a = cursor_[v]; a >= 0; a = next_[a]) {
      const int w = to_[a];
      const double r = residual(a);
      if (level_[w] != level_[v] + 1 || !(r > eps_))
        continue;
      const double pushed = augment(w, t, std::min(limit, r));
      if (pushed > 0.0) {
        flow_[a] += pushed;
        flow_[a ^ 1] -= pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<int> head_;
  std::vector<int> next_;
  std::vector<int> to_;
  std::vector<double> cap_;
  std::vector<double> flow_;
  std::vector<int> level_;
  std::vector<int> cursor_;
  double max_cap_ = 0.0;
  double eps_ = 0.0;
  int source_ = 0;
  bool solved_ = false;
};

} // namespace warpband
