#include "vsal/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "vsal/error.hpp"

namespace vsal {

const char* task_name(Task t) {
  switch (t) {
    case Task::Ham: return "ham";
    case Task::Planar: return "planar";
    case Task::Claw: return "claw";
    case Task::Tree: return "tree";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "ham") return Task::Ham;
  if (name == "planar") return Task::Planar;
  if (name == "claw") return Task::Claw;
  if (name == "tree") return Task::Tree;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

bool is_tree(const Graph& g) {
  if (g.edge_count() != g.node_count() - 1) return false;
  return connected_and_degree_stats(g).is_connected;
}

bool is_claw_free(const Graph& g) {
  for (int c = 0; c < g.node_count(); ++c) {
    const auto& nb = g.neighbors(c);
    const int d = static_cast<int>(nb.size());
    for (int x = 0; x < d; ++x) {
      for (int y = x + 1; y < d; ++y) {
        if (g.has_edge(nb[x], nb[y])) continue;
        for (int z = y + 1; z < d; ++z) {
          if (!g.has_edge(nb[x], nb[z]) && !g.has_edge(nb[y], nb[z])) return false;
        }
      }
    }
  }
  return true;
}

bool is_hamiltonian(const Graph& g, int cap) {
  const int n = g.node_count();
  if (n > cap) {
    throw CapacityError("Held-Karp capped at n=" + std::to_string(cap) + " (got n=" +
                        std::to_string(n) +
                        "); labels at this size rely on construction, the brute-force "
                        "path is disabled");
  }
  if (n < 3 || !connected_and_degree_stats(g).is_connected) return false;

  // Paths start at node 0. Node 0 is excluded from the subset mask, so the
  // table has 2^(n-1) entries; reach[mask] has bit v set iff some path from
  // 0 visits exactly {0} + mask and ends at v.
  const int m = n - 1;
  std::vector<std::uint32_t> nbr(n, 0);
  for (auto [i, j] : g.edges()) {
    nbr[i] |= 1u << j;
    nbr[j] |= 1u << i;
  }
  std::vector<std::uint32_t> reach(std::size_t{1} << m, 0);
  for (int v = 1; v < n; ++v) {
    if (nbr[0] & (1u << v)) reach[std::size_t{1} << (v - 1)] |= 1u << v;
  }
  for (std::size_t mask = 1; mask < reach.size(); ++mask) {
    std::uint32_t ends = reach[mask];
    while (ends) {
      int v = std::countr_zero(ends);
      ends &= ends - 1;
      std::uint32_t next = (nbr[v] >> 1) & ~static_cast<std::uint32_t>(mask);
      while (next) {
        int w = std::countr_zero(next);
        next &= next - 1;
        reach[mask | (std::size_t{1} << w)] |= 1u << (w + 1);
      }
    }
  }
  return (reach.back() & nbr[0]) != 0;
}

bool brute_force_hamiltonian(const Graph& g) {
  const int n = g.node_count();
  if (n > kBruteForceHamCap) {
    throw CapacityError("brute-force Hamiltonicity capped at n=" +
                        std::to_string(kBruteForceHamCap));
  }
  if (n < 3) return false;
  std::vector<int> order(n - 1);
  std::iota(order.begin(), order.end(), 1);
  do {
    bool ok = g.has_edge(0, order.front()) && g.has_edge(order.back(), 0);
    for (int k = 0; ok && k + 1 < n - 1; ++k) ok = g.has_edge(order[k], order[k + 1]);
    if (ok) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

namespace {

// Left-right planarity test on a DFS orientation. Only the decision is
// computed, so embedding sides are not tracked; the `ref` links are still
// needed to trim intervals when back edges to a parent are removed.
class LeftRightTest {
 public:
  explicit LeftRightTest(const Graph& g) : g_(g) {}

  bool run() {
    const int n = g_.node_count();
    if (n > 2 && g_.edge_count() > 3 * n - 6) return false;

    height_.assign(n, -1);
    parent_edge_.assign(n, kNone);
    out_.assign(n, {});
    oriented_.assign(static_cast<std::size_t>(n) * n, 0);
    std::vector<int> roots;
    for (int v = 0; v < n; ++v) {
      if (height_[v] < 0) {
        height_[v] = 0;
        roots.push_back(v);
        orient(v);
      }
    }

    for (int v = 0; v < n; ++v) {
      std::stable_sort(out_[v].begin(), out_[v].end(),
                       [&](int a, int b) { return nesting_depth_[a] < nesting_depth_[b]; });
    }
    ref_.assign(tail_.size(), kNone);
    lowpt_edge_.assign(tail_.size(), kNone);
    stack_bottom_.assign(tail_.size(), 0);
    for (int r : roots) {
      if (!test(r)) return false;
    }
    return true;
  }

 private:
  static constexpr int kNone = -1;

  struct Interval {
    int low = kNone;
    int high = kNone;
    bool empty() const { return low == kNone && high == kNone; }
  };
  struct ConflictPair {
    Interval left;
    Interval right;
    void swap() { std::swap(left, right); }
  };

  int new_edge(int v, int w) {
    tail_.push_back(v);
    head_.push_back(w);
    lowpt_.push_back(height_[v]);
    lowpt2_.push_back(height_[v]);
    nesting_depth_.push_back(0);
    return static_cast<int>(tail_.size()) - 1;
  }

  void orient(int v) {
    const int n = g_.node_count();
    const int e = parent_edge_[v];
    for (int w : g_.neighbors(v)) {
      if (oriented_[static_cast<std::size_t>(v) * n + w]) continue;
      oriented_[static_cast<std::size_t>(v) * n + w] = 1;
      oriented_[static_cast<std::size_t>(w) * n + v] = 1;
      const int vw = new_edge(v, w);
      out_[v].push_back(vw);
      if (height_[w] < 0) {
        parent_edge_[w] = vw;
        height_[w] = height_[v] + 1;
        orient(w);
      } else {
        lowpt_[vw] = height_[w];
      }
      nesting_depth_[vw] = 2 * lowpt_[vw];
      if (lowpt2_[vw] < height_[v]) nesting_depth_[vw] += 1;
      if (e != kNone) {
        if (lowpt_[vw] < lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt_[e], lowpt2_[vw]);
          lowpt_[e] = lowpt_[vw];
        } else if (lowpt_[vw] > lowpt_[e]) {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt_[vw]);
        } else {
          lowpt2_[e] = std::min(lowpt2_[e], lowpt2_[vw]);
        }
      }
    }
  }

  void set_ref(int edge, int target) {
    if (edge != kNone) ref_[edge] = target;
  }

  bool conflicting(const Interval& i, int b) const {
    return !i.empty() && lowpt_[i.high] > lowpt_[b];
  }

  int lowest(const ConflictPair& p) const {
    if (p.left.empty()) return lowpt_[p.right.low];
    if (p.right.empty()) return lowpt_[p.left.low];
    return std::min(lowpt_[p.left.low], lowpt_[p.right.low]);
  }

  bool test(int v) {
    const int e = parent_edge_[v];
    const auto& adj = out_[v];
    for (std::size_t k = 0; k < adj.size(); ++k) {
      const int ei = adj[k];
      const int w = head_[ei];
      stack_bottom_[ei] = static_cast<int>(stack_.size());
      if (ei == parent_edge_[w]) {
        if (!test(w)) return false;
      } else {
        lowpt_edge_[ei] = ei;
        stack_.push_back(ConflictPair{Interval{}, Interval{ei, ei}});
      }
      if (lowpt_[ei] < height_[v]) {
        if (k == 0) {
          lowpt_edge_[e] = lowpt_edge_[ei];
        } else if (!add_constraints(ei, e)) {
          return false;
        }
      }
    }
    if (e != kNone) remove_back_edges(e);
    return true;
  }

  bool add_constraints(int ei, int e) {
    ConflictPair p;
    do {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (!q.left.empty()) q.swap();
      if (!q.left.empty()) return false;
      if (lowpt_[q.right.low] > lowpt_[e]) {
        if (p.right.empty()) {
          p.right = q.right;
        } else {
          set_ref(p.right.low, q.right.high);
        }
        p.right.low = q.right.low;
      } else {
        set_ref(q.right.low, lowpt_edge_[e]);
      }
    } while (static_cast<int>(stack_.size()) != stack_bottom_[ei]);

    while (!stack_.empty() &&
           (conflicting(stack_.back().left, ei) || conflicting(stack_.back().right, ei))) {
      ConflictPair q = stack_.back();
      stack_.pop_back();
      if (conflicting(q.right, ei)) q.swap();
      if (conflicting(q.right, ei)) return false;
      set_ref(p.right.low, q.right.high);
      if (q.right.low != kNone) p.right.low = q.right.low;
      if (p.left.empty()) {
        p.left = q.left;
      } else {
        set_ref(p.left.low, q.left.high);
      }
      p.left.low = q.left.low;
    }
    if (!(p.left.empty() && p.right.empty())) stack_.push_back(p);
    return true;
  }

  void remove_back_edges(int e) {
    const int u = tail_[e];
    while (!stack_.empty() && lowest(stack_.back()) == height_[u]) {
      stack_.pop_back();
    }
    if (!stack_.empty()) {
      ConflictPair p = stack_.back();
      stack_.pop_back();
      while (p.left.high != kNone && head_[p.left.high] == u) {
        p.left.high = ref_[p.left.high];
      }
      if (p.left.high == kNone && p.left.low != kNone) {
        set_ref(p.left.low, p.right.low);
        p.left.low = kNone;
      }
      while (p.right.high != kNone && head_[p.right.high] == u) {
        p.right.high = ref_[p.right.high];
      }
      if (p.right.high == kNone && p.right.low != kNone) {
        set_ref(p.right.low, p.left.low);
        p.right.low = kNone;
      }
      stack_.push_back(p);
    }
    if (lowpt_[e] < height_[u] && !stack_.empty()) {
      const int hl = stack_.back().left.high;
      const int hr = stack_.back().right.high;
      set_ref(e, (hl != kNone && (hr == kNone || lowpt_[hl] > lowpt_[hr])) ? hl : hr);
    }
  }

  const Graph& g_;
  std::vector<int> height_;
  std::vector<int> parent_edge_;
  std::vector<std::vector<int>> out_;
  std::vector<std::uint8_t> oriented_;

  // Per oriented edge.
  std::vector<int> tail_, head_, lowpt_, lowpt2_, nesting_depth_;
  std::vector<int> ref_, lowpt_edge_, stack_bottom_;

  std::vector<ConflictPair> stack_;
};

}  // namespace

bool is_planar(const Graph& g) { return LeftRightTest(g).run(); }

int oracle_label(Task task, const Graph& g) {
  switch (task) {
    case Task::Ham: return is_hamiltonian(g) ? 1 : 0;
    case Task::Planar: return is_planar(g) ? 1 : 0;
    case Task::Claw: return is_claw_free(g) ? 1 : 0;
    case Task::Tree: return is_tree(g) ? 1 : 0;
  }
  return 0;
}

}  // namespace vsal
