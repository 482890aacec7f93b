#include "vsal/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "vsal/error.hpp"

namespace vsal {

namespace {

constexpr int kMaxAttempts = 100;

int ceil_safe(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(Rng& rng) { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; }

std::vector<Edge> non_edges(const Graph& g) {
  std::vector<Edge> out;
  for (int i = 0; i < g.node_count(); ++i)
    for (int j = i + 1; j < g.node_count(); ++j)
      if (!g.has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

Edge ordered(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

// Mutable adjacency used while a generator grows or trims a graph.
class EdgeSet {
 public:
  explicit EdgeSet(const Graph& g) : n_(g.node_count()), adj_(g.adjacency()) {}

  bool has(int i, int j) const { return adj_[static_cast<std::size_t>(i) * n_ + j] != 0; }
  void set(int i, int j, bool on) {
    adj_[static_cast<std::size_t>(i) * n_ + j] = on;
    adj_[static_cast<std::size_t>(j) * n_ + i] = on;
  }
  Graph graph() const {
    std::vector<Edge> e;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (has(i, j)) e.emplace_back(i, j);
    return Graph(n_, e);
  }

  // True if adding (u, v) makes u the center of an induced claw with v as a
  // leaf. Only u and v can gain a claw from this edge.
  bool claw_at_if_added(int u, int v) const {
    std::vector<int> cand;
    for (int a = 0; a < n_; ++a) {
      if (a != v && has(u, a) && !has(a, v)) cand.push_back(a);
    }
    for (std::size_t x = 0; x < cand.size(); ++x)
      for (std::size_t y = x + 1; y < cand.size(); ++y)
        if (!has(cand[x], cand[y])) return true;
    return false;
  }

 private:
  int n_;
  std::vector<std::uint8_t> adj_;
};

}  // namespace

void GenParams::validate() const {
  require(n_min >= 1 && n_min <= n_max, "node-count range must satisfy 1 <= n_min <= n_max");
  require(p_extra >= 0.0 && p_extra <= 1.0, "p_extra must lie in [0, 1]");
  if (cycle_removals) {
    require(cycle_removals->lo >= 1 && cycle_removals->lo <= cycle_removals->hi,
            "cycle_removals range must be non-empty and positive");
  }
  require(target_edge_factor > 0.0, "target_edge_factor must be positive");
  if (density) require(*density > 0.0 && *density < 1.0, "density must lie in (0, 1)");
  if (claws_per_graph) require(*claws_per_graph >= 1, "claws_per_graph must be >= 1");
  require(nontree_fraction_lo > 0.0 && nontree_fraction_lo <= nontree_fraction_hi,
          "non-tree fraction range must be non-empty");
}

Graph tree_from_pruefer(int n, const std::vector<int>& code) {
  if (n <= 1) return Graph::empty(std::max(n, 0));
  if (static_cast<int>(code.size()) != n - 2) {
    throw std::invalid_argument("Pruefer code must have length n - 2");
  }
  std::vector<int> remaining(n, 1);
  for (int c : code) ++remaining[c];
  std::priority_queue<int, std::vector<int>, std::greater<>> leaves;
  for (int v = 0; v < n; ++v)
    if (remaining[v] == 1) leaves.push(v);
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (int c : code) {
    int leaf = leaves.top();
    leaves.pop();
    edges.push_back(ordered(leaf, c));
    if (--remaining[c] == 1) leaves.push(c);
  }
  int a = leaves.top();
  leaves.pop();
  int b = leaves.top();
  edges.push_back(ordered(a, b));
  return Graph(n, edges);
}

Graph random_spanning_tree(int n, Rng& rng) {
  require(n >= 1, "tree needs n >= 1");
  std::vector<int> code(std::max(n - 2, 0));
  for (int& c : code) c = uniform_int(rng, 0, n - 1);
  return tree_from_pruefer(n, code);
}

Graph line_graph(const Graph& g) {
  const auto& e = g.edges();
  const int m = static_cast<int>(e.size());
  std::vector<Edge> out;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (e[a].first == e[b].first || e[a].first == e[b].second ||
          e[a].second == e[b].first || e[a].second == e[b].second) {
        out.emplace_back(a, b);
      }
    }
  }
  return Graph(m, out);
}

IntRange removal_range(const GenParams& p, int n) {
  IntRange r;
  if (p.cycle_removals) {
    r = *p.cycle_removals;
  } else if (n >= 901) {
    r = {200, 250};
  } else if (n >= 401) {
    r = {40, 80};
  } else {
    int k = ceil_safe(0.12 * n);
    r = {k, k};
  }
  const int cap = std::max(1, n - 2);
  r.lo = std::clamp(r.lo, 1, cap);
  r.hi = std::clamp(r.hi, r.lo, cap);
  return r;
}

double target_density(const GenParams& p, int n) {
  if (p.density) return *p.density;
  if (n >= 901) return 0.005;
  if (n >= 401) return 0.008;
  // Keep the large-graph mean degree (0.008 * 449 at the 450-node midpoint).
  if (n <= 1) return 0.0;
  return std::min(0.5, 0.008 * 449.0 / (n - 1));
}

int claw_count(const GenParams& p, int n) {
  if (p.claws_per_graph) return *p.claws_per_graph;
  if (n >= 901) return 50;
  if (n >= 401) return 15;
  return std::max(1, ceil_safe(n / 30.0));
}

namespace {

// Extra edges between non-consecutive cycle positions, skipping the
// wraparound pair (0, n-1).
std::vector<Edge> cycle_extras(int n, double p_extra, Rng& rng) {
  std::vector<Edge> extras;
  if (p_extra <= 0.0) return extras;
  std::bernoulli_distribution flip(p_extra);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (flip(rng)) extras.emplace_back(i, j);
    }
  }
  return extras;
}

}  // namespace

LabeledSample gen_hamiltonian(int n, const GenParams& p, Rng& rng) {
  require(n >= 3, "Hamiltonian generator needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back(ordered(i, (i + 1) % n));
  auto extras = cycle_extras(n, p.p_extra, rng);
  edges.insert(edges.end(), extras.begin(), extras.end());
  return {Graph(n, edges), 1, Task::Ham, true};
}

LabeledSample gen_non_hamiltonian(int n, const GenParams& p, Rng& rng) {
  require(n >= 3, "non-Hamiltonian generator needs n >= 3");
  const IntRange kr = removal_range(p, n);
  const bool checkable = n <= kHeldKarpCap;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int k = uniform_int(rng, kr.lo, kr.hi);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::uint8_t> removed(n, 0);
    for (int t = 0; t < k; ++t) removed[idx[t]] = 1;
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
      if (!removed[i]) edges.push_back(ordered(i, (i + 1) % n));
    auto extras = cycle_extras(n, p.p_extra, rng);
    edges.insert(edges.end(), extras.begin(), extras.end());
    Graph g(n, edges);
    if (!checkable) return {std::move(g), 0, Task::Ham, false};
    if (!is_hamiltonian(g)) return {std::move(g), 0, Task::Ham, true};
  }
  throw GenerationError("non-Hamiltonian sample still Hamiltonian after 100 attempts");
}

namespace {

int planar_edge_target(int n, double factor) {
  long long target = ceil_safe(factor * n);
  long long max_simple = static_cast<long long>(n) * (n - 1) / 2;
  if (n >= 3) max_simple = std::min<long long>(max_simple, 3LL * n - 6);
  return static_cast<int>(std::min(target, max_simple));
}

}  // namespace

LabeledSample gen_planar(int n, const GenParams& p, Rng& rng) {
  require(n >= 3, "planar generator needs n >= 3");
  Graph g = random_spanning_tree(n, rng);
  const int target = planar_edge_target(n, p.target_edge_factor);
  auto cand = non_edges(g);
  std::shuffle(cand.begin(), cand.end(), rng);
  EdgeSet es(g);
  int count = g.edge_count();
  for (const auto& e : cand) {
    if (count >= target) break;
    es.set(e.first, e.second, true);
    if (is_planar(es.graph())) {
      ++count;
    } else {
      es.set(e.first, e.second, false);
    }
  }
  return {es.graph(), 1, Task::Planar, true};
}

LabeledSample gen_non_planar(int n, const GenParams& p, Rng& rng) {
  require(n >= 6, "non-planar generator needs n >= 6");
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Graph base = gen_planar(n, p, rng).graph;
    std::vector<int> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = i;
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::vector<Edge> forbidden;
    if (coin(rng)) {
      for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) forbidden.push_back(ordered(nodes[a], nodes[b]));
    } else {
      for (int a = 0; a < 3; ++a)
        for (int b = 3; b < 6; ++b) forbidden.push_back(ordered(nodes[a], nodes[b]));
    }
    std::sort(forbidden.begin(), forbidden.end());
    std::vector<Edge> added;
    for (const auto& e : forbidden)
      if (!base.has_edge(e.first, e.second)) added.push_back(e);
    std::vector<Edge> removable;
    for (const auto& e : base.edges())
      if (!std::binary_search(forbidden.begin(), forbidden.end(), e)) removable.push_back(e);
    if (removable.size() < added.size()) continue;
    std::shuffle(removable.begin(), removable.end(), rng);
    removable.resize(added.size());
    Graph g = base.with_changes(added, removable);
    const bool verified = !is_planar(g);
    return {std::move(g), 0, Task::Planar, verified};
  }
  throw GenerationError("could not plant a Kuratowski subgraph after 100 attempts");
}

LabeledSample gen_claw_free(int n, const GenParams& p, Rng& rng) {
  require(n >= 1, "claw-free generator needs n >= 1");
  Graph base = line_graph(random_spanning_tree(n + 1, rng));
  const long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
  const long long target =
      std::min<long long>(max_edges, ceil_safe(target_density(p, n) * max_edges));
  EdgeSet es(base);
  long long count = base.edge_count();
  if (count < target) {
    auto cand = non_edges(base);
    std::shuffle(cand.begin(), cand.end(), rng);
    for (const auto& [u, v] : cand) {
      if (count >= target) break;
      if (es.claw_at_if_added(u, v) || es.claw_at_if_added(v, u)) continue;
      es.set(u, v, true);
      ++count;
    }
  }
  Graph g = es.graph();
  const bool verified = is_claw_free(g);
  return {std::move(g), 1, Task::Claw, verified};
}

LabeledSample gen_non_claw_free(int n, const GenParams& p, Rng& rng) {
  require(n >= 4, "non-claw-free generator needs n >= 4");
  const int claws = claw_count(p, n);
  if (4 * claws > n) {
    throw GenerationError("cannot place " + std::to_string(claws) +
                          " disjoint claws on " + std::to_string(n) + " nodes");
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Graph base = gen_claw_free(n, p, rng).graph;
    std::vector<int> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = i;
    std::shuffle(nodes.begin(), nodes.end(), rng);

    EdgeSet es(base);
    std::vector<Edge> protected_edges;  // center-leaf edges
    std::vector<Edge> leaf_pairs;
    int net = 0;
    for (int c = 0; c < claws; ++c) {
      const int center = nodes[4 * c];
      const int leaves[3] = {nodes[4 * c + 1], nodes[4 * c + 2], nodes[4 * c + 3]};
      for (int leaf : leaves) {
        if (!es.has(center, leaf)) {
          es.set(center, leaf, true);
          ++net;
        }
        protected_edges.push_back(ordered(center, leaf));
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
          if (es.has(leaves[a], leaves[b])) {
            es.set(leaves[a], leaves[b], false);
            --net;
          }
          leaf_pairs.push_back(ordered(leaves[a], leaves[b]));
        }
      }
    }
    std::sort(protected_edges.begin(), protected_edges.end());
    std::sort(leaf_pairs.begin(), leaf_pairs.end());

    Graph planted = es.graph();
    if (net > 0) {
      std::vector<Edge> removable;
      for (const auto& e : planted.edges())
        if (!std::binary_search(protected_edges.begin(), protected_edges.end(), e))
          removable.push_back(e);
      if (static_cast<int>(removable.size()) < net) continue;
      std::shuffle(removable.begin(), removable.end(), rng);
      for (int t = 0; t < net; ++t) es.set(removable[t].first, removable[t].second, false);
    } else if (net < 0) {
      std::vector<Edge> addable;
      for (const auto& e : non_edges(planted))
        if (!std::binary_search(leaf_pairs.begin(), leaf_pairs.end(), e)) addable.push_back(e);
      if (static_cast<int>(addable.size()) < -net) continue;
      std::shuffle(addable.begin(), addable.end(), rng);
      for (int t = 0; t < -net; ++t) es.set(addable[t].first, addable[t].second, true);
    }
    Graph g = es.graph();
    const bool verified = !is_claw_free(g);
    return {std::move(g), 0, Task::Claw, verified};
  }
  throw GenerationError("could not plant claws after 100 attempts");
}

LabeledSample gen_tree(int n, const GenParams&, Rng& rng) {
  return {random_spanning_tree(n, rng), 1, Task::Tree, true};
}

LabeledSample gen_non_tree(int n, const GenParams& p, Rng& rng, NonTreeMode mode) {
  require(n >= 3, "non-tree generator needs n >= 3");
  Graph tree = random_spanning_tree(n, rng);
  const int lo = std::max(1, ceil_safe(p.nontree_fraction_lo * (n - 1)));
  const int hi = std::max(lo, ceil_safe(p.nontree_fraction_hi * (n - 1)));
  const int k = uniform_int(rng, lo, hi);
  if (mode == NonTreeMode::Random) mode = coin(rng) ? NonTreeMode::Add : NonTreeMode::Remove;
  Graph g;
  if (mode == NonTreeMode::Add) {
    auto cand = non_edges(tree);
    std::shuffle(cand.begin(), cand.end(), rng);
    cand.resize(std::min<std::size_t>(cand.size(), k));
    g = tree.with_changes(cand, {});
  } else {
    auto cand = tree.edges();
    std::shuffle(cand.begin(), cand.end(), rng);
    cand.resize(std::min<std::size_t>(cand.size(), k));
    g = tree.with_changes({}, cand);
  }
  return {g, 0, Task::Tree, !is_tree(g)};
}

LabeledSample generate_sample(Task task, int label, const GenParams& p, Rng& rng) {
  const int n = uniform_int(rng, p.n_min, p.n_max);
  switch (task) {
    case Task::Ham: return label ? gen_hamiltonian(n, p, rng) : gen_non_hamiltonian(n, p, rng);
    case Task::Planar: return label ? gen_planar(n, p, rng) : gen_non_planar(n, p, rng);
    case Task::Claw: return label ? gen_claw_free(n, p, rng) : gen_non_claw_free(n, p, rng);
    case Task::Tree: return label ? gen_tree(n, p, rng) : gen_non_tree(n, p, rng);
  }
  throw std::invalid_argument("unknown task");
}

std::vector<LabeledSample> generate_dataset(Task task, int count, const GenParams& p) {
  p.validate();
  std::vector<LabeledSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Rng rng(p.seed + static_cast<std::uint64_t>(k));
    out.push_back(generate_sample(task, k % 2 == 0 ? 1 : 0, p, rng));
  }
  return out;
}

namespace {

std::string sample_id(std::size_t index) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << index;
  return os.str();
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string manifest_text(const std::vector<ManifestEntry>& rows) {
  std::string out = "# id\tn\tedges\tlabel\tverified\n";
  for (const auto& r : rows) {
    out += r.id + '\t' + std::to_string(r.n) + '\t' + std::to_string(r.edges) + '\t' +
           std::to_string(r.label) + '\t' + (r.verified ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<ManifestEntry> write_dataset(const std::vector<LabeledSample>& samples,
                                         const std::filesystem::path& root,
                                         const std::string& split) {
  std::vector<ManifestEntry> rows;
  if (samples.empty()) return rows;
  const auto dir = root / task_name(samples.front().task) / split;
  std::error_code ec;
  for (const char* label : {"0", "1"}) {
    std::filesystem::create_directories(dir / label, ec);
    if (ec) throw IoError("cannot create " + (dir / label).string() + ": " + ec.message());
  }
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    ManifestEntry row{sample_id(k), s.graph.node_count(), s.graph.edge_count(), s.label,
                      s.verified};
    const auto base = dir / std::to_string(s.label) / row.id;
    write_bytes(base.string() + ".edges", serialize_graph(s.graph));
    write_bytes(base.string() + ".adj", serialize_adjacency_binary(s.graph));
    rows.push_back(row);
  }
  write_bytes(dir / "manifest.tsv", manifest_text(rows));
  return rows;
}

std::vector<LabeledSample> read_dataset(const std::filesystem::path& root, Task task,
                                        const std::string& split) {
  const auto dir = root / task_name(task) / split;
  std::ifstream in(dir / "manifest.tsv");
  if (!in) throw IoError("missing manifest " + (dir / "manifest.tsv").string());
  std::vector<LabeledSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    ManifestEntry e;
    int verified = 0;
    if (!(row >> e.id >> e.n >> e.edges >> e.label >> verified)) {
      throw ParseError("bad manifest row in " + dir.string() + ": " + line);
    }
    Graph g = read_graph_file(dir / std::to_string(e.label) / (e.id + ".edges"));
    out.push_back({std::move(g), e.label, task, verified != 0});
  }
  return out;
}

}  // namespace vsal
