#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vsal {

using Edge = std::pair<int, int>;

/// Undirected simple graph on nodes 0..n-1.
///
/// Stores both a dense symmetric adjacency matrix and the sorted edge list
/// (i < j); the two views are kept consistent by construction. Values are
/// immutable once built, so a Graph can be shared freely between threads.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an arbitrary pair list. Pairs are symmetrized and
  /// de-duplicated; throws std::invalid_argument on self-loops or indices
  /// outside [0, n).
  Graph(int n, const std::vector<Edge>& edges);

  static Graph empty(int n) { return Graph(n, {}); }
  static Graph path(int n);
  static Graph cycle(int n);
  static Graph complete(int n);
  static Graph complete_bipartite(int a, int b);
  static Graph star(int leaves);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_edge(int i, int j) const {
    return adjacency_[static_cast<std::size_t>(i) * n_ + j] != 0;
  }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }
  int degree(int v) const { return static_cast<int>(neighbors_[v].size()); }

  /// Row-major n*n 0/1 matrix.
  const std::vector<std::uint8_t>& adjacency() const { return adjacency_; }

  /// Returns a copy with `added` inserted and `removed` deleted.
  Graph with_changes(const std::vector<Edge>& added,
                     const std::vector<Edge>& removed) const;

  /// Relabels node v as perm[v].
  Graph permuted(const std::vector<int>& perm) const;

  bool operator==(const Graph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_ = 0;
  std::vector<std::uint8_t> adjacency_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// Hop-count distance matrix; row-major n*n.
struct DistanceMatrix {
  int n = 0;
  std::vector<double> d;

  double operator()(int i, int j) const {
    return d[static_cast<std::size_t>(i) * n + j];
  }
};

/// Parses the edge-list text format: first line holds n, each following
/// non-empty line holds "i j". Throws ParseError naming the line number.
Graph parse_graph(std::string_view text);

std::string serialize_graph(const Graph& g);

Graph read_graph_file(const std::filesystem::path& path);
void write_graph_file(const Graph& g, const std::filesystem::path& path);

/// Dense binary adjacency: "VSADJ1\n", little-endian uint32 n, then n rows
/// of ceil(n/8) bytes with bit j of row i set iff (i, j) is an edge.
std::string serialize_adjacency_binary(const Graph& g);
Graph parse_adjacency_binary(std::string_view bytes);

/// BFS hop distances; pairs in different components get the sentinel n.
DistanceMatrix shortest_paths(const Graph& g);

struct ConnectivityStats {
  bool is_connected = false;
  std::vector<int> degrees;
};

ConnectivityStats connected_and_degree_stats(const Graph& g);

/// Component id per node, ids assigned in order of the smallest member.
std::vector<int> connected_components(const Graph& g);

}  // namespace vsal
