#include "vsal/graph.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "vsal/error.hpp"

namespace vsal {

Graph::Graph(int n, const std::vector<Edge>& edges) : n_(n) {
  if (n < 0) throw std::invalid_argument("negative node count");
  adjacency_.assign(static_cast<std::size_t>(n) * n, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") out of range");
    }
    if (i == j) {
      throw std::invalid_argument("self-loop at node " + std::to_string(i));
    }
    adjacency_[static_cast<std::size_t>(i) * n + j] = 1;
    adjacency_[static_cast<std::size_t>(j) * n + i] = 1;
  }
  neighbors_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (adjacency_[static_cast<std::size_t>(i) * n + j]) {
        neighbors_[i].push_back(j);
        if (i < j) edges_.emplace_back(i, j);
      }
    }
  }
}

Graph Graph::path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, e);
}

Graph Graph::cycle(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, e);
}

Graph Graph::complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, e);
}

Graph Graph::complete_bipartite(int a, int b) {
  std::vector<Edge> e;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) e.emplace_back(i, a + j);
  return Graph(a + b, e);
}

Graph Graph::star(int leaves) {
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph(leaves + 1, e);
}

Graph Graph::with_changes(const std::vector<Edge>& added,
                          const std::vector<Edge>& removed) const {
  std::vector<std::uint8_t> adj = adjacency_;
  auto set = [&](Edge e, std::uint8_t v) {
    adj[static_cast<std::size_t>(e.first) * n_ + e.second] = v;
    adj[static_cast<std::size_t>(e.second) * n_ + e.first] = v;
  };
  for (const auto& e : added) set(e, 1);
  for (const auto& e : removed) set(e, 0);
  std::vector<Edge> edges;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (adj[static_cast<std::size_t>(i) * n_ + j]) edges.emplace_back(i, j);
  return Graph(n_, edges);
}

Graph Graph::permuted(const std::vector<int>& perm) const {
  std::vector<Edge> e;
  e.reserve(edges_.size());
  for (auto [i, j] : edges_) e.emplace_back(perm[i], perm[j]);
  return Graph(n_, e);
}

namespace {

bool parse_int(std::string_view tok, int& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace

Graph parse_graph(std::string_view text) {
  int n = -1;
  std::vector<Edge> edges;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    auto where = " at line " + std::to_string(line_no);
    if (n < 0) {
      if (toks.size() != 1 || !parse_int(toks[0], n) || n < 1) {
        throw ParseError("expected a positive node count" + where);
      }
      continue;
    }
    int i = 0, j = 0;
    if (toks.size() != 2 || !parse_int(toks[0], i) || !parse_int(toks[1], j)) {
      throw ParseError("malformed edge line" + where);
    }
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw ParseError("index out of range" + where);
    }
    if (i == j) throw ParseError("self-loop" + where);
    edges.emplace_back(i, j);
  }
  if (n < 0) throw ParseError("missing node count");
  return Graph(n, edges);
}

std::string serialize_graph(const Graph& g) {
  std::string out = std::to_string(g.node_count()) + "\n";
  for (auto [i, j] : g.edges()) {
    out += std::to_string(i);
    out += ' ';
    out += std::to_string(j);
    out += '\n';
  }
  return out;
}

Graph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_graph(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_graph_file(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_graph(g);
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {
constexpr std::string_view kAdjMagic = "VSADJ1\n";
}

std::string serialize_adjacency_binary(const Graph& g) {
  const int n = g.node_count();
  const std::size_t row_bytes = (static_cast<std::size_t>(n) + 7) / 8;
  std::string out(kAdjMagic);
  for (int k = 0; k < 4; ++k) {
    out.push_back(static_cast<char>((static_cast<std::uint32_t>(n) >> (8 * k)) & 0xff));
  }
  std::string body(row_bytes * n, '\0');
  for (auto [i, j] : g.edges()) {
    body[i * row_bytes + j / 8] |= static_cast<char>(1u << (j % 8));
    body[j * row_bytes + i / 8] |= static_cast<char>(1u << (i % 8));
  }
  return out + body;
}

Graph parse_adjacency_binary(std::string_view bytes) {
  if (bytes.substr(0, kAdjMagic.size()) != kAdjMagic || bytes.size() < kAdjMagic.size() + 4) {
    throw ParseError("bad adjacency header");
  }
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k) {
    n |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[kAdjMagic.size() + k]))
         << (8 * k);
  }
  const std::size_t row_bytes = (static_cast<std::size_t>(n) + 7) / 8;
  auto body = bytes.substr(kAdjMagic.size() + 4);
  if (body.size() != row_bytes * n) throw ParseError("truncated adjacency body");
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      bool bit = (static_cast<unsigned char>(body[i * row_bytes + j / 8]) >> (j % 8)) & 1u;
      bool sym = (static_cast<unsigned char>(body[j * row_bytes + i / 8]) >> (i % 8)) & 1u;
      if (bit != sym) throw ParseError("asymmetric adjacency");
      if (bit && i == j) throw ParseError("self-loop in adjacency");
      if (bit && i < j) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return Graph(static_cast<int>(n), edges);
}

DistanceMatrix shortest_paths(const Graph& g) {
  const int n = g.node_count();
  DistanceMatrix dm{n, std::vector<double>(static_cast<std::size_t>(n) * n, n)};
  std::vector<int> dist(n);
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : g.neighbors(u)) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int t = 0; t < n; ++t) {
      if (dist[t] >= 0) dm.d[static_cast<std::size_t>(s) * n + t] = dist[t];
    }
  }
  return dm;
}

std::vector<int> connected_components(const Graph& g) {
  const int n = g.node_count();
  std::vector<int> comp(n, -1);
  std::vector<int> stack;
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    stack.assign(1, s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : g.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

ConnectivityStats connected_and_degree_stats(const Graph& g) {
  ConnectivityStats s;
  s.degrees.resize(g.node_count());
  for (int v = 0; v < g.node_count(); ++v) s.degrees[v] = g.degree(v);
  auto comp = connected_components(g);
  s.is_connected = std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
  return s;
}

}  // namespace vsal
