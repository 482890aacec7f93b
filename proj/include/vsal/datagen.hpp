#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vsal/graph.hpp"
#include "vsal/oracles.hpp"

namespace vsal {

using Rng = std::mt19937_64;

struct IntRange {
  int lo = 0;
  int hi = 0;
};

/// Generator knobs. Optional fields fall back to size-dependent defaults:
/// the large (401-500) and huge (901-1000) values below, scaled down for
/// smaller graphs.
struct GenParams {
  int n_min = 6;
  int n_max = 12;
  double p_extra = 0.005;
  std::optional<IntRange> cycle_removals;  // large: 40-80, huge: 200-250
  double target_edge_factor = 1.6;
  std::optional<double> density;           // large: 0.008, huge: 0.005
  std::optional<int> claws_per_graph;      // large: 15, huge: 50
  double nontree_fraction_lo = 0.05;
  double nontree_fraction_hi = 0.12;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of its domain.
  void validate() const;
};

struct LabeledSample {
  Graph graph;
  int label = 0;
  Task task = Task::Tree;
  bool verified = false;
};

/// Uniform labeled tree on n nodes via a random Pruefer sequence.
Graph random_spanning_tree(int n, Rng& rng);

/// Decodes a Pruefer sequence (length n-2, entries in [0, n)) into a tree.
Graph tree_from_pruefer(int n, const std::vector<int>& code);

/// Line graph; node k corresponds to g.edges()[k].
Graph line_graph(const Graph& g);

/// Removal count used by gen_non_hamiltonian for an n-node cycle.
IntRange removal_range(const GenParams& p, int n);
double target_density(const GenParams& p, int n);
int claw_count(const GenParams& p, int n);

LabeledSample gen_hamiltonian(int n, const GenParams& p, Rng& rng);
LabeledSample gen_non_hamiltonian(int n, const GenParams& p, Rng& rng);
LabeledSample gen_planar(int n, const GenParams& p, Rng& rng);
LabeledSample gen_non_planar(int n, const GenParams& p, Rng& rng);
LabeledSample gen_claw_free(int n, const GenParams& p, Rng& rng);
LabeledSample gen_non_claw_free(int n, const GenParams& p, Rng& rng);
LabeledSample gen_tree(int n, const GenParams& p, Rng& rng);

enum class NonTreeMode { Random, Add, Remove };
LabeledSample gen_non_tree(int n, const GenParams& p, Rng& rng,
                           NonTreeMode mode = NonTreeMode::Random);

/// One sample for (task, label) with n drawn uniformly from [n_min, n_max].
LabeledSample generate_sample(Task task, int label, const GenParams& p, Rng& rng);

/// Balanced batch: sample k uses its own stream seeded with seed + k and
/// label k % 2 == 0 ? 1 : 0, so count/2 samples per class (count even).
std::vector<LabeledSample> generate_dataset(Task task, int count, const GenParams& p);

struct ManifestEntry {
  std::string id;
  int n = 0;
  int edges = 0;
  int label = 0;
  bool verified = false;
};

/// Writes `<root>/<task>/<split>/<label>/<id>.edges` (plus `.adj` dense
/// binary copies) and `<root>/<task>/<split>/manifest.tsv`. Returns the
/// manifest rows in write order.
std::vector<ManifestEntry> write_dataset(const std::vector<LabeledSample>& samples,
                                         const std::filesystem::path& root,
                                         const std::string& split);

/// Reads a split written by write_dataset; rows come back in manifest order.
std::vector<LabeledSample> read_dataset(const std::filesystem::path& root, Task task,
                                        const std::string& split);

std::string manifest_text(const std::vector<ManifestEntry>& rows);

}  // namespace vsal
