#pragma once

#include "vsal/graph.hpp"

namespace vsal {

/// Exact property detectors. All are pure functions of the graph.

enum class Task { Ham, Planar, Claw, Tree };

const char* task_name(Task t);
/// Accepts "ham", "planar", "claw", "tree"; throws std::invalid_argument otherwise.
Task parse_task(std::string_view name);

inline constexpr int kHeldKarpCap = 24;
inline constexpr int kBruteForceHamCap = 10;

bool is_tree(const Graph& g);

/// O(n^4) scan for an induced K_{1,3}.
bool is_claw_free(const Graph& g);

/// Left-right (de Fraysseix-Rosenstiehl) planarity test.
bool is_planar(const Graph& g);

/// Held-Karp DP over (subset, endpoint) states. Graphs with n < 3 or more
/// than one component are not Hamiltonian. Throws CapacityError when
/// n > cap.
bool is_hamiltonian(const Graph& g, int cap = kHeldKarpCap);

/// Exhaustive permutation search; same contract as is_hamiltonian, n <= 10.
bool brute_force_hamiltonian(const Graph& g);

/// Dispatches to the oracle for `task`; returns the property label (1 = has it).
int oracle_label(Task task, const Graph& g);

}  // namespace vsal
