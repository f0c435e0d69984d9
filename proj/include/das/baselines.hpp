#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "das/align.hpp"
#include "das/causal.hpp"
#include "das/mlp.hpp"
#include "das/tensor.hpp"

namespace das {

struct WindowSearchConfig {
  std::size_t intervention_size = 1;       // neurons per high-level variable
  std::vector<std::size_t> start_indices;  // empty = every admissible start
  std::vector<std::size_t> layers;         // 1-based layers to scan
};

struct WindowPlacement {
  std::size_t layer = 0;
  std::vector<std::size_t> starts;  // per high-level variable
  double iia_value = 0.0;
};

struct BruteForceResult {
  WindowPlacement best;
  std::vector<WindowPlacement> table;
};

// Hard-interchange IIA for every admissible disjoint window placement;
// argmax with lexicographic (layer, starts) tie-break.
BruteForceResult brute_force_search(const FeedForwardNet& net, const CausalModel& high,
                                    const std::vector<std::string>& var_map,
                                    const WindowSearchConfig& cfg,
                                    const std::vector<CounterfactualExample>& dataset);

struct SignedPermutation {
  Tensor matrix;  // exactly one +-1 per row and column
};

bool is_signed_permutation(const Tensor& m, double tol = 0.0);

// Greedy extraction of the localist alignment matrix closest to an
// orthogonal matrix: repeatedly pick the largest remaining |R| entry, zero
// its row and column, then apply the signs of R at the picked positions.
// Ties break to the smallest (row, col) in row-major order.
SignedPermutation find_localist_alignment(const Tensor& rotation);

// Principal rotation angles in degrees, one per real Schur block: conjugate
// pairs e^{+-i theta} report theta in (0, 180); real eigenvalues +1 -> 0 and
// -1 -> 180. Subdiagonal classification tolerance 1e-9.
std::vector<double> rotation_angles(const Tensor& rotation);

}  // namespace das
