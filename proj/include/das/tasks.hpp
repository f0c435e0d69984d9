#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "das/align.hpp"
#include "das/causal.hpp"
#include "das/mlp.hpp"

namespace das {

// ---- Boolean conjunction (the worked fixture) ------------------------------

// High-level model B: inputs P,Q; intermediates V1,V2 copy them; V3 = V1 and V2.
CausalModel conjunction_high();
// Identity-of-first-input variant: F copies P; output = F and Q.
CausalModel conjunction_identity_high();

struct ConjunctionFixture {
  CausalModel high;
  FeedForwardNet net;
  std::shared_ptr<const FeedForwardNet> net_ptr;
  CausalModel net_model;  // variables X1, X2, H (2-dim), O
  Tensor golden_rotation;  // rotation by -20 degrees; aligns V1<->Y1, V2<->Y2
  SubspacePartition partition;            // blocks (1,1)
  std::vector<std::string> var_map;       // {V1, V2}
  DistributedAlignment golden_align;      // rotation = golden
  DistributedAlignment localist_align;    // rotation = identity (V1<->H1, V2<->H2)
  Alignment localist_var_align;           // for constructive-abstraction checks
  std::vector<CounterfactualExample> single_source;  // 4 bases x 4 sources x {V1,V2}
  std::vector<CounterfactualExample> exhaustive;     // + all two-source cases
};

ConjunctionFixture conjunction_fixture();

// ---- Hierarchical equality --------------------------------------------------

enum class EqualityVariant { BothRelations, LeftOnly, IdentityOfFirst };

// label = (w==x) == (y==z)
std::int64_t equality_label(std::int64_t w, std::int64_t x, std::int64_t y, std::int64_t z);

// High-level model over object ids 0..pool-1. Intermediates: both ->
// {left_eq, right_eq}; left -> {left_eq}; identity -> {first_id}.
CausalModel equality_high(EqualityVariant variant, std::size_t pool);

std::vector<std::string> equality_intermediates(EqualityVariant variant);

// ---- Arithmetic (x+y)*z -----------------------------------------------------

enum class ArithmeticVariant { AddFirst, MultiplyFirst, SumOnly, IdentityOfY };

// Sorted distinct values of (x+y)*z over x,y,z in 1..6 (38 classes).
const std::vector<std::int64_t>& arithmetic_class_values();
// Class index of (x+y)*z; digits must lie in 1..6.
std::int64_t arithmetic_label(std::int64_t x, std::int64_t y, std::int64_t z);

// Inputs x,y,z with domain {1..6} (dataset ids 0..5). Intermediates:
// add_first -> {sum, z_id}; multiply_first -> {xz, yz}; sum_only -> {sum};
// identity_of_y -> {y_id}.
CausalModel arithmetic_high(ArithmeticVariant variant);

std::vector<std::string> arithmetic_intermediates(ArithmeticVariant variant);

// ---- Dataset generation ------------------------------------------------------

struct GenConfig {
  std::size_t num_examples = 0;
  std::uint64_t seed = 0;
  // Id range to draw inputs from (equality train/test pools differ).
  std::int64_t id_lo = 0;
  std::int64_t id_hi = 0;  // inclusive
  bool balance_binary = true;

  void validate() const;
};

// Counterfactual examples for DAS: seeded, order-stable, gold computed
// through the high-level model. Models with two intermediate variables mix
// one-source and two-source examples by a fair coin.
std::vector<CounterfactualExample> gen_counterfactuals(
    const CausalModel& high, const std::vector<std::string>& variables,
    const GenConfig& cfg);

// Labeled (input, task label) pairs, balanced across binary labels.
std::vector<LabeledExample> gen_labeled(const CausalModel& high, const GenConfig& cfg);

// Scaling helper: paper-size count scaled by `scale`, at least `floor_count`.
std::size_t scaled_count(std::size_t paper_size, double scale, std::size_t floor_count = 1);

}  // namespace das
