#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "das/causal.hpp"
#include "das/mlp.hpp"
#include "das/ortho.hpp"
#include "das/tensor.hpp"

namespace das {

// Orthogonal decomposition of a rotated representation: block j serves the
// j-th aligned high-level variable, everything outside the blocks is the
// residual Y0 kept from the base.
struct SubspacePartition {
  std::size_t total_dim = 0;
  std::vector<std::size_t> block_dims;
  std::vector<std::size_t> block_starts;  // empty = packed from index 0

  static SubspacePartition packed(std::size_t total, std::vector<std::size_t> dims);
  static SubspacePartition windows(std::size_t total, std::vector<std::size_t> dims,
                                   std::vector<std::size_t> starts);

  void validate() const;  // dims fit, blocks disjoint
  std::vector<std::pair<std::size_t, std::size_t>> ranges() const;
  std::size_t num_blocks() const { return block_dims.size(); }
};

struct DistributedAlignment {
  std::string target_var;  // low-level layer variable (antichain)
  Tensor rotation;         // [n x n] orthogonal
  SubspacePartition partition;
  std::vector<std::string> var_map;  // high-level variable per block
  std::function<Value(const Value&)> tau_out;  // low output value -> high output value

  void validate() const;
};

// tau_out for a net-backed low-level model: thresholded/argmaxed head output
// mapped through class_values. Captures only the flags it needs.
std::function<Value(const Value&)> make_net_tau_out(const FeedForwardNet& net);

// New model identical to `model` except X's mechanism output is rotated and
// every child of X unrotates its X argument. Behavior (input->output) is
// unchanged for orthogonal R.
CausalModel rotate_model(const CausalModel& model, const std::string& x_var,
                         const Tensor& rotation);

// Distributed interchange intervention: soft intervention replacing the
// target variable's mechanism so the rotated base activation keeps its Y0
// component and takes each block from the rotated source-run activation.
// `sources` is parallel to the partition blocks (pass the base input to keep
// a block from the base).
Setting dii(const CausalModel& model, const DistributedAlignment& align,
            const Setting& base, const std::vector<Setting>& sources);

// As iia(), with the low-level side using dii. Recomputes the high-level
// interchange output per example; order-independent count, parallel-safe.
double distributed_iia(const CausalModel& low, const CausalModel& high,
                       const DistributedAlignment& align,
                       const std::vector<CounterfactualExample>& dataset);

// Batched fast path on the net itself; agrees with the generic route.
double distributed_iia_net(const FeedForwardNet& net, std::size_t layer,
                           const CausalModel& high, const Tensor& rotation,
                           const SubspacePartition& partition,
                           const std::vector<std::string>& var_map,
                           const std::vector<CounterfactualExample>& dataset,
                           std::size_t batch = 2048);

struct DasTrainConfig {
  std::size_t layer = 1;
  SubspacePartition partition;
  std::vector<std::string> var_map;
  SgdConfig sgd;

  // Subspace mode: freeze `outer_rotation` and train an inner rotation of
  // dimension `inner_dim` acting on rotated coordinates starting at
  // `inner_offset`. inner_dim = 0 trains the full rotation.
  std::optional<Tensor> outer_rotation;
  std::size_t inner_offset = 0;
  std::size_t inner_dim = 0;

  std::size_t eval_batch = 2048;
  bool stop_at_perfect = true;
  std::size_t max_steps = 0;  // 0 = no cap
};

struct DasResult {
  OrthogonalParam param;        // the trainable parameters (full or inner)
  Tensor rotation;              // effective full rotation
  std::vector<double> iia_curve;  // eval IIA per epoch
  double final_iia = 0.0;
  std::size_t steps = 0;
  double seconds = 0.0;

  DistributedAlignment alignment(const FeedForwardNet& net, std::size_t layer,
                                 const SubspacePartition& partition,
                                 const std::vector<std::string>& var_map) const;
};

// Learns the rotation by SGD on the distributed-intervention cross-entropy
// objective; net and high-level model stay frozen.
DasResult das_train(const FeedForwardNet& net, const CausalModel& high,
                    const DasTrainConfig& cfg,
                    const std::vector<CounterfactualExample>& train,
                    const std::vector<CounterfactualExample>& eval);

// Trains a second rotation inside one frozen block of a learned alignment.
// inner_block_dims default to half the parent block when empty.
DasResult subspace_das(const FeedForwardNet& net, const CausalModel& high_sub,
                       std::size_t layer, const Tensor& outer_rotation,
                       const SubspacePartition& outer_partition,
                       std::size_t parent_block,
                       std::vector<std::size_t> inner_block_dims,
                       std::vector<std::string> inner_var_map, const SgdConfig& sgd,
                       const std::vector<CounterfactualExample>& train,
                       const std::vector<CounterfactualExample>& eval);

// Load-time audit: every example's gold must equal the high-level
// recomputation and its targets must be aligned variables.
void audit_gold_labels(const CausalModel& high,
                       const std::vector<CounterfactualExample>& dataset);

}  // namespace das
