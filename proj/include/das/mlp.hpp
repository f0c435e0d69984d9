#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "das/causal.hpp"
#include "das/ortho.hpp"
#include "das/tensor.hpp"

namespace das {

struct MlpSpec {
  std::size_t input_vector_dim = 4;  // per-object embedding size
  std::size_t num_objects = 4;
  std::size_t hidden_dim = 16;
  std::size_t num_layers = 3;
  std::size_t num_classes = 2;

  void validate() const;
  std::size_t feature_dim() const { return input_vector_dim * num_objects; }
};

struct Layer {
  Tensor W;
  Tensor b;  // [1 x out]
  bool relu = true;
};

// Feed-forward net over symbolic object ids: ids index an embedding table,
// the concatenated rows feed a stack of (optionally ReLU) affine layers, the
// head emits logits. Covers both trainable MLPs and the fixed conjunction
// network (whose "logits" are (O, 0)).
struct FeedForwardNet {
  Tensor embeddings;  // [vocab x n]
  bool embeddings_trainable = false;
  std::size_t num_objects = 0;
  std::vector<Layer> layers;
  Layer head;  // relu = false
  bool pad_scalar_logit = false;
  std::vector<std::int64_t> class_values;  // class index -> output-domain id

  std::size_t vocab() const { return embeddings.rows(); }
  std::size_t obj_dim() const { return embeddings.cols(); }
  std::size_t feature_dim() const { return num_objects * obj_dim(); }
  std::size_t layer_dim(std::size_t layer) const;  // 1-based
  std::size_t num_classes() const { return class_values.size(); }

  Tensor features(const std::vector<std::vector<std::int64_t>>& ids) const;
  // Activations after hidden layer `layer` (1-based).
  Tensor forward_to_layer(const Tensor& feats, std::size_t layer) const;
  // Continue from the activations of `layer` through the head (pre-pad).
  Tensor forward_from_layer(const Tensor& act, std::size_t layer) const;
  Tensor head_output(const Tensor& feats) const;
  Tensor logits(const Tensor& head_out) const;  // applies scalar padding
  // Predicted class index per row of a head output.
  std::vector<int> predict(const Tensor& head_out) const;
  // Logit column for an output-domain id (inverse of class_values).
  int class_index_of(std::int64_t output_id) const;
};

// The fixed linear network solving boolean conjunction.
FeedForwardNet conjunction_net();

// Randomly initialized MLP over `vocab` object ids (Kaiming-uniform weights,
// zero biases). Embedding rows are unit-norm random vectors.
FeedForwardNet make_mlp(const MlpSpec& spec, std::size_t vocab, std::uint64_t seed,
                        bool embeddings_trainable);

// Frozen random network (never trained).
FeedForwardNet random_network(const MlpSpec& spec, std::size_t vocab, std::uint64_t seed);

struct VarNames {
  std::vector<std::string> inputs;       // empty -> x1..xk
  std::vector<std::string> layer_names;  // empty -> h1..hk
  std::string output = "out";
};

// Wraps the net as a causal model: inputs are symbolic ids, each layer's
// activation vector is one intermediate vector variable, the output variable
// holds the raw head output. The wrapper calls the same kernels as the
// batched forward, so values agree bit-for-bit.
CausalModel as_causal_model(std::shared_ptr<const FeedForwardNet> net,
                            const VarNames& names = {});

struct LabeledExample {
  std::vector<std::int64_t> inputs;
  std::int64_t label = 0;
};

double accuracy(const FeedForwardNet& net, const std::vector<LabeledExample>& data,
                std::size_t batch = 4096);

struct TaskTrainResult {
  FeedForwardNet net;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::vector<double> epoch_losses;
};

// Trains weights/biases (and embeddings when marked trainable) with
// softmax cross-entropy. Throws Errc::DivergedLoss on NaN.
TaskTrainResult train_task_model(FeedForwardNet net,
                                 const std::vector<LabeledExample>& train,
                                 const std::vector<LabeledExample>& test,
                                 const SgdConfig& cfg);

}  // namespace das
