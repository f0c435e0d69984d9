#include "das/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "das/kernels.hpp"
#include "das/rng.hpp"
#include "das/tape.hpp"

namespace das {

namespace k = kernels;

void MlpSpec::validate() const {
  if (input_vector_dim < 1 || num_objects < 1 || hidden_dim < 1 || num_layers < 1 ||
      num_classes < 1)
    fail(Errc::Config, "MlpSpec fields must all be >= 1");
}

std::size_t FeedForwardNet::layer_dim(std::size_t layer) const {
  if (layer < 1 || layer > layers.size()) fail(Errc::OutOfRange, "bad layer index");
  return layers[layer - 1].W.cols();
}

Tensor FeedForwardNet::features(const std::vector<std::vector<std::int64_t>>& ids) const {
  const std::size_t n = obj_dim(), f = feature_dim();
  Tensor out = Tensor::zeros(ids.size(), f);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r].size() != num_objects)
      fail(Errc::DomainError, "expected " + std::to_string(num_objects) + " input ids");
    for (std::size_t s = 0; s < num_objects; ++s) {
      const auto id = ids[r][s];
      if (id < 0 || static_cast<std::size_t>(id) >= vocab())
        fail(Errc::OutOfRange, "object id " + std::to_string(id));
      for (std::size_t j = 0; j < n; ++j)
        out.at(r, s * n + j) = embeddings.at(static_cast<std::size_t>(id), j);
    }
  }
  return out;
}

namespace {
Tensor apply_layer(const Tensor& x, const Layer& l) {
  Tensor z = k::add_rowvec(k::matmul(x, l.W), l.b);
  return l.relu ? k::relu(z) : z;
}
}  // namespace

Tensor FeedForwardNet::forward_to_layer(const Tensor& feats, std::size_t layer) const {
  if (layer < 1 || layer > layers.size()) fail(Errc::OutOfRange, "bad layer index");
  Tensor h = feats;
  for (std::size_t l = 0; l < layer; ++l) h = apply_layer(h, layers[l]);
  return h;
}

Tensor FeedForwardNet::forward_from_layer(const Tensor& act, std::size_t layer) const {
  Tensor h = act;
  for (std::size_t l = layer; l < layers.size(); ++l) h = apply_layer(h, layers[l]);
  return apply_layer(h, head);
}

Tensor FeedForwardNet::head_output(const Tensor& feats) const {
  return forward_from_layer(forward_to_layer(feats, layers.size()), layers.size());
}

Tensor FeedForwardNet::logits(const Tensor& head_out) const {
  if (!pad_scalar_logit) return head_out;
  Tensor out = Tensor::zeros(head_out.rows(), 2);
  for (std::size_t i = 0; i < head_out.rows(); ++i) out.at(i, 0) = head_out.at(i, 0);
  return out;
}

std::vector<int> FeedForwardNet::predict(const Tensor& head_out) const {
  if (pad_scalar_logit) {
    std::vector<int> out(head_out.rows());
    for (std::size_t i = 0; i < head_out.rows(); ++i)
      out[i] = head_out.at(i, 0) > 0.0 ? 0 : 1;
    return out;
  }
  return k::argmax_rows(head_out);
}

int FeedForwardNet::class_index_of(std::int64_t output_id) const {
  for (std::size_t c = 0; c < class_values.size(); ++c)
    if (class_values[c] == output_id) return static_cast<int>(c);
  fail(Errc::OutOfRange, "no class for output id " + std::to_string(output_id));
}

FeedForwardNet conjunction_net() {
  const double rad = 20.0 * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  FeedForwardNet net;
  net.embeddings = Tensor({2, 1}, {0.0, 1.0});
  net.num_objects = 2;
  // h = [x1, x2] * [[cos20, sin20], [-sin20, cos20]]  (columns are W1, W2)
  net.layers.push_back({Tensor({2, 2}, {c, s, -s, c}), Tensor::zeros(1, 2), false});
  net.head = {Tensor({2, 1}, {1.0, 1.0}), Tensor({1, 1}, {-1.8}), false};
  net.pad_scalar_logit = true;
  net.class_values = {1, 0};  // logit columns (O, 0) correspond to (T, F)
  return net;
}

FeedForwardNet make_mlp(const MlpSpec& spec, std::size_t vocab, std::uint64_t seed,
                        bool embeddings_trainable) {
  spec.validate();
  Rng rng(seed);
  FeedForwardNet net;
  net.num_objects = spec.num_objects;
  net.embeddings_trainable = embeddings_trainable;
  net.embeddings = Tensor::zeros(vocab, spec.input_vector_dim);
  for (std::size_t i = 0; i < vocab; ++i) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < spec.input_vector_dim; ++j) {
      const double v = rng.normal();
      net.embeddings.at(i, j) = v;
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
    for (std::size_t j = 0; j < spec.input_vector_dim; ++j) net.embeddings.at(i, j) *= inv;
  }

  auto init_layer = [&](std::size_t in, std::size_t out, bool relu) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    Tensor w = Tensor::zeros(in, out);
    for (std::size_t i = 0; i < in * out; ++i) w[i] = rng.uniform(-bound, bound);
    return Layer{std::move(w), Tensor::zeros(1, out), relu};
  };

  std::size_t in = spec.feature_dim();
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    net.layers.push_back(init_layer(in, spec.hidden_dim, true));
    in = spec.hidden_dim;
  }
  net.head = init_layer(in, spec.num_classes, false);
  net.class_values.resize(spec.num_classes);
  std::iota(net.class_values.begin(), net.class_values.end(), std::int64_t{0});
  return net;
}

FeedForwardNet random_network(const MlpSpec& spec, std::size_t vocab, std::uint64_t seed) {
  return make_mlp(spec, vocab, seed, false);
}

CausalModel as_causal_model(std::shared_ptr<const FeedForwardNet> net,
                            const VarNames& names) {
  CausalModel m;
  std::vector<std::string> input_ids = names.inputs;
  if (input_ids.empty())
    for (std::size_t i = 0; i < net->num_objects; ++i)
      input_ids.push_back("x" + std::to_string(i + 1));
  if (input_ids.size() != net->num_objects)
    fail(Errc::Config, "as_causal_model: input name count mismatch");

  for (const auto& id : input_ids)
    m.add_variable({id, VarKind::Input,
                    Domain::symbols_upto(static_cast<std::int64_t>(net->vocab()))},
                   {}, nullptr);

  std::vector<std::string> layer_ids = names.layer_names;
  if (layer_ids.empty())
    for (std::size_t l = 1; l <= net->layers.size(); ++l)
      layer_ids.push_back("h" + std::to_string(l));
  if (layer_ids.size() != net->layers.size())
    fail(Errc::Config, "as_causal_model: layer name count mismatch");

  std::string prev;
  for (std::size_t l = 1; l <= net->layers.size(); ++l) {
    const std::string& name = layer_ids[l - 1];
    Mechanism mech;
    if (l == 1) {
      mech = [net](const std::vector<Value>& args) {
        std::vector<std::int64_t> ids;
        ids.reserve(args.size());
        for (const auto& a : args) ids.push_back(a.sym());
        Tensor h = net->forward_to_layer(net->features({ids}), 1);
        return Value::vec(h.vec());
      };
      m.add_variable({name, VarKind::Intermediate, Domain::vector(net->layer_dim(1))},
                     input_ids, std::move(mech));
    } else {
      const std::size_t li = l;
      mech = [net, li](const std::vector<Value>& args) {
        Tensor h({1, args[0].vec().size()}, args[0].vec());
        Tensor z = k::add_rowvec(k::matmul(h, net->layers[li - 1].W), net->layers[li - 1].b);
        if (net->layers[li - 1].relu) z = k::relu(z);
        return Value::vec(z.vec());
      };
      m.add_variable({name, VarKind::Intermediate, Domain::vector(net->layer_dim(l))},
                     {prev}, std::move(mech));
    }
    prev = name;
  }

  Mechanism out_mech = [net](const std::vector<Value>& args) {
    Tensor h({1, args[0].vec().size()}, args[0].vec());
    Tensor o = k::add_rowvec(k::matmul(h, net->head.W), net->head.b);
    return Value::vec(o.vec());
  };
  m.add_variable({names.output, VarKind::Output, Domain::vector(net->head.W.cols())},
                 {prev}, std::move(out_mech));
  m.finish();
  return m;
}

double accuracy(const FeedForwardNet& net, const std::vector<LabeledExample>& data,
                std::size_t batch) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    std::vector<std::vector<std::int64_t>> ids;
    ids.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) ids.push_back(data[i].inputs);
    Tensor out = net.head_output(net.features(ids));
    std::vector<int> pred = net.predict(out);
    for (std::size_t i = start; i < end; ++i)
      if (net.class_values[static_cast<std::size_t>(pred[i - start])] == data[i].label)
        ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TaskTrainResult train_task_model(FeedForwardNet net,
                                 const std::vector<LabeledExample>& train,
                                 const std::vector<LabeledExample>& test,
                                 const SgdConfig& cfg) {
  cfg.validate();
  if (train.empty()) fail(Errc::Config, "empty training set");
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t L = net.layers.size();
  std::vector<Tensor> vel_w(L + 1), vel_b(L + 1);
  Tensor vel_emb;

  TaskTrainResult res;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates with the deterministic rng.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train.size(), start + cfg.batch_size);
      const std::size_t bs = end - start;

      Tape tape;
      int x;
      int emb_node = -1;
      if (net.embeddings_trainable) {
        emb_node = tape.leaf(net.embeddings, true);
        // One-hot per object slot; concatenated embedding lookups.
        int concat = -1;
        for (std::size_t s = 0; s < net.num_objects; ++s) {
          Tensor onehot = Tensor::zeros(bs, net.vocab());
          for (std::size_t i = 0; i < bs; ++i)
            onehot.at(i, static_cast<std::size_t>(train[order[start + i]].inputs[s])) = 1.0;
          int slot = tape.matmul(tape.constant(std::move(onehot)), emb_node);
          concat = (concat < 0) ? slot : tape.concat_cols(concat, slot);
        }
        x = concat;
      } else {
        std::vector<std::vector<std::int64_t>> ids;
        ids.reserve(bs);
        for (std::size_t i = start; i < end; ++i) ids.push_back(train[order[i]].inputs);
        x = tape.constant(net.features(ids));
      }

      std::vector<int> wn(L + 1), bn(L + 1);
      int h = x;
      for (std::size_t l = 0; l < L; ++l) {
        wn[l] = tape.leaf(net.layers[l].W, true);
        bn[l] = tape.leaf(net.layers[l].b, true);
        h = tape.add_rowvec(tape.matmul(h, wn[l]), bn[l]);
        if (net.layers[l].relu) h = tape.relu(h);
      }
      wn[L] = tape.leaf(net.head.W, true);
      bn[L] = tape.leaf(net.head.b, true);
      int logits = tape.add_rowvec(tape.matmul(h, wn[L]), bn[L]);

      std::vector<int> labels(bs);
      for (std::size_t i = 0; i < bs; ++i)
        labels[i] = net.class_index_of(train[order[start + i]].label);
      int loss = tape.softmax_xent(logits, labels);

      const double lv = tape.value(loss)[0];
      if (!std::isfinite(lv)) fail(Errc::DivergedLoss, "task loss is not finite");
      epoch_loss += lv;
      ++batches;

      tape.backward(loss);
      for (std::size_t l = 0; l <= L; ++l) {
        Layer& layer = l < L ? net.layers[l] : net.head;
        if (tape.has_grad(wn[l])) sgd_step(layer.W, tape.grad(wn[l]), cfg, &vel_w[l]);
        if (tape.has_grad(bn[l])) sgd_step(layer.b, tape.grad(bn[l]), cfg, &vel_b[l]);
      }
      if (emb_node >= 0 && tape.has_grad(emb_node))
        sgd_step(net.embeddings, tape.grad(emb_node), cfg, &vel_emb);
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(batches, 1)));
  }

  res.train_acc = accuracy(net, train);
  res.test_acc = test.empty() ? 0.0 : accuracy(net, test);
  res.net = std::move(net);
  return res;
}

}  // namespace das
