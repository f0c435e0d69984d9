#include "das/align.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>

#include "das/kernels.hpp"
#include "das/rng.hpp"
#include "das/tape.hpp"

namespace das {

namespace k = kernels;

SubspacePartition SubspacePartition::packed(std::size_t total,
                                            std::vector<std::size_t> dims) {
  SubspacePartition p;
  p.total_dim = total;
  p.block_dims = std::move(dims);
  p.validate();
  return p;
}

SubspacePartition SubspacePartition::windows(std::size_t total,
                                             std::vector<std::size_t> dims,
                                             std::vector<std::size_t> starts) {
  SubspacePartition p;
  p.total_dim = total;
  p.block_dims = std::move(dims);
  p.block_starts = std::move(starts);
  p.validate();
  return p;
}

void SubspacePartition::validate() const {
  std::size_t sum = 0;
  for (std::size_t d : block_dims) {
    if (d == 0) fail(Errc::Config, "partition block of dimension 0");
    sum += d;
  }
  if (sum > total_dim) fail(Errc::Config, "partition blocks exceed representation size");
  if (!block_starts.empty()) {
    if (block_starts.size() != block_dims.size())
      fail(Errc::Config, "block_starts/block_dims length mismatch");
    auto r = ranges();
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].second > total_dim) fail(Errc::Config, "partition block out of range");
      for (std::size_t j = i + 1; j < r.size(); ++j)
        if (r[i].first < r[j].second && r[j].first < r[i].second)
          fail(Errc::Config, "partition blocks overlap");
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> SubspacePartition::ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (block_starts.empty()) {
    std::size_t off = 0;
    for (std::size_t d : block_dims) {
      out.push_back({off, off + d});
      off += d;
    }
  } else {
    for (std::size_t i = 0; i < block_dims.size(); ++i)
      out.push_back({block_starts[i], block_starts[i] + block_dims[i]});
  }
  return out;
}

void DistributedAlignment::validate() const {
  partition.validate();
  if (var_map.size() != partition.num_blocks())
    fail(Errc::BlockCountMismatch, "var_map size != number of blocks");
  if (rotation.rows() != partition.total_dim || rotation.cols() != partition.total_dim)
    fail(Errc::ShapeMismatch, "rotation size != representation size");
  if (orthogonality_defect(rotation) >= 1e-6)
    fail(Errc::NotOrthogonal, "rotation is not orthogonal within 1e-6");
}

std::function<Value(const Value&)> make_net_tau_out(const FeedForwardNet& net) {
  const bool pad = net.pad_scalar_logit;
  const std::vector<std::int64_t> cv = net.class_values;
  return [pad, cv](const Value& out) {
    const Vec& o = out.vec();
    std::size_t best = 0;
    if (pad) {
      best = o[0] > 0.0 ? 0 : 1;
    } else {
      for (std::size_t j = 1; j < o.size(); ++j)
        if (o[j] > o[best]) best = j;
    }
    return Value::sym(cv[best]);
  };
}

namespace {

struct Rotator {
  Tensor r;   // [n x n]
  Tensor rt;  // transpose

  explicit Rotator(const Tensor& rotation) : r(rotation), rt(k::transpose(rotation)) {}
  Vec rotate(const Vec& h) const { return k::matmul(Tensor({1, h.size()}, h), rt).vec(); }
  Vec unrotate(const Vec& y) const { return k::matmul(Tensor({1, y.size()}, y), r).vec(); }
};

void check_rotation_target(const CausalModel& model, const std::string& x_var,
                           const Tensor& rotation) {
  const Variable& v = model.var(x_var);
  if (v.kind != VarKind::Intermediate || v.domain.kind != Domain::Kind::Vector)
    fail(Errc::NotAntichain, "'" + x_var + "' is not an intermediate vector variable");
  if (rotation.rows() != rotation.cols() || rotation.rows() != v.domain.dim)
    fail(Errc::ShapeMismatch, "rotation size != dim of '" + x_var + "'");
  if (orthogonality_defect(rotation) >= 1e-6)
    fail(Errc::NotOrthogonal, "rotation is not orthogonal within 1e-6");
}

}  // namespace

CausalModel rotate_model(const CausalModel& model, const std::string& x_var,
                         const Tensor& rotation) {
  check_rotation_target(model, x_var, rotation);
  auto rot = std::make_shared<Rotator>(rotation);

  CausalModel out;
  for (const auto& v : model.variables()) {
    const auto& parents = model.parents(v.id);
    Mechanism mech = v.kind == VarKind::Input ? nullptr : model.mechanism(v.id);
    if (v.id == x_var) {
      Mechanism orig = mech;
      mech = [orig, rot](const std::vector<Value>& args) {
        return Value::vec(rot->rotate(orig(args).vec()));
      };
    } else {
      std::vector<std::size_t> xpos;
      for (std::size_t i = 0; i < parents.size(); ++i)
        if (parents[i] == x_var) xpos.push_back(i);
      if (!xpos.empty()) {
        Mechanism orig = mech;
        mech = [orig, rot, xpos](const std::vector<Value>& args) {
          std::vector<Value> a = args;
          for (std::size_t i : xpos) a[i] = Value::vec(rot->unrotate(a[i].vec()));
          return orig(a);
        };
      }
    }
    out.add_variable(v, parents, std::move(mech));
  }
  out.finish();
  return out;
}

namespace {

// Coordinate ownership: -1 for the residual (base), block index otherwise.
std::vector<int> owner_map(const SubspacePartition& p) {
  std::vector<int> owner(p.total_dim, -1);
  auto rs = p.ranges();
  for (std::size_t b = 0; b < rs.size(); ++b)
    for (std::size_t i = rs[b].first; i < rs[b].second; ++i)
      owner[i] = static_cast<int>(b);
  return owner;
}

}  // namespace

Setting dii(const CausalModel& model, const DistributedAlignment& align,
            const Setting& base, const std::vector<Setting>& sources) {
  align.validate();
  if (sources.size() != align.partition.num_blocks())
    fail(Errc::BlockCountMismatch,
         std::to_string(sources.size()) + " sources for " +
             std::to_string(align.partition.num_blocks()) + " blocks");
  check_rotation_target(model, align.target_var, align.rotation);

  auto rot = std::make_shared<Rotator>(align.rotation);
  const std::vector<int> owner = owner_map(align.partition);

  // Harvest rotated source activations of the target variable.
  auto src_rot = std::make_shared<std::vector<Vec>>();
  for (const auto& s : sources) {
    Setting total = run(model, s);
    src_rot->push_back(rot->rotate(total.get(align.target_var).vec()));
  }

  Mechanism orig = model.mechanism(align.target_var);
  Mechanism soft = [orig, rot, src_rot, owner](const std::vector<Value>& args) {
    Vec y = rot->rotate(orig(args).vec());
    for (std::size_t i = 0; i < y.size(); ++i)
      if (owner[i] >= 0) y[i] = (*src_rot)[static_cast<std::size_t>(owner[i])][i];
    return Value::vec(rot->unrotate(y));
  };

  CausalModel modified = model.with_mechanism(align.target_var, soft);
  Setting total = run(modified, base);
  return get_values(modified, total, modified.output_order());
}

namespace {

// Per-block source ids for an example: the matched source, or the base.
std::vector<const std::vector<std::int64_t>*> block_sources(
    const CounterfactualExample& ex, const std::vector<std::string>& var_map) {
  std::vector<const std::vector<std::int64_t>*> out(var_map.size(), &ex.base);
  for (std::size_t j = 0; j < ex.targets.size(); ++j) {
    for (const auto& hv : ex.targets[j]) {
      auto it = std::find(var_map.begin(), var_map.end(), hv);
      if (it == var_map.end())
        fail(Errc::UnknownVariable, "target '" + hv + "' has no aligned block");
      out[static_cast<std::size_t>(it - var_map.begin())] = &ex.sources[j];
    }
  }
  return out;
}

}  // namespace

double distributed_iia(const CausalModel& low, const CausalModel& high,
                       const DistributedAlignment& align,
                       const std::vector<CounterfactualExample>& dataset) {
  align.validate();
  if (dataset.empty()) return 1.0;
  const std::string out_var = high.output_order().at(0);

  std::int64_t matches = 0;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dataset.size());
#pragma omp parallel for schedule(static) reduction(+ : matches)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const CounterfactualExample& ex = dataset[static_cast<std::size_t>(i)];
    std::vector<Setting> srcs;
    for (const auto* ids : block_sources(ex, align.var_map))
      srcs.push_back(input_from_ids(low, *ids));
    Setting low_out = dii(low, align, input_from_ids(low, ex.base), srcs);
    Value translated = align.tau_out(low_out.get(low.output_order().at(0)));
    const std::int64_t high_id = high_interchange_id(high, ex);
    if (translated ==
        high.var(out_var).domain.values[static_cast<std::size_t>(high_id)])
      ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(dataset.size());
}

namespace {

struct Segment {
  std::size_t start, len;
  int stream;  // -1 base, else block index
};

std::vector<Segment> segment_plan(const SubspacePartition& p) {
  const std::vector<int> owner = owner_map(p);
  std::vector<Segment> segs;
  std::size_t i = 0;
  while (i < p.total_dim) {
    std::size_t j = i;
    while (j < p.total_dim && owner[j] == owner[i]) ++j;
    segs.push_back({i, j - i, owner[i]});
    i = j;
  }
  return segs;
}

struct EvalBatch {
  Tensor hb;                 // base activations at the layer
  std::vector<Tensor> hs;    // per-block source activations
  std::vector<int> labels;   // gold class indices (training only)
};

EvalBatch gather_batch(const FeedForwardNet& net, std::size_t layer,
                       const std::vector<std::string>& var_map,
                       const std::vector<CounterfactualExample>& data,
                       const std::vector<std::size_t>& idx, std::size_t start,
                       std::size_t end, bool with_labels) {
  EvalBatch b;
  std::vector<std::vector<std::int64_t>> base_ids;
  std::vector<std::vector<std::vector<std::int64_t>>> src_ids(var_map.size());
  base_ids.reserve(end - start);
  for (std::size_t i = start; i < end; ++i) {
    const CounterfactualExample& ex = data[idx[i]];
    base_ids.push_back(ex.base);
    auto bs = block_sources(ex, var_map);
    for (std::size_t t = 0; t < var_map.size(); ++t) src_ids[t].push_back(*bs[t]);
    if (with_labels) b.labels.push_back(net.class_index_of(ex.gold));
  }
  b.hb = net.forward_to_layer(net.features(base_ids), layer);
  for (std::size_t t = 0; t < var_map.size(); ++t)
    b.hs.push_back(net.forward_to_layer(net.features(src_ids[t]), layer));
  return b;
}

// Mixed activations: rotate base and sources, swap block coordinates, unrotate.
Tensor mix_activations(const EvalBatch& b, const Tensor& rotation,
                       const std::vector<Segment>& segs) {
  Tensor rt = k::transpose(rotation);
  Tensor yb = k::matmul(b.hb, rt);
  const std::size_t rows = yb.rows(), n = yb.cols();
  Tensor ymix = yb;
  for (const Segment& s : segs) {
    if (s.stream < 0) continue;
    // Only the block's columns of the rotated source are needed.
    Tensor rt_block = Tensor::zeros(n, s.len);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < s.len; ++j) rt_block.at(i, j) = rt.at(i, s.start + j);
    Tensor ys = k::matmul(b.hs[static_cast<std::size_t>(s.stream)], rt_block);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < s.len; ++j) ymix.at(r, s.start + j) = ys.at(r, j);
  }
  return k::matmul(ymix, rotation);
}

}  // namespace

double distributed_iia_net(const FeedForwardNet& net, std::size_t layer,
                           const CausalModel& high, const Tensor& rotation,
                           const SubspacePartition& partition,
                           const std::vector<std::string>& var_map,
                           const std::vector<CounterfactualExample>& dataset,
                           std::size_t batch) {
  partition.validate();
  if (partition.total_dim != net.layer_dim(layer))
    fail(Errc::ShapeMismatch, "partition size != layer width");
  if (dataset.empty()) return 1.0;
  const std::string out_var = high.output_order().at(0);
  const auto segs = segment_plan(partition);

  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  std::int64_t matches = 0;
  for (std::size_t start = 0; start < dataset.size(); start += batch) {
    const std::size_t end = std::min(dataset.size(), start + batch);
    EvalBatch b = gather_batch(net, layer, var_map, dataset, idx, start, end, false);
    Tensor hmix = mix_activations(b, rotation, segs);
    Tensor out = net.forward_from_layer(hmix, layer);
    std::vector<int> pred = net.predict(out);

    std::int64_t batch_matches = 0;
    const std::ptrdiff_t bn = static_cast<std::ptrdiff_t>(end - start);
#pragma omp parallel for schedule(static) reduction(+ : batch_matches)
    for (std::ptrdiff_t i = 0; i < bn; ++i) {
      const CounterfactualExample& ex = dataset[start + static_cast<std::size_t>(i)];
      const std::int64_t high_id = high_interchange_id(high, ex);
      if (net.class_values[static_cast<std::size_t>(pred[static_cast<std::size_t>(i)])] ==
          high.var(out_var).domain.values[static_cast<std::size_t>(high_id)].sym())
        ++batch_matches;
    }
    matches += batch_matches;
  }
  return static_cast<double>(matches) / static_cast<double>(dataset.size());
}

namespace {

Tensor effective_rotation(const OrthogonalParam& param, const DasTrainConfig& cfg) {
  Tensor r = param.materialize();
  if (!cfg.outer_rotation) return r;
  const std::size_t n = cfg.outer_rotation->rows();
  Tensor full = Tensor::identity(n);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j)
      full.at(cfg.inner_offset + i, cfg.inner_offset + j) = r.at(i, j);
  return k::matmul(full, *cfg.outer_rotation);
}

}  // namespace

DistributedAlignment DasResult::alignment(const FeedForwardNet& net, std::size_t layer,
                                          const SubspacePartition& partition,
                                          const std::vector<std::string>& var_map) const {
  DistributedAlignment a;
  a.target_var = "h" + std::to_string(layer);
  a.rotation = rotation;
  a.partition = partition;
  a.var_map = var_map;
  a.tau_out = make_net_tau_out(net);
  return a;
}

void audit_gold_labels(const CausalModel& high,
                       const std::vector<CounterfactualExample>& dataset) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dataset.size());
  std::atomic<bool> ok{true};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!ok.load(std::memory_order_relaxed)) continue;
    if (high_interchange_id(high, dataset[static_cast<std::size_t>(i)]) !=
        dataset[static_cast<std::size_t>(i)].gold)
      ok.store(false, std::memory_order_relaxed);
  }
  if (!ok.load())
    fail(Errc::DomainError, "gold label audit failed: stored gold != recomputation");
}

DasResult das_train(const FeedForwardNet& net, const CausalModel& high,
                    const DasTrainConfig& cfg,
                    const std::vector<CounterfactualExample>& train,
                    const std::vector<CounterfactualExample>& eval) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.sgd.validate();
  cfg.partition.validate();
  if (cfg.partition.total_dim != net.layer_dim(cfg.layer))
    fail(Errc::ShapeMismatch, "partition size != layer width");
  if (cfg.var_map.size() != cfg.partition.num_blocks())
    fail(Errc::BlockCountMismatch, "var_map size != number of blocks");
  if (train.empty()) fail(Errc::Config, "empty DAS training set");
  audit_gold_labels(high, train);
  audit_gold_labels(high, eval);

  const std::size_t n = cfg.partition.total_dim;
  const std::size_t pdim = cfg.inner_dim > 0 ? cfg.inner_dim : n;
  if (cfg.outer_rotation) {
    if (cfg.inner_dim == 0 || cfg.inner_offset + cfg.inner_dim > n)
      fail(Errc::Config, "inner rotation does not fit the representation");
  }

  DasResult res;
  res.param = OrthogonalParam::init_near_identity(pdim, cfg.sgd.seed);
  Tensor velocity;
  const auto segs = segment_plan(cfg.partition);

  Rng rng(cfg.sgd.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto evaluate = [&]() {
    Tensor r = effective_rotation(res.param, cfg);
    return distributed_iia_net(net, cfg.layer, high, r, cfg.partition, cfg.var_map,
                               eval, cfg.eval_batch);
  };

  double best = evaluate();
  res.iia_curve.push_back(best);
  std::size_t best_step = 0;
  bool stop = false;

  for (std::size_t epoch = 0; epoch < cfg.sgd.max_epochs && !stop; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    for (std::size_t start = 0; start < train.size() && !stop; start += cfg.sgd.batch_size) {
      const std::size_t end = std::min(train.size(), start + cfg.sgd.batch_size);
      EvalBatch b = gather_batch(net, cfg.layer, cfg.var_map, train, order, start, end, true);

      Tape tape;
      int p = tape.leaf(res.param.skew, true);
      int r = cayley_node(tape, p);
      if (cfg.outer_rotation) {
        r = tape.matmul(tape.embed_block(r, n, cfg.inner_offset),
                        tape.constant(*cfg.outer_rotation));
      }
      int rt = tape.transpose(r);
      int yb = tape.matmul(tape.constant(b.hb), rt);

      int ymix = -1;
      for (const Segment& s : segs) {
        int seg;
        if (s.stream < 0) {
          seg = tape.slice_cols(yb, s.start, s.start + s.len);
        } else {
          int rt_block = tape.slice_cols(rt, s.start, s.start + s.len);
          seg = tape.matmul(tape.constant(b.hs[static_cast<std::size_t>(s.stream)]), rt_block);
        }
        ymix = ymix < 0 ? seg : tape.concat_cols(ymix, seg);
      }
      int h = tape.matmul(ymix, r);

      for (std::size_t l = cfg.layer; l < net.layers.size(); ++l) {
        h = tape.add_rowvec(tape.matmul(h, tape.constant(net.layers[l].W)),
                            tape.constant(net.layers[l].b));
        if (net.layers[l].relu) h = tape.relu(h);
      }
      int out = tape.add_rowvec(tape.matmul(h, tape.constant(net.head.W)),
                                tape.constant(net.head.b));
      int logits = net.pad_scalar_logit
                       ? tape.matmul(out, tape.constant(Tensor({1, 2}, {1.0, 0.0})))
                       : out;
      int loss = tape.softmax_xent(logits, b.labels);
      if (!std::isfinite(tape.value(loss)[0]))
        fail(Errc::DivergedLoss, "DAS loss is not finite");

      tape.backward(loss);
      sgd_step(res.param.skew, tape.grad(p), cfg.sgd, &velocity);
      ++res.steps;
      if (cfg.max_steps > 0 && res.steps >= cfg.max_steps) stop = true;
    }

    const double iia_now = evaluate();
    res.iia_curve.push_back(iia_now);
    if (iia_now > best) {
      best = iia_now;
      best_step = res.steps;
    }
    if (cfg.stop_at_perfect && iia_now >= 1.0) break;
    if (cfg.sgd.early_stop_patience &&
        res.steps - best_step >= *cfg.sgd.early_stop_patience)
      break;
  }

  res.rotation = effective_rotation(res.param, cfg);
  res.final_iia = res.iia_curve.back();
  res.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

DasResult subspace_das(const FeedForwardNet& net, const CausalModel& high_sub,
                       std::size_t layer, const Tensor& outer_rotation,
                       const SubspacePartition& outer_partition,
                       std::size_t parent_block,
                       std::vector<std::size_t> inner_block_dims,
                       std::vector<std::string> inner_var_map, const SgdConfig& sgd,
                       const std::vector<CounterfactualExample>& train,
                       const std::vector<CounterfactualExample>& eval) {
  const auto parent_ranges = outer_partition.ranges();
  if (parent_block >= parent_ranges.size())
    fail(Errc::OutOfRange, "parent block index out of range");
  const auto [plo, phi] = parent_ranges[parent_block];
  const std::size_t parent_len = phi - plo;

  if (inner_block_dims.empty()) {
    if (parent_len / 2 == 0)
      fail(Errc::BlockTooSmall, "parent block too small to halve");
    inner_block_dims.assign(inner_var_map.size(), parent_len / 2);
  }
  std::size_t inner_sum = 0;
  for (std::size_t d : inner_block_dims) inner_sum += d;
  if (inner_sum > parent_len)
    fail(Errc::BlockTooSmall, "inner blocks exceed the parent block");

  std::vector<std::size_t> starts;
  std::size_t off = plo;
  for (std::size_t d : inner_block_dims) {
    starts.push_back(off);
    off += d;
  }

  DasTrainConfig cfg;
  cfg.layer = layer;
  cfg.partition = SubspacePartition::windows(outer_partition.total_dim,
                                             std::move(inner_block_dims), std::move(starts));
  cfg.var_map = std::move(inner_var_map);
  cfg.sgd = sgd;
  cfg.outer_rotation = outer_rotation;
  cfg.inner_offset = plo;
  cfg.inner_dim = parent_len;
  return das_train(net, high_sub, cfg, train, eval);
}

}  // namespace das
