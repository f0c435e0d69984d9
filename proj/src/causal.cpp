#include "das/causal.hpp"

#include <algorithm>
#include <set>

namespace das {

const char* var_kind_name(VarKind k) {
  switch (k) {
    case VarKind::Input: return "input";
    case VarKind::Intermediate: return "intermediate";
    case VarKind::Output: return "output";
  }
  return "?";
}

Domain Domain::finite(std::vector<Value> vals) {
  if (vals.empty()) fail(Errc::DomainError, "finite domain must enumerate >= 1 values");
  Domain d;
  d.kind = Kind::Finite;
  d.values = std::move(vals);
  return d;
}

Domain Domain::symbols_upto(std::int64_t n) {
  std::vector<Value> v;
  v.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) v.push_back(Value::sym(i));
  return finite(std::move(v));
}

Domain Domain::vector(std::size_t dim) {
  if (dim < 1) fail(Errc::DomainError, "vector domain needs dimension >= 1");
  Domain d;
  d.kind = Kind::Vector;
  d.dim = dim;
  return d;
}

bool Domain::contains(const Value& v, double tol) const {
  if (kind == Kind::Vector) return v.is_vec() && v.vec().size() == dim;
  for (const Value& c : values)
    if (c.equals(v, tol)) return true;
  return false;
}

std::size_t Domain::value_dim() const { return kind == Kind::Vector ? dim : 1; }

const Value& Setting::get(const std::string& var) const {
  auto it = m_.find(var);
  if (it == m_.end()) fail(Errc::UnknownVariable, "setting has no value for '" + var + "'");
  return it->second;
}

bool VarSlice::overlaps(const VarSlice& o) const {
  if (var != o.var) return false;
  if (!range || !o.range) return true;  // whole variable overlaps any slice
  return range->first < o.range->second && o.range->first < range->second;
}

void CausalModel::add_variable(Variable var, std::vector<std::string> parents,
                               Mechanism mech) {
  if (finished_) fail(Errc::Config, "model already finished");
  if (index_.count(var.id)) fail(Errc::Config, "duplicate variable '" + var.id + "'");
  for (const auto& p : parents)
    if (!index_.count(p))
      fail(Errc::Config, "parent '" + p + "' of '" + var.id + "' not declared before child");
  index_[var.id] = vars_.size();
  parents_.push_back(std::move(parents));
  mech_.push_back(std::move(mech));
  vars_.push_back(std::move(var));
}

void CausalModel::finish() {
  std::set<std::string> with_children;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const Variable& v = vars_[i];
    const auto& ps = parents_[i];
    switch (v.kind) {
      case VarKind::Input:
        if (!ps.empty()) fail(Errc::Config, "input '" + v.id + "' has parents");
        if (mech_[i]) fail(Errc::Config, "input '" + v.id + "' has a mechanism");
        inputs_.push_back(v.id);
        break;
      case VarKind::Intermediate:
      case VarKind::Output:
        if (!mech_[i]) fail(Errc::Config, "non-input '" + v.id + "' lacks a mechanism");
        if (v.kind == VarKind::Output) outputs_.push_back(v.id);
        topo_.push_back(v.id);
        break;
    }
    for (const auto& p : ps) with_children.insert(p);
  }
  for (const auto& o : outputs_)
    if (with_children.count(o)) fail(Errc::Config, "output '" + o + "' has children");
  // Declaration order is parents-first by construction, so it is already a
  // topological order.
  finished_ = true;
}

const Variable& CausalModel::var(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::UnknownVariable, "no variable '" + id + "'");
  return vars_[it->second];
}

const std::vector<std::string>& CausalModel::parents(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::UnknownVariable, "no variable '" + id + "'");
  return parents_[it->second];
}

const Mechanism& CausalModel::mechanism(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::UnknownVariable, "no variable '" + id + "'");
  return mech_[it->second];
}

bool CausalModel::is_total(const Setting& s) const {
  for (const auto& v : vars_)
    if (!s.has(v.id)) return false;
  return true;
}

CausalModel CausalModel::with_mechanism(const std::string& id, Mechanism mech) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::UnknownVariable, "no variable '" + id + "'");
  if (vars_[it->second].kind == VarKind::Input)
    fail(Errc::InterventionOnInput, "inputs have no mechanism to replace");
  CausalModel m = *this;
  m.mech_[it->second] = std::move(mech);
  return m;
}

namespace {

void check_input(const CausalModel& model, const Setting& input) {
  for (const auto& id : model.input_order()) {
    if (!input.has(id)) fail(Errc::MissingInput, "input '" + id + "' unassigned");
    if (!model.var(id).domain.contains(input.get(id)))
      fail(Errc::DomainError, "input '" + id + "' value out of domain");
  }
}

// Per-variable overwrite plan from an intervention.
struct Overwrite {
  bool whole = false;
  Value whole_value;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, Value>> slices;
};

std::map<std::string, Overwrite> plan_intervention(const CausalModel& model,
                                                   const Intervention& iv) {
  std::map<std::string, Overwrite> plan;
  for (const auto& e : iv.entries) {
    const Variable& v = model.var(e.slice.var);
    if (v.kind == VarKind::Input)
      fail(Errc::InterventionOnInput, "cannot intervene on input '" + v.id + "'");
    Overwrite& ow = plan[v.id];
    if (!e.slice.range) {
      if (!v.domain.contains(e.value, 0.0) && v.domain.kind == Domain::Kind::Vector)
        fail(Errc::DomainError, "intervention value dim mismatch on '" + v.id + "'");
      ow.whole = true;
      ow.whole_value = e.value;
    } else {
      auto [lo, hi] = *e.slice.range;
      if (v.domain.kind != Domain::Kind::Vector || hi > v.domain.dim || lo >= hi)
        fail(Errc::DomainError, "bad component range on '" + v.id + "'");
      if (!e.value.is_vec() || e.value.vec().size() != hi - lo)
        fail(Errc::DomainError, "slice value dim mismatch on '" + v.id + "'");
      ow.slices.push_back({{lo, hi}, e.value});
    }
  }
  return plan;
}

Setting run_impl(const CausalModel& model, const Setting& input,
                 const std::map<std::string, Overwrite>* plan) {
  check_input(model, input);
  Setting total;
  for (const auto& id : model.input_order()) total.set(id, input.get(id));
  for (const auto& id : model.topo_order()) {
    const Variable& v = model.var(id);
    const Overwrite* ow = nullptr;
    if (plan) {
      auto it = plan->find(id);
      if (it != plan->end()) ow = &it->second;
    }
    Value val;
    if (ow && ow->whole) {
      val = ow->whole_value;
    } else {
      std::vector<Value> args;
      const auto& ps = model.parents(id);
      args.reserve(ps.size());
      for (const auto& p : ps) args.push_back(total.get(p));
      val = model.mechanism(id)(args);
      if (ow) {
        Vec data = val.vec();
        for (const auto& [rng, sv] : ow->slices) {
          const Vec& src = sv.vec();
          for (std::size_t i = 0; i < src.size(); ++i) data[rng.first + i] = src[i];
        }
        val = Value::vec(std::move(data));
      }
    }
    if (!v.domain.contains(val, 0.0) && v.domain.kind == Domain::Kind::Vector)
      fail(Errc::DomainError, "mechanism of '" + id + "' returned wrong dimension");
    if (v.domain.kind == Domain::Kind::Finite && !v.domain.contains(val, 0.0))
      fail(Errc::DomainError, "mechanism of '" + id + "' returned out-of-domain value");
    total.set(id, std::move(val));
  }
  return total;
}

}  // namespace

Setting run(const CausalModel& model, const Setting& input) {
  return run_impl(model, input, nullptr);
}

Setting run_intervened(const CausalModel& model, const Setting& input,
                       const Intervention& iv) {
  if (iv.empty()) return run_impl(model, input, nullptr);
  auto plan = plan_intervention(model, iv);
  return run_impl(model, input, &plan);
}

Setting get_values(const CausalModel& model, const Setting& total,
                   const std::vector<std::string>& vars) {
  Setting out;
  for (const auto& id : vars) {
    if (!model.has_var(id)) fail(Errc::UnknownVariable, "no variable '" + id + "'");
    out.set(id, total.get(id));
  }
  return out;
}

Value slice_value(const Setting& total, const VarSlice& slice) {
  const Value& v = total.get(slice.var);
  if (!slice.range) return v;
  const Vec& d = v.vec();
  auto [lo, hi] = *slice.range;
  if (hi > d.size() || lo >= hi) fail(Errc::DomainError, "slice out of range on '" + slice.var + "'");
  return Value::vec(Vec(d.begin() + static_cast<std::ptrdiff_t>(lo),
                        d.begin() + static_cast<std::ptrdiff_t>(hi)));
}

Setting interchange(const CausalModel& model, const Setting& base,
                    const std::vector<std::pair<Setting, std::vector<VarSlice>>>& sources) {
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j)
      for (const auto& a : sources[i].second)
        for (const auto& b : sources[j].second)
          if (a.overlaps(b))
            fail(Errc::OverlappingTargets, "var-sets intersect at '" + a.var + "'");

  Intervention iv;
  for (const auto& [src_input, slices] : sources) {
    if (slices.empty()) continue;
    Setting src_total = run(model, src_input);
    for (const auto& s : slices) iv.entries.push_back({s, slice_value(src_total, s)});
  }
  Setting total = run_intervened(model, base, iv);
  return get_values(model, total, model.output_order());
}

const Alignment::Entry* Alignment::find(const std::string& high_var) const {
  for (const auto& e : entries)
    if (e.high_var == high_var) return &e;
  return nullptr;
}

const Alignment::Entry& Alignment::at(const std::string& high_var) const {
  const Entry* e = find(high_var);
  if (!e) fail(Errc::UnknownVariable, "no alignment block for '" + high_var + "'");
  return *e;
}

std::vector<std::string> Alignment::aligned_intermediates(const CausalModel& high) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (high.var(e.high_var).kind == VarKind::Intermediate) out.push_back(e.high_var);
  return out;
}

Setting input_from_ids(const CausalModel& model, const std::vector<std::int64_t>& ids) {
  const auto& order = model.input_order();
  if (ids.size() != order.size())
    fail(Errc::DomainError, "expected " + std::to_string(order.size()) + " input ids");
  Setting s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Domain& d = model.var(order[i]).domain;
    if (d.kind != Domain::Kind::Finite)
      fail(Errc::DomainError, "input '" + order[i] + "' is not finite-domain");
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= d.values.size())
      fail(Errc::OutOfRange, "input id " + std::to_string(ids[i]) + " for '" + order[i] + "'");
    s.set(order[i], d.values[static_cast<std::size_t>(ids[i])]);
  }
  return s;
}

std::int64_t output_to_id(const CausalModel& model, const Setting& outputs) {
  const auto& order = model.output_order();
  if (order.size() != 1) fail(Errc::Config, "output_to_id expects a single output variable");
  const Domain& d = model.var(order[0]).domain;
  const Value& v = outputs.get(order[0]);
  for (std::size_t i = 0; i < d.values.size(); ++i)
    if (d.values[i] == v) return static_cast<std::int64_t>(i);
  fail(Errc::DomainError, "output value not in domain enumeration");
}

std::int64_t high_interchange_id(const CausalModel& high, const CounterfactualExample& ex) {
  Setting base = input_from_ids(high, ex.base);
  std::vector<std::pair<Setting, std::vector<VarSlice>>> srcs;
  for (std::size_t j = 0; j < ex.sources.size(); ++j) {
    std::vector<VarSlice> slices;
    for (const auto& hv : ex.targets[j]) slices.push_back(VarSlice::whole(hv));
    srcs.push_back({input_from_ids(high, ex.sources[j]), std::move(slices)});
  }
  return output_to_id(high, interchange(high, base, srcs));
}

namespace {

// Translate one example's high-level targets into low-level slice sets.
std::vector<std::pair<Setting, std::vector<VarSlice>>> low_sources(
    const CausalModel& low, const Alignment& align, const CounterfactualExample& ex) {
  std::vector<std::pair<Setting, std::vector<VarSlice>>> srcs;
  for (std::size_t j = 0; j < ex.sources.size(); ++j) {
    std::vector<VarSlice> slices;
    for (const auto& hv : ex.targets[j]) {
      const auto& entry = align.at(hv);
      slices.insert(slices.end(), entry.block.begin(), entry.block.end());
    }
    srcs.push_back({input_from_ids(low, ex.sources[j]), std::move(slices)});
  }
  return srcs;
}

}  // namespace

double iia(const CausalModel& low, const CausalModel& high, const Alignment& align,
           const std::vector<CounterfactualExample>& dataset, const IiaOptions& opts) {
  if (dataset.empty()) return 1.0;
  const auto& out_var = high.output_order();
  if (out_var.size() != 1) fail(Errc::Config, "iia expects a single high-level output");
  const Alignment::Entry& out_entry = align.at(out_var[0]);

  std::int64_t matches = 0;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dataset.size());
#pragma omp parallel for schedule(static) reduction(+ : matches)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const CounterfactualExample& ex = dataset[static_cast<std::size_t>(i)];
    Setting low_out = interchange(low, input_from_ids(low, ex.base),
                                  low_sources(low, align, ex));
    std::vector<Value> block_vals;
    for (const auto& s : out_entry.block) block_vals.push_back(slice_value(low_out, s));
    Value translated = out_entry.tau(block_vals);

    Setting high_out_setting;
    high_out_setting.set(out_var[0],
                         high.var(out_var[0]).domain.values[static_cast<std::size_t>(
                             high_interchange_id(high, ex))]);
    if (translated.equals(high_out_setting.get(out_var[0]), opts.value_tol)) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(dataset.size());
}

AbstractionReport check_constructive_abstraction(const CausalModel& low,
                                                 const CausalModel& high,
                                                 const Alignment& align,
                                                 const AbstractionCheckOptions& opts) {
  // Enumerable low-level inputs.
  std::vector<std::size_t> input_card;
  for (const auto& id : low.input_order()) {
    const Domain& d = low.var(id).domain;
    if (d.kind != Domain::Kind::Finite)
      fail(Errc::EnumerationTooLarge, "input '" + id + "' is not enumerable");
    input_card.push_back(d.values.size());
  }
  std::size_t num_inputs = 1;
  for (std::size_t c : input_card) num_inputs *= c;

  const std::vector<std::string> ivars = align.aligned_intermediates(high);

  // Total checks: inputs x sum over subsets of |inputs|^{subset size}.
  std::size_t per_base = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << ivars.size()); ++mask) {
    std::size_t combos = 1;
    for (std::size_t b = 0; b < ivars.size(); ++b)
      if (mask & (std::size_t{1} << b)) combos *= num_inputs;
    per_base += combos;
  }
  if (num_inputs * per_base > opts.max_checks)
    fail(Errc::EnumerationTooLarge,
         std::to_string(num_inputs * per_base) + " checks exceed cap");

  // Enumerate id tuples for the input variables.
  std::vector<std::vector<std::int64_t>> all_inputs;
  std::vector<std::int64_t> cur(input_card.size(), 0);
  for (;;) {
    all_inputs.push_back(cur);
    std::size_t k = input_card.size();
    while (k > 0) {
      --k;
      if (++cur[k] < static_cast<std::int64_t>(input_card[k])) break;
      cur[k] = 0;
      if (k == 0) goto done;
    }
    if (input_card.empty()) break;
  }
done:;

  AbstractionReport report;
  for (const auto& base_ids : all_inputs) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << ivars.size()); ++mask) {
      std::vector<std::string> targeted;
      for (std::size_t b = 0; b < ivars.size(); ++b)
        if (mask & (std::size_t{1} << b)) targeted.push_back(ivars[b]);

      // Enumerate one source input per targeted variable.
      std::vector<std::size_t> src_idx(targeted.size(), 0);
      for (;;) {
        CounterfactualExample ex;
        ex.base = base_ids;
        for (std::size_t t = 0; t < targeted.size(); ++t) {
          ex.sources.push_back(all_inputs[src_idx[t]]);
          ex.targets.push_back({targeted[t]});
        }

        // Low side: interchange-style intervention, full total setting.
        Setting base = input_from_ids(low, ex.base);
        Intervention iv;
        std::vector<std::vector<Value>> harvested(targeted.size());
        for (std::size_t t = 0; t < targeted.size(); ++t) {
          Setting src_total = run(low, input_from_ids(low, ex.sources[t]));
          for (const auto& s : align.at(targeted[t]).block) {
            Value hv = slice_value(src_total, s);
            harvested[t].push_back(hv);
            iv.entries.push_back({s, std::move(hv)});
          }
        }
        Setting low_total = run_intervened(low, base, iv);

        // High side: translated intervention on translated input.
        Setting high_base = input_from_ids(high, ex.base);
        Intervention high_iv;
        for (std::size_t t = 0; t < targeted.size(); ++t)
          high_iv.entries.push_back(
              {VarSlice::whole(targeted[t]), align.at(targeted[t]).tau(harvested[t])});
        Setting high_total = run_intervened(high, high_base, high_iv);

        ++report.checks;
        for (const auto& e : align.entries) {
          std::vector<Value> block_vals;
          for (const auto& s : e.block) block_vals.push_back(slice_value(low_total, s));
          if (!e.tau(block_vals).equals(high_total.get(e.high_var), opts.value_tol)) {
            report.holds = false;
            if (report.counterexamples.size() < opts.max_counterexamples) {
              AbstractionReport::Counterexample ce;
              ce.base = ex.base;
              for (std::size_t t = 0; t < targeted.size(); ++t)
                ce.sources.push_back({ex.sources[t], targeted[t]});
              ce.mismatch_var = e.high_var;
              report.counterexamples.push_back(std::move(ce));
            }
            break;
          }
        }

        // Advance source combo.
        std::size_t k = targeted.size();
        bool carry = true;
        while (k > 0 && carry) {
          --k;
          if (++src_idx[k] < all_inputs.size()) carry = false;
          else src_idx[k] = 0;
        }
        if (targeted.empty() || carry) break;
      }
    }
  }
  return report;
}

}  // namespace das
