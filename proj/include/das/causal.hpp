#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "das/value.hpp"

namespace das {

enum class VarKind { Input, Intermediate, Output };

const char* var_kind_name(VarKind k);

// Value domain: a finite enumeration of values, or a real vector space of a
// fixed dimension.
struct Domain {
  enum class Kind { Finite, Vector };
  Kind kind = Kind::Finite;
  std::vector<Value> values;  // Finite
  std::size_t dim = 0;        // Vector

  static Domain finite(std::vector<Value> vals);
  static Domain booleans() { return finite({Value::sym(0), Value::sym(1)}); }
  static Domain symbols_upto(std::int64_t n);  // {0, ..., n-1}
  static Domain vector(std::size_t dim);

  bool contains(const Value& v, double tol = 0.0) const;
  std::size_t value_dim() const;  // vector dim, or 1 for symbols
};

struct Variable {
  std::string id;
  VarKind kind = VarKind::Input;
  Domain domain;
};

using Mechanism = std::function<Value(const std::vector<Value>&)>;

// Partial or total assignment of values to variables.
class Setting {
 public:
  Setting() = default;

  bool has(const std::string& var) const { return m_.count(var) != 0; }
  const Value& get(const std::string& var) const;
  void set(const std::string& var, Value v) { m_[var] = std::move(v); }
  std::size_t size() const { return m_.size(); }
  const std::map<std::string, Value>& items() const { return m_; }

 private:
  std::map<std::string, Value> m_;
};

// A slice of a low-level variable: the whole value, or a component range
// [lo, hi) of a vector value.
struct VarSlice {
  std::string var;
  std::optional<std::pair<std::size_t, std::size_t>> range;

  static VarSlice whole(std::string v) { return {std::move(v), std::nullopt}; }
  static VarSlice comps(std::string v, std::size_t lo, std::size_t hi) {
    return {std::move(v), std::make_pair(lo, hi)};
  }
  bool overlaps(const VarSlice& o) const;
};

// A hard intervention: fix variable slices to constants.
struct Intervention {
  struct Entry {
    VarSlice slice;
    Value value;
  };
  std::vector<Entry> entries;

  bool empty() const { return entries.empty(); }
};

// Finite acyclic causal model. Immutable once built; all operations are pure.
class CausalModel {
 public:
  CausalModel() = default;

  // Variables must be added parents-first; validated on finish().
  void add_variable(Variable var, std::vector<std::string> parents, Mechanism mech);
  void finish();  // validates acyclicity, kinds, mechanism presence

  std::size_t num_vars() const { return vars_.size(); }
  const std::vector<Variable>& variables() const { return vars_; }
  const Variable& var(const std::string& id) const;
  bool has_var(const std::string& id) const { return index_.count(id) != 0; }
  const std::vector<std::string>& parents(const std::string& id) const;
  const Mechanism& mechanism(const std::string& id) const;
  const std::vector<std::string>& input_order() const { return inputs_; }
  const std::vector<std::string>& output_order() const { return outputs_; }
  const std::vector<std::string>& topo_order() const { return topo_; }

  bool is_total(const Setting& s) const;

  // Copy with one variable's mechanism replaced (soft interventions build
  // modified models rather than mutating).
  CausalModel with_mechanism(const std::string& id, Mechanism mech) const;

 private:
  friend Setting run(const CausalModel&, const Setting&);
  friend Setting run_intervened(const CausalModel&, const Setting&, const Intervention&);

  std::vector<Variable> vars_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> parents_;
  std::vector<Mechanism> mech_;
  std::vector<std::string> inputs_, outputs_, topo_;
  bool finished_ = false;
};

// Maps each high-level variable to a block of low-level slices plus a
// translation function from the block's low-level values to a high value.
struct Alignment {
  struct Entry {
    std::string high_var;
    std::vector<VarSlice> block;
    std::function<Value(const std::vector<Value>&)> tau;
  };
  std::vector<Entry> entries;

  const Entry* find(const std::string& high_var) const;
  const Entry& at(const std::string& high_var) const;
  // High-level intermediate variables that have blocks, in entry order.
  std::vector<std::string> aligned_intermediates(const CausalModel& high) const;
};

Setting run(const CausalModel& model, const Setting& input);
Setting run_intervened(const CausalModel& model, const Setting& input,
                       const Intervention& iv);

Setting get_values(const CausalModel& model, const Setting& total,
                   const std::vector<std::string>& vars);

// Extract the value of a slice from a total setting (vector slices
// concatenate to a Vec; whole symbolic slices pass through).
Value slice_value(const Setting& total, const VarSlice& slice);

// Interchange intervention: harvest each var-set's values from a source run,
// fix them, run the base, return the output restriction.
Setting interchange(const CausalModel& model, const Setting& base,
                    const std::vector<std::pair<Setting, std::vector<VarSlice>>>& sources);

// One row of a counterfactual dataset. Inputs and outputs are domain indices
// (position within each variable's finite domain enumeration).
struct CounterfactualExample {
  std::vector<std::int64_t> base;
  std::vector<std::vector<std::int64_t>> sources;
  std::vector<std::vector<std::string>> targets;  // high vars, parallel to sources
  std::int64_t gold = 0;
};

// Decode domain indices into an input setting of `model`.
Setting input_from_ids(const CausalModel& model, const std::vector<std::int64_t>& ids);
// Inverse of input_from_ids for the output variable: index of the output
// value within the output variable's finite domain.
std::int64_t output_to_id(const CausalModel& model, const Setting& outputs);

// High-level interchange output for an example (this recomputes the gold).
std::int64_t high_interchange_id(const CausalModel& high, const CounterfactualExample& ex);

struct IiaOptions {
  double value_tol = 1e-9;  // vector comparisons
};

// Fraction of examples where the tau-translated low-level interchange output
// equals the high-level interchange output. Order-independent count;
// parallel-safe.
double iia(const CausalModel& low, const CausalModel& high, const Alignment& align,
           const std::vector<CounterfactualExample>& dataset,
           const IiaOptions& opts = {});

struct AbstractionCheckOptions {
  std::size_t max_checks = 1'000'000;
  std::size_t max_counterexamples = 100;
  double value_tol = 1e-6;
};

struct AbstractionReport {
  bool holds = true;
  std::size_t checks = 0;
  struct Counterexample {
    std::vector<std::int64_t> base;                              // input ids
    std::vector<std::pair<std::vector<std::int64_t>, std::string>> sources;  // (input ids, high var)
    std::string mismatch_var;
  };
  std::vector<Counterexample> counterexamples;
};

// Exhaustively verifies tau(L_{I<-i}(x)) = H_{tau(I<-i)}(tau(x)) over all
// inputs and all interchange-style interventions whose values are harvested
// from some input.
AbstractionReport check_constructive_abstraction(const CausalModel& low,
                                                 const CausalModel& high,
                                                 const Alignment& align,
                                                 const AbstractionCheckOptions& opts = {});

}  // namespace das
