#include "das/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "das/rng.hpp"

namespace das {

namespace {
Value bsym(bool b) { return Value::sym(b ? 1 : 0); }
}  // namespace

CausalModel conjunction_high() {
  CausalModel m;
  m.add_variable({"P", VarKind::Input, Domain::booleans()}, {}, nullptr);
  m.add_variable({"Q", VarKind::Input, Domain::booleans()}, {}, nullptr);
  m.add_variable({"V1", VarKind::Intermediate, Domain::booleans()}, {"P"},
                 [](const std::vector<Value>& a) { return a[0]; });
  m.add_variable({"V2", VarKind::Intermediate, Domain::booleans()}, {"Q"},
                 [](const std::vector<Value>& a) { return a[0]; });
  m.add_variable({"V3", VarKind::Output, Domain::booleans()}, {"V1", "V2"},
                 [](const std::vector<Value>& a) {
                   return bsym(a[0].sym() == 1 && a[1].sym() == 1);
                 });
  m.finish();
  return m;
}

CausalModel conjunction_identity_high() {
  CausalModel m;
  m.add_variable({"P", VarKind::Input, Domain::booleans()}, {}, nullptr);
  m.add_variable({"Q", VarKind::Input, Domain::booleans()}, {}, nullptr);
  m.add_variable({"F", VarKind::Intermediate, Domain::booleans()}, {"P"},
                 [](const std::vector<Value>& a) { return a[0]; });
  m.add_variable({"V3", VarKind::Output, Domain::booleans()}, {"F", "Q"},
                 [](const std::vector<Value>& a) {
                   return bsym(a[0].sym() == 1 && a[1].sym() == 1);
                 });
  m.finish();
  return m;
}

ConjunctionFixture conjunction_fixture() {
  ConjunctionFixture f;
  f.high = conjunction_high();
  f.net = conjunction_net();
  f.net_ptr = std::make_shared<const FeedForwardNet>(f.net);
  VarNames names;
  names.inputs = {"X1", "X2"};
  names.layer_names = {"H"};
  names.output = "O";
  f.net_model = as_causal_model(f.net_ptr, names);

  // The network's weight matrix itself: unrotating H by -20 degrees recovers
  // the raw input pair in the rotated coordinates.
  f.golden_rotation = f.net.layers[0].W;
  f.partition = SubspacePartition::packed(2, {1, 1});
  f.var_map = {"V1", "V2"};

  f.golden_align.target_var = "H";
  f.golden_align.rotation = f.golden_rotation;
  f.golden_align.partition = f.partition;
  f.golden_align.var_map = f.var_map;
  f.golden_align.tau_out = make_net_tau_out(f.net);

  f.localist_align = f.golden_align;
  f.localist_align.rotation = Tensor::identity(2);

  auto tau_id = [](const std::vector<Value>& v) { return v[0]; };
  auto tau_mid = [](const std::vector<Value>& v) { return bsym(v[0].vec()[0] > 0.5); };
  auto tau_out = [](const std::vector<Value>& v) { return bsym(v[0].vec()[0] > 0.0); };
  f.localist_var_align.entries = {
      {"P", {VarSlice::whole("X1")}, tau_id},
      {"Q", {VarSlice::whole("X2")}, tau_id},
      {"V1", {VarSlice::comps("H", 0, 1)}, tau_mid},
      {"V2", {VarSlice::comps("H", 1, 2)}, tau_mid},
      {"V3", {VarSlice::whole("O")}, tau_out},
  };

  for (std::int64_t b1 = 0; b1 < 2; ++b1)
    for (std::int64_t b2 = 0; b2 < 2; ++b2)
      for (std::int64_t s1 = 0; s1 < 2; ++s1)
        for (std::int64_t s2 = 0; s2 < 2; ++s2) {
          for (const char* v : {"V1", "V2"}) {
            CounterfactualExample ex;
            ex.base = {b1, b2};
            ex.sources = {{s1, s2}};
            ex.targets = {{v}};
            ex.gold = high_interchange_id(f.high, ex);
            f.single_source.push_back(std::move(ex));
          }
        }
  f.exhaustive = f.single_source;
  for (std::int64_t b1 = 0; b1 < 2; ++b1)
    for (std::int64_t b2 = 0; b2 < 2; ++b2)
      for (std::int64_t a1 = 0; a1 < 2; ++a1)
        for (std::int64_t a2 = 0; a2 < 2; ++a2)
          for (std::int64_t c1 = 0; c1 < 2; ++c1)
            for (std::int64_t c2 = 0; c2 < 2; ++c2) {
              CounterfactualExample ex;
              ex.base = {b1, b2};
              ex.sources = {{a1, a2}, {c1, c2}};
              ex.targets = {{"V1"}, {"V2"}};
              ex.gold = high_interchange_id(f.high, ex);
              f.exhaustive.push_back(std::move(ex));
            }
  return f;
}

std::int64_t equality_label(std::int64_t w, std::int64_t x, std::int64_t y, std::int64_t z) {
  return (w == x) == (y == z) ? 1 : 0;
}

CausalModel equality_high(EqualityVariant variant, std::size_t pool) {
  const auto ids = Domain::symbols_upto(static_cast<std::int64_t>(pool));
  CausalModel m;
  for (const char* v : {"w", "x", "y", "z"})
    m.add_variable({v, VarKind::Input, ids}, {}, nullptr);

  auto eq = [](const std::vector<Value>& a) { return bsym(a[0].sym() == a[1].sym()); };
  switch (variant) {
    case EqualityVariant::BothRelations:
      m.add_variable({"left_eq", VarKind::Intermediate, Domain::booleans()}, {"w", "x"}, eq);
      m.add_variable({"right_eq", VarKind::Intermediate, Domain::booleans()}, {"y", "z"}, eq);
      m.add_variable({"label", VarKind::Output, Domain::booleans()},
                     {"left_eq", "right_eq"}, [](const std::vector<Value>& a) {
                       return bsym(a[0].sym() == a[1].sym());
                     });
      break;
    case EqualityVariant::LeftOnly:
      m.add_variable({"left_eq", VarKind::Intermediate, Domain::booleans()}, {"w", "x"}, eq);
      m.add_variable({"label", VarKind::Output, Domain::booleans()},
                     {"left_eq", "y", "z"}, [](const std::vector<Value>& a) {
                       return bsym(a[0].sym() == (a[1].sym() == a[2].sym() ? 1 : 0));
                     });
      break;
    case EqualityVariant::IdentityOfFirst:
      m.add_variable({"first_id", VarKind::Intermediate, ids}, {"w"},
                     [](const std::vector<Value>& a) { return a[0]; });
      m.add_variable({"label", VarKind::Output, Domain::booleans()},
                     {"first_id", "x", "y", "z"}, [](const std::vector<Value>& a) {
                       return bsym(equality_label(a[0].sym(), a[1].sym(), a[2].sym(),
                                                  a[3].sym()) == 1);
                     });
      break;
  }
  m.finish();
  return m;
}

std::vector<std::string> equality_intermediates(EqualityVariant variant) {
  switch (variant) {
    case EqualityVariant::BothRelations: return {"left_eq", "right_eq"};
    case EqualityVariant::LeftOnly: return {"left_eq"};
    case EqualityVariant::IdentityOfFirst: return {"first_id"};
  }
  return {};
}

const std::vector<std::int64_t>& arithmetic_class_values() {
  static const std::vector<std::int64_t> vals = [] {
    std::set<std::int64_t> s;
    for (std::int64_t x = 1; x <= 6; ++x)
      for (std::int64_t y = 1; y <= 6; ++y)
        for (std::int64_t z = 1; z <= 6; ++z) s.insert((x + y) * z);
    return std::vector<std::int64_t>(s.begin(), s.end());
  }();
  return vals;
}

namespace {
std::int64_t arithmetic_class_of(std::int64_t value) {
  const auto& vals = arithmetic_class_values();
  auto it = std::lower_bound(vals.begin(), vals.end(), value);
  if (it == vals.end() || *it != value)
    fail(Errc::OutOfRange, "value " + std::to_string(value) + " is not a task outcome");
  return it - vals.begin();
}

Domain digit_domain() {
  std::vector<Value> v;
  for (std::int64_t d = 1; d <= 6; ++d) v.push_back(Value::sym(d));
  return Domain::finite(std::move(v));
}

Domain range_domain(std::int64_t lo, std::int64_t hi) {
  std::vector<Value> v;
  for (std::int64_t d = lo; d <= hi; ++d) v.push_back(Value::sym(d));
  return Domain::finite(std::move(v));
}

Domain product_domain() {
  std::set<std::int64_t> s;
  for (std::int64_t a = 1; a <= 6; ++a)
    for (std::int64_t b = 1; b <= 6; ++b) s.insert(a * b);
  std::vector<Value> v;
  for (auto p : s) v.push_back(Value::sym(p));
  return Domain::finite(std::move(v));
}
}  // namespace

std::int64_t arithmetic_label(std::int64_t x, std::int64_t y, std::int64_t z) {
  if (x < 1 || x > 6 || y < 1 || y > 6 || z < 1 || z > 6)
    fail(Errc::OutOfRange, "digits must lie in 1..6");
  return arithmetic_class_of((x + y) * z);
}

CausalModel arithmetic_high(ArithmeticVariant variant) {
  CausalModel m;
  for (const char* v : {"x", "y", "z"})
    m.add_variable({v, VarKind::Input, digit_domain()}, {}, nullptr);
  const Domain classes =
      Domain::symbols_upto(static_cast<std::int64_t>(arithmetic_class_values().size()));

  switch (variant) {
    case ArithmeticVariant::AddFirst:
      m.add_variable({"sum", VarKind::Intermediate, range_domain(2, 12)}, {"x", "y"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(a[0].sym() + a[1].sym());
                     });
      m.add_variable({"z_id", VarKind::Intermediate, digit_domain()}, {"z"},
                     [](const std::vector<Value>& a) { return a[0]; });
      m.add_variable({"label", VarKind::Output, classes}, {"sum", "z_id"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(arithmetic_class_of(a[0].sym() * a[1].sym()));
                     });
      break;
    case ArithmeticVariant::MultiplyFirst: {
      auto prod = [](const std::vector<Value>& a) {
        return Value::sym(a[0].sym() * a[1].sym());
      };
      m.add_variable({"xz", VarKind::Intermediate, product_domain()}, {"x", "z"}, prod);
      m.add_variable({"yz", VarKind::Intermediate, product_domain()}, {"y", "z"}, prod);
      m.add_variable({"label", VarKind::Output, classes}, {"xz", "yz"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(arithmetic_class_of(a[0].sym() + a[1].sym()));
                     });
      break;
    }
    case ArithmeticVariant::SumOnly:
      m.add_variable({"sum", VarKind::Intermediate, range_domain(2, 12)}, {"x", "y"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(a[0].sym() + a[1].sym());
                     });
      m.add_variable({"label", VarKind::Output, classes}, {"sum", "z"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(arithmetic_class_of(a[0].sym() * a[1].sym()));
                     });
      break;
    case ArithmeticVariant::IdentityOfY:
      m.add_variable({"y_id", VarKind::Intermediate, digit_domain()}, {"y"},
                     [](const std::vector<Value>& a) { return a[0]; });
      m.add_variable({"label", VarKind::Output, classes}, {"x", "y_id", "z"},
                     [](const std::vector<Value>& a) {
                       return Value::sym(
                           arithmetic_class_of((a[0].sym() + a[1].sym()) * a[2].sym()));
                     });
      break;
  }
  m.finish();
  return m;
}

std::vector<std::string> arithmetic_intermediates(ArithmeticVariant variant) {
  switch (variant) {
    case ArithmeticVariant::AddFirst: return {"sum", "z_id"};
    case ArithmeticVariant::MultiplyFirst: return {"xz", "yz"};
    case ArithmeticVariant::SumOnly: return {"sum"};
    case ArithmeticVariant::IdentityOfY: return {"y_id"};
  }
  return {};
}

void GenConfig::validate() const {
  if (num_examples == 0) fail(Errc::Config, "num_examples must be positive");
  if (id_hi < id_lo) fail(Errc::Config, "empty id range");
}

namespace {

std::vector<std::int64_t> draw_ids(Rng& rng, std::size_t count, const GenConfig& cfg) {
  std::vector<std::int64_t> ids(count);
  for (auto& v : ids) v = rng.uniform_int(cfg.id_lo, cfg.id_hi);
  return ids;
}

bool binary_output(const CausalModel& high) {
  return high.var(high.output_order().at(0)).domain.values.size() == 2;
}

}  // namespace

std::vector<CounterfactualExample> gen_counterfactuals(
    const CausalModel& high, const std::vector<std::string>& variables,
    const GenConfig& cfg) {
  cfg.validate();
  if (variables.empty() || variables.size() > 2)
    fail(Errc::Config, "expected one or two intervenable variables");
  const std::size_t num_inputs = high.input_order().size();
  const bool balance = cfg.balance_binary && binary_output(high);

  std::vector<CounterfactualExample> out(cfg.num_examples);
  Rng root(cfg.seed);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cfg.num_examples);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i));
    const std::int64_t want = static_cast<std::int64_t>(i) % 2;
    for (int attempt = 0;; ++attempt) {
      CounterfactualExample ex;
      ex.base = draw_ids(rng, num_inputs, cfg);
      bool two = variables.size() == 2 && rng.coin();
      if (two) {
        ex.sources = {draw_ids(rng, num_inputs, cfg), draw_ids(rng, num_inputs, cfg)};
        ex.targets = {{variables[0]}, {variables[1]}};
      } else {
        std::size_t which =
            variables.size() == 2 ? static_cast<std::size_t>(rng.uniform_int(0, 1)) : 0;
        ex.sources = {draw_ids(rng, num_inputs, cfg)};
        ex.targets = {{variables[which]}};
      }
      ex.gold = high_interchange_id(high, ex);
      if (!balance || ex.gold == want || attempt > 10000) {
        out[static_cast<std::size_t>(i)] = std::move(ex);
        break;
      }
    }
  }
  return out;
}

std::vector<LabeledExample> gen_labeled(const CausalModel& high, const GenConfig& cfg) {
  cfg.validate();
  const std::size_t num_inputs = high.input_order().size();
  const bool balance = cfg.balance_binary && binary_output(high);

  std::vector<LabeledExample> out(cfg.num_examples);
  Rng root(cfg.seed);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cfg.num_examples);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = root.fork(static_cast<std::uint64_t>(i) ^ 0x7ab5ULL);
    const std::int64_t want = static_cast<std::int64_t>(i) % 2;
    for (int attempt = 0;; ++attempt) {
      LabeledExample ex;
      ex.inputs = draw_ids(rng, num_inputs, cfg);
      Setting total = run(high, input_from_ids(high, ex.inputs));
      Setting outs = get_values(high, total, high.output_order());
      ex.label = output_to_id(high, outs);
      if (!balance || ex.label == want || attempt > 10000) {
        out[static_cast<std::size_t>(i)] = std::move(ex);
        break;
      }
    }
  }
  return out;
}

std::size_t scaled_count(std::size_t paper_size, double scale, std::size_t floor_count) {
  const auto scaled =
      static_cast<std::size_t>(std::llround(static_cast<double>(paper_size) * scale));
  return std::max(floor_count, scaled);
}

}  // namespace das
